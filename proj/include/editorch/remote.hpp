#pragma once

#include <cstdint>
#include <string>

#include "editorch/tools.hpp"

namespace editorch {

// Forwards a tool call to an external editor over HTTP. The endpoint receives
// {"call", "doc", "subtask", "seed"} and answers {"doc"} or {"error"}.
class RemoteToolAdapter {
 public:
  // url like "http://host:port/execute"
  explicit RemoteToolAdapter(std::string url, int timeout_seconds = 30);

  SceneDoc execute(const SceneDoc& doc, const ToolCall& call, const SubTask& subtask, std::uint64_t seed) const;

  static json request_body(const SceneDoc& doc, const ToolCall& call, const SubTask& subtask, std::uint64_t seed);
  // Throws Remote error on an {"error"} reply or a malformed body.
  static SceneDoc parse_response(const std::string& body);

 private:
  std::string host_;
  std::string path_;
  int timeout_;
};

}  // namespace editorch
