#include "editorch/remote.hpp"

#include "httplib.h"

namespace editorch {

RemoteToolAdapter::RemoteToolAdapter(std::string url, int timeout_seconds) : timeout_(timeout_seconds) {
  const auto scheme = url.find("://");
  const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (scheme == std::string::npos || url.substr(0, scheme) != "http")
    throw Error(ErrorCode::Config, "remote endpoint must be an http:// url", "remote_endpoint");
  host_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

json RemoteToolAdapter::request_body(const SceneDoc& doc, const ToolCall& call, const SubTask& subtask,
                                     std::uint64_t seed) {
  return json{{"call", json::parse(serialize_call(call))},
              {"doc", to_json(doc)},
              {"subtask", subtask.tokens()},
              {"seed", seed}};
}

SceneDoc RemoteToolAdapter::parse_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Remote, std::string("unparseable reply: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Remote, "reply must be an object");
  if (j.contains("error")) throw Error(ErrorCode::Remote, j["error"].dump());
  if (!j.contains("doc")) throw Error(ErrorCode::Remote, "reply has neither doc nor error");
  SceneDoc doc = scene_from_json(j["doc"]);
  validate(doc);
  return doc;
}

SceneDoc RemoteToolAdapter::execute(const SceneDoc& doc, const ToolCall& call, const SubTask& subtask,
                                    std::uint64_t seed) const {
  httplib::Client client(host_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  auto res = client.Post(path_, canonical_dump(request_body(doc, call, subtask, seed)), "application/json");
  if (!res) throw Error(ErrorCode::Remote, "request to " + host_ + path_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error(ErrorCode::Remote, "HTTP status " + std::to_string(res->status));
  return parse_response(res->body);
}

}  // namespace editorch
