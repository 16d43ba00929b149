#pragma once

#include <optional>
#include <string>
#include <vector>

#include "editorch/common.hpp"

namespace editorch::fixtures {

struct ProtocolCase {
  std::string raw;
  std::optional<ErrorCode> error;  // nullopt: must parse
  std::string path;                // expected field path for schema errors
};

inline const std::vector<ProtocolCase>& protocol_corpus() {
  using E = ErrorCode;
  static const std::vector<ProtocolCase> cases = {
      // well-formed
      {R"({"tool":"flux_inpaint","arguments":{"region_number":3}})", std::nullopt, ""},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":1}})", std::nullopt, ""},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":1000}})", std::nullopt, ""},
      {R"({"arguments":{"region_number":2},"tool":"flux_inpaint"})", std::nullopt, ""},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":4,"instruction":["add_object","cake","none",";"]}})", std::nullopt, ""},
      {R"({"tool":"flux_inpaint","arguments":{"instruction":[],"region_number":7}})", std::nullopt, ""},
      {R"({ "tool" : "flux_inpaint" , "arguments" : { "region_number" : 5 } })", std::nullopt, ""},
      {R"({"tool":"qwen_image_edit","arguments":{}})", std::nullopt, ""},
      {R"({"tool":"qwen_image_edit","arguments":{"instruction":["recolor_background","gold",";"]}})", std::nullopt, ""},
      {R"({"tool":"flux_kontext_edit","arguments":{}})", std::nullopt, ""},
      {R"({"tool":"flux_kontext_edit","arguments":{"instruction":["replace_text","sale","deal",";"]}})", std::nullopt, ""},
      {R"({"tool":"sam2_segment","arguments":{}})", std::nullopt, ""},
      {R"({"tool":"deepseek_ocr","arguments":{}})", std::nullopt, ""},
      {R"({"tool":"qwen_layered","arguments":{}})", std::nullopt, ""},
      {R"({"tool":"qwen_bbox","arguments":{"instruction":["add_text","new","above","cake",";"]}})", std::nullopt, ""},
      {"\n{\"tool\":\"flux_inpaint\",\"arguments\":{\"region_number\":8}}\n", std::nullopt, ""},
      // malformed JSON
      {R"({"tool":"flux_inpaint","arguments":{"region_number":3})", E::Parse, ""},
      {R"({"tool":"flux_inpaint",})", E::Parse, ""},
      {R"()", E::Parse, ""},
      {R"(tool=flux_inpaint)", E::Parse, ""},
      {R"({'tool':'flux_inpaint'})", E::Parse, ""},
      {R"({"tool":"flux_inpaint" "arguments":{}})", E::Parse, ""},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":03}})", E::Parse, ""},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":3}}})", E::Parse, ""},
      // top-level shape
      {R"([])", E::Schema, "$"},
      {R"("flux_inpaint")", E::Schema, "$"},
      {R"(null)", E::Schema, "$"},
      {R"({})", E::Schema, "tool"},
      {R"({"arguments":{"region_number":3}})", E::Schema, "tool"},
      {R"({"tool":3,"arguments":{}})", E::Schema, "tool"},
      {R"({"tool":null,"arguments":{}})", E::Schema, "tool"},
      {R"({"tool":["flux_inpaint"],"arguments":{}})", E::Schema, "tool"},
      // unknown tools
      {R"({"tool":"nope"})", E::UnknownTool, "tool"},
      {R"({"tool":"Flux_Inpaint","arguments":{"region_number":3}})", E::UnknownTool, "tool"},
      {R"({"tool":"","arguments":{}})", E::UnknownTool, "tool"},
      // schema violations
      {R"({"tool":"flux_inpaint"})", E::Schema, "arguments"},
      {R"({"tool":"flux_inpaint","arguments":[3]})", E::Schema, "arguments"},
      {R"({"tool":"flux_inpaint","arguments":null})", E::Schema, "arguments"},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":3},"extra":1})", E::Schema, "extra"},
      {R"({"tool":"flux_inpaint","arguments":{}})", E::Schema, "arguments.region_number"},
      {R"({"tool":"flux_inpaint","arguments":{"instruction":["remove_object","cup",";"]}})", E::Schema, "arguments.region_number"},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":"3"}})", E::Schema, "arguments.region_number"},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":3.5}})", E::Schema, "arguments.region_number"},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":0}})", E::Schema, "arguments.region_number"},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":-2}})", E::Schema, "arguments.region_number"},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":true}})", E::Schema, "arguments.region_number"},
      {R"({"tool":"qwen_image_edit","arguments":{"region_number":2}})", E::Schema, "arguments.region_number"},
      {R"({"tool":"flux_inpaint","arguments":{"region_number":2,"strength":0.5}})", E::Schema, "arguments.strength"},
      {R"({"tool":"flux_kontext_edit","arguments":{"instruction":"recolor"}})", E::Schema, "arguments.instruction"},
      {R"({"tool":"flux_kontext_edit","arguments":{"instruction":["recolor_object",7]}})", E::Schema, "arguments.instruction[1]"},
  };
  return cases;
}

}  // namespace editorch::fixtures
