#include "editorch/common.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace editorch {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Selector: return "selector-error";
    case ErrorCode::Verb: return "verb-error";
    case ErrorCode::Composition: return "composition-error";
    case ErrorCode::Index: return "index-error";
    case ErrorCode::UnknownTool: return "unknown-tool-error";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::Schema: return "schema-error";
    case ErrorCode::Coverage: return "coverage-error";
    case ErrorCode::Data: return "data-error";
    case ErrorCode::Membership: return "membership-error";
    case ErrorCode::Size: return "size-error";
    case ErrorCode::Config: return "config-error";
    case ErrorCode::StageDependency: return "stage-dependency-error";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Remote: return "remote-error";
  }
  return "error";
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Rng::logistic() {
  double u = uniform();
  // keep u inside (0, 1)
  u = std::clamp(u, 1e-12, 1.0 - 1e-12);
  return std::log(u / (1.0 - u));
}

std::string canonical_dump(const json& j) { return j.dump(); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace editorch
