#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace editorch {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

enum class ErrorCode {
  Selector,
  Verb,
  Composition,
  Index,
  UnknownTool,
  Parse,
  Schema,
  Coverage,
  Data,
  Membership,
  Size,
  Config,
  StageDependency,
  Io,
  Remote,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string path = {})
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message +
                           (path.empty() ? std::string() : " (at " + path + ")")),
        code_(code),
        path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  // Field path for schema errors, e.g. "arguments.region_number".
  const std::string& path() const noexcept { return path_; }

 private:
  ErrorCode code_;
  std::string path_;
};

// 64-bit FNV-1a. Offset basis 0xcbf29ce484222325, prime 0x100000001b3.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

// splitmix64 finalizer; used for all seed derivation.
std::uint64_t mix64(std::uint64_t x);

// Order-sensitive combination of seed components.
template <typename... Parts>
std::uint64_t derive_seed(std::uint64_t root, Parts... parts) {
  std::uint64_t h = mix64(root);
  ((h = mix64(h ^ static_cast<std::uint64_t>(parts))), ...);
  return h;
}

inline std::uint64_t derive_seed_str(std::uint64_t root, std::string_view label) {
  return mix64(root ^ fnv1a64(label));
}

// Small deterministic generator. Draws are defined bit-exactly so that
// outcomes do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }
  // Standard logistic variate.
  double logistic();

 private:
  std::uint64_t state_;
};

// Canonical JSON: sorted keys, compact.
std::string canonical_dump(const json& j);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace editorch
