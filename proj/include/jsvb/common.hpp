#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jsvb {

// ============================================================
// Error handling
// ============================================================

enum class Errc {
  MissingMetadata,
  MissingCodeLink,
  MalformedCweId,
  NotACommitUrl,
  CommitNotFound,
  ParentMissing,
  TransportFailure,
  NoInsertionSite,
  ObfuscationSkipped,
  PayloadTooLarge,
  NoJsonFound,
  Timeout,
  NoVulnerableSamples,
  ParseError,
  IoError,
  ConfigError,
};

const char* errc_name(Errc code);

struct Error {
  Errc code;
  std::string message;

  std::string to_string() const;
};

// Minimal expected-style result. value() on an error aborts via throw,
// so callers must branch on ok() first.
template <typename T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}          // NOLINT(google-explicit-constructor)
  Result(Error error) : error_(std::move(error)) {}      // NOLINT(google-explicit-constructor)

  bool ok() const { return value_.has_value(); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { require_ok(); return *value_; }
  T& value() & { require_ok(); return *value_; }
  T&& take() && { require_ok(); return std::move(*value_); }

  const Error& error() const { require_err(); return *error_; }

 private:
  void require_ok() const;
  void require_err() const;

  std::optional<T> value_;
  std::optional<Error> error_;
};

class Status {
 public:
  Status() = default;
  Status(Error error) : error_(std::move(error)) {}      // NOLINT(google-explicit-constructor)

  bool ok() const { return !error_.has_value(); }
  explicit operator bool() const { return ok(); }
  const Error& error() const;

 private:
  std::optional<Error> error_;
};

[[noreturn]] void throw_bad_result_access(const std::optional<Error>& error);

template <typename T>
void Result<T>::require_ok() const {
  if (!value_.has_value()) throw_bad_result_access(error_);
}

template <typename T>
void Result<T>::require_err() const {
  if (!error_.has_value()) throw_bad_result_access(std::nullopt);
}

// ============================================================
// Deterministic hashing and randomness
// ============================================================

// FNV-1a, 64-bit. Stable across platforms; used for replay keys and seeds.
uint64_t fnv1a64(std::string_view data);

// splitmix64: tiny, well mixed, fully specified. All benchmark randomness
// flows through this so outputs are reproducible bit for bit.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next();

  // Unbiased only in the negligible-modulo sense; fine for sampling
  // insertion sites and catalog entries.
  uint64_t below(uint64_t bound);

  double unit();  // [0, 1)

 private:
  uint64_t state_;
};

// Per-file seed: hash(global seed, case id, path).
uint64_t derive_seed(uint64_t global_seed, std::string_view case_id, std::string_view path);

// ============================================================
// String helpers
// ============================================================

// Split on '\n'. A trailing newline does not produce a final empty element.
std::vector<std::string> split_lines(std::string_view text);

// Split keeping each line's terminator attached (last line may lack one).
// Concatenating the result reproduces the input byte for byte.
std::vector<std::string> split_lines_keepends(std::string_view text);

int count_lines(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool is_hex(std::string_view s);

// Last path component ("src/index.js" -> "index.js").
std::string basename_of(std::string_view path);

std::string to_hex(uint64_t v);

// True at [pos, pos+len) iff neither neighbouring byte is an identifier
// character [A-Za-z0-9_$].
bool mentions_token(std::string_view text, std::string_view needle);

// ============================================================
// Filesystem helpers
// ============================================================

Result<std::string> read_file(const std::string& path);
Status write_file(const std::string& path, std::string_view content);  // creates parents
std::vector<std::string> list_files_recursive(const std::string& dir);  // sorted relative paths
bool path_exists(const std::string& path);

// ============================================================
// Bounded parallel map
// ============================================================

// Runs fn(i) for i in [0, n) on up to `workers` threads (0 or 1 => inline).
// Results must be written to pre-sized slots; ordering of side effects is
// the caller's problem.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace jsvb
