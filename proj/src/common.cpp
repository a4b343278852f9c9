#include "jsvb/common.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace fs = std::filesystem;

namespace jsvb {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MissingMetadata:     return "MissingMetadata";
    case Errc::MissingCodeLink:     return "MissingCodeLink";
    case Errc::MalformedCweId:      return "MalformedCweId";
    case Errc::NotACommitUrl:       return "NotACommitUrl";
    case Errc::CommitNotFound:      return "CommitNotFound";
    case Errc::ParentMissing:       return "ParentMissing";
    case Errc::TransportFailure:    return "TransportFailure";
    case Errc::NoInsertionSite:     return "NoInsertionSite";
    case Errc::ObfuscationSkipped:  return "ObfuscationSkipped";
    case Errc::PayloadTooLarge:     return "PayloadTooLarge";
    case Errc::NoJsonFound:         return "NoJsonFound";
    case Errc::Timeout:             return "Timeout";
    case Errc::NoVulnerableSamples: return "NoVulnerableSamples";
    case Errc::ParseError:          return "ParseError";
    case Errc::IoError:             return "IoError";
    case Errc::ConfigError:         return "ConfigError";
  }
  return "Unknown";
}

std::string Error::to_string() const {
  std::string out = errc_name(code);
  if (!message.empty()) {
    out += ": ";
    out += message;
  }
  return out;
}

const Error& Status::error() const {
  if (!error_.has_value()) throw_bad_result_access(std::nullopt);
  return *error_;
}

void throw_bad_result_access(const std::optional<Error>& error) {
  if (error.has_value()) {
    throw std::logic_error("accessed value of failed Result: " + error->to_string());
  }
  throw std::logic_error("accessed error of successful Result");
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t SplitMix64::next() {
  uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

uint64_t SplitMix64::below(uint64_t bound) {
  if (bound == 0) return 0;
  return next() % bound;
}

double SplitMix64::unit() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

uint64_t derive_seed(uint64_t global_seed, std::string_view case_id, std::string_view path) {
  std::string key;
  key.reserve(case_id.size() + path.size() + 1);
  key.append(case_id);
  key.push_back('\0');
  key.append(path);
  return fnv1a64(key) ^ global_seed;
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return out;
}

std::vector<std::string> split_lines_keepends(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, nl - start + 1));
    start = nl + 1;
  }
  return out;
}

int count_lines(std::string_view text) {
  return static_cast<int>(split_lines_keepends(text).size());
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool is_hex(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
    if (!ok) return false;
  }
  return true;
}

std::string basename_of(std::string_view path) {
  std::size_t pos = path.find_last_of("/\\");
  if (pos == std::string_view::npos) return std::string(path);
  return std::string(path.substr(pos + 1));
}

std::string to_hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

namespace {
bool ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c == '_' || c == '$';
}
}  // namespace

bool mentions_token(std::string_view text, std::string_view needle) {
  if (needle.empty()) return false;
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    bool left_ok = pos == 0 || !ident_char(text[pos - 1]);
    std::size_t end = pos + needle.size();
    bool right_ok = end >= text.size() || !ident_char(text[end]);
    if (left_ok && right_ok) return true;
    pos += 1;
  }
  return false;
}

Result<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Error{Errc::IoError, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Status write_file(const std::string& path, std::string_view content) {
  fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return Error{Errc::IoError, "cannot write " + path};
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) return Error{Errc::IoError, "short write to " + path};
  return {};
}

std::vector<std::string> list_files_recursive(const std::string& dir) {
  std::vector<std::string> out;
  std::error_code ec;
  fs::path root(dir);
  if (!fs::is_directory(root, ec)) return out;
  for (fs::recursive_directory_iterator it(root, ec), end; it != end && !ec; it.increment(ec)) {
    if (it->is_regular_file(ec)) {
      out.push_back(fs::relative(it->path(), root, ec).generic_string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool path_exists(const std::string& path) {
  std::error_code ec;
  return fs::exists(fs::path(path), ec);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace jsvb
