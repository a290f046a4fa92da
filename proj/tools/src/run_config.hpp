#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace tlnmem::cli {

// Bad flags, malformed config lines, or values that fail to parse.  Mapped
// to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key-value run configuration.  Values come from an optional config
// file, overridden by command-line flags; every typed lookup records the
// default it fell back to, so serialize() reproduces the complete effective
// configuration of the run, not just the keys the user spelled out.
class RunConfig {
 public:
  RunConfig() = default;

  // Parses `key = value` lines.  '#' starts a comment, blank lines are
  // skipped, whitespace around key and value is trimmed.
  static RunConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_str(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  bool get_bool(const std::string& key, bool def) const;

  // Explicit values plus every consulted default, one `key = value` line
  // each, sorted by key.
  std::string serialize() const;
  void write(const std::string& path) const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> consulted_;
};

}  // namespace tlnmem::cli
