#include "run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tlnmem::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Shortest decimal that parses back to exactly the same double, so a rerun
// from the effective config cannot drift.
std::string round_trip(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::stod(buf) == v) break;
  }
  return buf;
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": expected `key = value`, got `" + line + "`");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw UsageError(path + ":" + std::to_string(lineno) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string RunConfig::get_str(const std::string& key, const std::string& def) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  consulted_[key] = def;
  return def;
}

double RunConfig::get_double(const std::string& key, double def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    consulted_[key] = round_trip(def);
    return def;
  }
  try {
    std::size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key " + key + ": `" + it->second + "` is not a number");
  }
}

int RunConfig::get_int(const std::string& key, int def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    consulted_[key] = std::to_string(def);
    return def;
  }
  int v = 0;
  const char* first = it->second.data();
  const char* last = first + it->second.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw UsageError("config key " + key + ": `" + it->second + "` is not an integer");
  return v;
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    consulted_[key] = std::to_string(def);
    return def;
  }
  std::uint64_t v = 0;
  const char* first = it->second.data();
  const char* last = first + it->second.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw UsageError("config key " + key + ": `" + it->second +
                     "` is not an unsigned integer");
  return v;
}

bool RunConfig::get_bool(const std::string& key, bool def) const {
  auto it = values_.find(key);
  if (it == values_.end()) {
    consulted_[key] = def ? "true" : "false";
    return def;
  }
  const std::string& v = it->second;
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw UsageError("config key " + key + ": `" + v + "` is not a boolean");
}

std::string RunConfig::serialize() const {
  std::map<std::string, std::string> all = consulted_;
  for (const auto& [k, v] : values_) all[k] = v;
  std::ostringstream os;
  for (const auto& [k, v] : all) os << k << " = " << v << "\n";
  return os.str();
}

void RunConfig::write(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw UsageError("cannot write config to " + path);
  out << serialize();
}

}  // namespace tlnmem::cli
