// Copyright 2026 The ssat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ssat/config.hpp"

#include <cstdlib>
#include <fstream>

#include "ssat/error.hpp"

namespace ssat
{

namespace
{

std::string trim(const std::string & s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

Config Config::from_file(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    fail_usage("cannot open config file: " + path.string());
  }
  Config cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      fail_usage(
        path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) {
      fail_usage(path.string() + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.entries_[key] = trim(body.substr(eq + 1));
  }
  return cfg;
}

void Config::set(const std::string & key, const std::string & value)
{
  entries_[key] = value;
}

bool Config::has(const std::string & key) const
{
  return entries_.count(key) > 0;
}

std::optional<std::string> Config::get(const std::string & key) const
{
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::string Config::get_string(const std::string & key, const std::string & fallback) const
{
  return get(key).value_or(fallback);
}

double Config::get_double(const std::string & key, double fallback) const
{
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  char * end = nullptr;
  const double out = std::strtod(v->c_str(), &end);
  if (end != v->c_str() + v->size() || v->empty()) {
    fail_usage("config key " + key + ": not a number: " + *v);
  }
  return out;
}

int Config::get_int(const std::string & key, int fallback) const
{
  const double v = get_double(key, static_cast<double>(fallback));
  return static_cast<int>(v);
}

std::uint64_t Config::get_u64(const std::string & key, std::uint64_t fallback) const
{
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  char * end = nullptr;
  const unsigned long long out = std::strtoull(v->c_str(), &end, 10);
  if (end != v->c_str() + v->size() || v->empty()) {
    fail_usage("config key " + key + ": not an unsigned integer: " + *v);
  }
  return out;
}

bool Config::get_bool(const std::string & key, bool fallback) const
{
  const auto v = get(key);
  if (!v) {
    return fallback;
  }
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") {
    return true;
  }
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") {
    return false;
  }
  fail_usage("config key " + key + ": not a boolean: " + *v);
}

void Config::write(const std::filesystem::path & path) const
{
  std::ofstream out(path);
  if (!out) {
    fail_usage("cannot write config file: " + path.string());
  }
  for (const auto & [key, value] : entries_) {
    out << key << " = " << value << '\n';
  }
}

}  // namespace ssat
