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

#ifndef SSAT_CONFIG_HPP_
#define SSAT_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace ssat
{

// Flat "key = value" configuration with namespaced keys (train.epochs,
// attack.epsilon, model.latent_other_width, ...). '#' starts a comment.
class Config
{
public:
  Config() = default;

  static Config from_file(const std::filesystem::path & path);

  void set(const std::string & key, const std::string & value);
  bool has(const std::string & key) const;

  std::optional<std::string> get(const std::string & key) const;
  std::string get_string(const std::string & key, const std::string & fallback) const;
  double get_double(const std::string & key, double fallback) const;
  int get_int(const std::string & key, int fallback) const;
  std::uint64_t get_u64(const std::string & key, std::uint64_t fallback) const;
  bool get_bool(const std::string & key, bool fallback) const;

  const std::map<std::string, std::string> & entries() const { return entries_; }

  void write(const std::filesystem::path & path) const;

private:
  std::map<std::string, std::string> entries_;
};

}  // namespace ssat

#endif  // SSAT_CONFIG_HPP_
