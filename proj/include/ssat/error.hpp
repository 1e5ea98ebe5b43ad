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

#ifndef SSAT_ERROR_HPP_
#define SSAT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace ssat
{

enum class ErrorKind {
  kUsage,      // bad arguments or malformed input data
  kArtifact,   // incompatible checkpoint / run artifacts
  kNumerical,  // non-finite values where finite ones are required
  kInvariant,  // violated library contract
};

class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // Process exit code for the CLI: 2 usage, 3 artifact, 4 numerical.
  int exit_code() const
  {
    switch (kind_) {
      case ErrorKind::kUsage:
        return 2;
      case ErrorKind::kArtifact:
        return 3;
      case ErrorKind::kNumerical:
        return 4;
      default:
        return 1;
    }
  }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_usage(const std::string & msg)
{
  throw Error(ErrorKind::kUsage, msg);
}
[[noreturn]] inline void fail_artifact(const std::string & msg)
{
  throw Error(ErrorKind::kArtifact, msg);
}
[[noreturn]] inline void fail_numerical(const std::string & msg)
{
  throw Error(ErrorKind::kNumerical, msg);
}
[[noreturn]] inline void fail_invariant(const std::string & msg)
{
  throw Error(ErrorKind::kInvariant, msg);
}

}  // namespace ssat

#endif  // SSAT_ERROR_HPP_
