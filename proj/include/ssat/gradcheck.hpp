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

#ifndef SSAT_GRADCHECK_HPP_
#define SSAT_GRADCHECK_HPP_

#include <functional>
#include <span>
#include <vector>

namespace ssat
{

struct GradCheckReport
{
  double max_rel_error = 0.0;
  int worst_coordinate = -1;
};

// Compares an analytic gradient against central finite differences at `point`:
// max over coordinates of |analytic - fd| / max(1, |analytic|). Throws
// Error(kNumerical) if any evaluation is non-finite.
GradCheckReport gradient_check(
  const std::function<double(std::span<const double>)> & f,
  const std::function<std::vector<double>(std::span<const double>)> & analytic_grad,
  std::span<const double> point, double step = 1e-5);

}  // namespace ssat

#endif  // SSAT_GRADCHECK_HPP_
