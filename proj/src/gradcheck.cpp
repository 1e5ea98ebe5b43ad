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

#include "ssat/gradcheck.hpp"

#include <cmath>
#include <string>

#include "ssat/error.hpp"

namespace ssat
{

GradCheckReport gradient_check(
  const std::function<double(std::span<const double>)> & f,
  const std::function<std::vector<double>(std::span<const double>)> & analytic_grad,
  std::span<const double> point, double step)
{
  std::vector<double> p(point.begin(), point.end());
  const auto analytic = analytic_grad(p);
  if (analytic.size() != p.size()) {
    fail_invariant("gradient_check: analytic gradient size mismatch");
  }
  GradCheckReport report;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + step;
    const double f_plus = f(p);
    p[i] = saved - step;
    const double f_minus = f(p);
    p[i] = saved;
    if (!std::isfinite(f_plus) || !std::isfinite(f_minus) || !std::isfinite(analytic[i])) {
      fail_numerical(
        "gradient_check: non-finite value at coordinate " + std::to_string(i));
    }
    const double fd = (f_plus - f_minus) / (2.0 * step);
    const double rel = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i]));
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coordinate = static_cast<int>(i);
    }
  }
  return report;
}

}  // namespace ssat
