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

#include "ssat/tape.hpp"

#include <algorithm>
#include <cmath>

#include "ssat/error.hpp"

namespace ssat::ad
{

std::size_t ParamStore::add_group(std::string name, std::size_t size)
{
  for (const auto & g : groups_) {
    if (g.name == name) {
      fail_invariant("ParamStore: duplicate group " + name);
    }
  }
  Group g{std::move(name), values_.size(), size};
  groups_.push_back(g);
  values_.resize(values_.size() + size, 0.0);
  grads_.resize(values_.size(), 0.0);
  return groups_.size() - 1;
}

std::size_t ParamStore::group_index(std::string_view name) const
{
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].name == name) {
      return i;
    }
  }
  fail_invariant("ParamStore: unknown group " + std::string(name));
}

std::span<double> ParamStore::values(std::size_t group)
{
  const auto & g = groups_[group];
  return {values_.data() + g.offset, g.size};
}

std::span<const double> ParamStore::values(std::size_t group) const
{
  const auto & g = groups_[group];
  return {values_.data() + g.offset, g.size};
}

std::span<double> ParamStore::grads(std::size_t group)
{
  const auto & g = groups_[group];
  return {grads_.data() + g.offset, g.size};
}

void ParamStore::zero_grads()
{
  std::fill(grads_.begin(), grads_.end(), 0.0);
}

bool ParamStore::values_finite() const
{
  for (double v : values_) {
    if (!std::isfinite(v)) {
      return false;
    }
  }
  return true;
}

namespace
{

void require_same_size(const char * op, std::size_t a, std::size_t b)
{
  if (a != b) {
    fail_invariant(
      std::string(op) + ": size mismatch (" + std::to_string(a) + " vs " +
      std::to_string(b) + ")");
  }
}

}  // namespace

Index Tape::push(std::vector<double> val, bool needs_grad, std::function<void(Tape &)> back)
{
  Node n;
  n.val = std::move(val);
  n.grad.assign(n.val.size(), 0.0);
  n.needs_grad = needs_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<Index>(nodes_.size() - 1);
}

std::span<const double> Tape::param_values(std::size_t group) const
{
  return static_cast<const ParamStore *>(params_)->values(group);
}

double Tape::scalar(Index i) const
{
  const auto & n = node(i);
  if (n.val.size() != 1) {
    fail_invariant("Tape::scalar on a node of size " + std::to_string(n.val.size()));
  }
  return n.val[0];
}

Index Tape::input(std::span<const double> v)
{
  return push(std::vector<double>(v.begin(), v.end()), true, nullptr);
}

Index Tape::constant(std::span<const double> v)
{
  return push(std::vector<double>(v.begin(), v.end()), false, nullptr);
}

Index Tape::scalar_constant(double v)
{
  return push(std::vector<double>{v}, false, nullptr);
}

Index Tape::add(Index a, Index b)
{
  const auto & va = node(a).val;
  const auto & vb = node(b).val;
  require_same_size("Tape::add", va.size(), vb.size());
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    out[i] = va[i] + vb[i];
  }
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    if (t.needs(a)) {
      auto & ga = t.node(a).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.needs(b)) {
      auto & gb = t.node(b).grad;
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Index Tape::sub(Index a, Index b)
{
  const auto & va = node(a).val;
  const auto & vb = node(b).val;
  require_same_size("Tape::sub", va.size(), vb.size());
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    out[i] = va[i] - vb[i];
  }
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    if (t.needs(a)) {
      auto & ga = t.node(a).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.needs(b)) {
      auto & gb = t.node(b).grad;
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Index Tape::mul(Index a, Index b)
{
  const auto & va = node(a).val;
  const auto & vb = node(b).val;
  require_same_size("Tape::mul", va.size(), vb.size());
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    out[i] = va[i] * vb[i];
  }
  const bool ng = needs(a) || needs(b);
  return push(std::move(out), ng, [a, b](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    const auto & va = t.node(a).val;
    const auto & vb = t.node(b).val;
    if (t.needs(a)) {
      auto & ga = t.node(a).grad;
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (t.needs(b)) {
      auto & gb = t.node(b).grad;
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Index Tape::scale(Index a, double k)
{
  const auto & va = node(a).val;
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    out[i] = k * va[i];
  }
  return push(std::move(out), needs(a), [a, k](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
  });
}

Index Tape::sum_list(std::span<const Index> xs)
{
  if (xs.empty()) {
    fail_invariant("Tape::sum_list: empty list");
  }
  std::vector<double> out(node(xs[0]).val.size(), 0.0);
  bool ng = false;
  for (Index x : xs) {
    const auto & v = node(x).val;
    require_same_size("Tape::sum_list", out.size(), v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    ng = ng || needs(x);
  }
  std::vector<Index> parts(xs.begin(), xs.end());
  return push(std::move(out), ng, [parts](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    for (Index x : parts) {
      if (!t.needs(x)) continue;
      auto & gx = t.node(x).grad;
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Index Tape::concat(std::span<const Index> xs)
{
  std::vector<double> out;
  bool ng = false;
  for (Index x : xs) {
    const auto & v = node(x).val;
    out.insert(out.end(), v.begin(), v.end());
    ng = ng || needs(x);
  }
  std::vector<Index> parts(xs.begin(), xs.end());
  return push(std::move(out), ng, [parts](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    std::size_t off = 0;
    for (Index x : parts) {
      auto & nx = t.node(x);
      if (nx.needs_grad) {
        for (std::size_t i = 0; i < nx.val.size(); ++i) nx.grad[i] += g[off + i];
      }
      off += nx.val.size();
    }
  });
}

Index Tape::slice(Index a, int offset, int len)
{
  const auto & va = node(a).val;
  std::vector<double> out(
    va.begin() + offset, va.begin() + offset + len);
  return push(std::move(out), needs(a), [a, offset, len](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    auto & ga = t.node(a).grad;
    for (int i = 0; i < len; ++i) ga[static_cast<std::size_t>(offset + i)] += g[static_cast<std::size_t>(i)];
  });
}

Index Tape::gather1(Index a, int i)
{
  return slice(a, i, 1);
}

Index Tape::tanh_op(Index a)
{
  const auto & va = node(a).val;
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = std::tanh(va[i]);
  return push(std::move(out), needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    const auto & y = t.node(t.cur_).val;
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Index Tape::exp_op(Index a)
{
  const auto & va = node(a).val;
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = std::exp(va[i]);
  return push(std::move(out), needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    const auto & y = t.node(t.cur_).val;
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Index Tape::sigmoid_op(Index a)
{
  const auto & va = node(a).val;
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-va[i]));
  return push(std::move(out), needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    const auto & y = t.node(t.cur_).val;
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Index Tape::softmax_op(Index a)
{
  const auto & va = node(a).val;
  std::vector<double> out(va.size());
  double mx = va.empty() ? 0.0 : *std::max_element(va.begin(), va.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    out[i] = std::exp(va[i] - mx);
    sum += out[i];
  }
  for (auto & v : out) v /= sum;
  return push(std::move(out), needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    const auto & y = t.node(t.cur_).val;
    auto & ga = t.node(a).grad;
    double gy_dot_y = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gy_dot_y += g[i] * y[i];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - gy_dot_y);
  });
}

Index Tape::clamped_log(Index a, double lo)
{
  const auto & va = node(a).val;
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = std::log(std::max(va[i], lo));
  return push(std::move(out), needs(a), [a, lo](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    const auto & x = t.node(a).val;
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > lo) ga[i] += g[i] / x[i];
    }
  });
}

Index Tape::clamp_op(Index a, double lo, double hi)
{
  const auto & va = node(a).val;
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = std::clamp(va[i], lo, hi);
  return push(std::move(out), needs(a), [a, lo, hi](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    const auto & x = t.node(a).val;
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > lo && x[i] < hi) ga[i] += g[i];
    }
  });
}

Index Tape::affine(MatRef w, VecRef b, Index x)
{
  const auto W = param_values(w.group);
  const auto B = param_values(b.group);
  const auto & vx = node(x).val;
  std::vector<double> out(static_cast<std::size_t>(w.rows));
  for (int r = 0; r < w.rows; ++r) {
    double acc = B[static_cast<std::size_t>(r)];
    const double * row = W.data() + static_cast<std::size_t>(r) * w.cols;
    for (int c = 0; c < w.cols; ++c) acc += row[c] * vx[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  const bool ng = needs(x) || track_params_;
  return push(std::move(out), ng, [w, b, x](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    const auto W = t.param_values(w.group);
    const auto & vx = t.node(x).val;
    if (t.needs(x)) {
      auto & gx = t.node(x).grad;
      for (int r = 0; r < w.rows; ++r) {
        const double gr = g[static_cast<std::size_t>(r)];
        const double * row = W.data() + static_cast<std::size_t>(r) * w.cols;
        for (int c = 0; c < w.cols; ++c) gx[static_cast<std::size_t>(c)] += gr * row[c];
      }
    }
    if (t.track_params_) {
      auto gW = t.params_->grads(w.group);
      auto gB = t.params_->grads(b.group);
      for (int r = 0; r < w.rows; ++r) {
        const double gr = g[static_cast<std::size_t>(r)];
        gB[static_cast<std::size_t>(r)] += gr;
        double * grow = gW.data() + static_cast<std::size_t>(r) * w.cols;
        for (int c = 0; c < w.cols; ++c) grow[c] += gr * vx[static_cast<std::size_t>(c)];
      }
    }
  });
}

Index Tape::conv1d_same(
  MatRef w, VecRef b, Index x, int in_c, int t_len, int kernel, int dilation)
{
  const auto W = param_values(w.group);
  const auto B = param_values(b.group);
  const auto & vx = node(x).val;
  const int out_c = w.rows;
  const int center = kernel / 2;
  std::vector<double> out(static_cast<std::size_t>(out_c * t_len));
  for (int o = 0; o < out_c; ++o) {
    const double * row = W.data() + static_cast<std::size_t>(o) * (in_c * kernel);
    for (int t = 0; t < t_len; ++t) {
      double acc = B[static_cast<std::size_t>(o)];
      for (int i = 0; i < in_c; ++i) {
        for (int j = 0; j < kernel; ++j) {
          const int src = t + dilation * (j - center);
          if (src < 0 || src >= t_len) continue;
          acc += row[i * kernel + j] * vx[static_cast<std::size_t>(i * t_len + src)];
        }
      }
      out[static_cast<std::size_t>(o * t_len + t)] = acc;
    }
  }
  const bool ng = needs(x) || track_params_;
  return push(std::move(out), ng, [w, b, x, in_c, t_len, kernel, dilation](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    const auto W = t.param_values(w.group);
    const auto & vx = t.node(x).val;
    const int out_c = w.rows;
    const int center = kernel / 2;
    const bool gx_needed = t.needs(x);
    auto & gx = t.node(x).grad;
    for (int o = 0; o < out_c; ++o) {
      const double * row = W.data() + static_cast<std::size_t>(o) * (in_c * kernel);
      for (int tt = 0; tt < t_len; ++tt) {
        const double go = g[static_cast<std::size_t>(o * t_len + tt)];
        if (go == 0.0) continue;
        for (int i = 0; i < in_c; ++i) {
          for (int j = 0; j < kernel; ++j) {
            const int src = tt + dilation * (j - center);
            if (src < 0 || src >= t_len) continue;
            if (gx_needed) {
              gx[static_cast<std::size_t>(i * t_len + src)] += go * row[i * kernel + j];
            }
          }
        }
      }
    }
    if (t.track_params_) {
      auto gW = t.params_->grads(w.group);
      auto gB = t.params_->grads(b.group);
      for (int o = 0; o < out_c; ++o) {
        double * grow = gW.data() + static_cast<std::size_t>(o) * (in_c * kernel);
        for (int tt = 0; tt < t_len; ++tt) {
          const double go = g[static_cast<std::size_t>(o * t_len + tt)];
          if (go == 0.0) continue;
          gB[static_cast<std::size_t>(o)] += go;
          for (int i = 0; i < in_c; ++i) {
            for (int j = 0; j < kernel; ++j) {
              const int src = tt + dilation * (j - center);
              if (src < 0 || src >= t_len) continue;
              grow[i * kernel + j] += go * vx[static_cast<std::size_t>(i * t_len + src)];
            }
          }
        }
      }
    }
  });
}

Index Tape::sum_all(Index a)
{
  const auto & va = node(a).val;
  double s = 0.0;
  for (double v : va) s += v;
  return push({s}, needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const double g = t.node(t.cur_).grad[0];
    auto & ga = t.node(a).grad;
    for (auto & v : ga) v += g;
  });
}

Index Tape::mean_all(Index a)
{
  const auto & va = node(a).val;
  double s = 0.0;
  for (double v : va) s += v;
  const double inv = 1.0 / static_cast<double>(va.size());
  return push({s * inv}, needs(a), [a, inv](Tape & t) {
    if (!t.needs(a)) return;
    const double g = t.node(t.cur_).grad[0] * inv;
    auto & ga = t.node(a).grad;
    for (auto & v : ga) v += g;
  });
}

Index Tape::dot(Index a, Index b)
{
  const auto & va = node(a).val;
  const auto & vb = node(b).val;
  require_same_size("Tape::dot", va.size(), vb.size());
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  const bool ng = needs(a) || needs(b);
  return push({s}, ng, [a, b](Tape & t) {
    const double g = t.node(t.cur_).grad[0];
    const auto & va = t.node(a).val;
    const auto & vb = t.node(b).val;
    if (t.needs(a)) {
      auto & ga = t.node(a).grad;
      for (std::size_t i = 0; i < va.size(); ++i) ga[i] += g * vb[i];
    }
    if (t.needs(b)) {
      auto & gb = t.node(b).grad;
      for (std::size_t i = 0; i < va.size(); ++i) gb[i] += g * va[i];
    }
  });
}

Index Tape::time_mean(Index x, int channels, int t_len)
{
  const auto & vx = node(x).val;
  std::vector<double> out(static_cast<std::size_t>(channels), 0.0);
  for (int c = 0; c < channels; ++c) {
    double s = 0.0;
    for (int t = 0; t < t_len; ++t) s += vx[static_cast<std::size_t>(c * t_len + t)];
    out[static_cast<std::size_t>(c)] = s / t_len;
  }
  return push(std::move(out), needs(x), [x, channels, t_len](Tape & t) {
    if (!t.needs(x)) return;
    const auto & g = t.node(t.cur_).grad;
    auto & gx = t.node(x).grad;
    for (int c = 0; c < channels; ++c) {
      const double gc = g[static_cast<std::size_t>(c)] / t_len;
      for (int tt = 0; tt < t_len; ++tt) gx[static_cast<std::size_t>(c * t_len + tt)] += gc;
    }
  });
}

Index Tape::time_last(Index x, int channels, int t_len)
{
  const auto & vx = node(x).val;
  std::vector<double> out(static_cast<std::size_t>(channels));
  for (int c = 0; c < channels; ++c) {
    out[static_cast<std::size_t>(c)] = vx[static_cast<std::size_t>(c * t_len + t_len - 1)];
  }
  return push(std::move(out), needs(x), [x, channels, t_len](Tape & t) {
    if (!t.needs(x)) return;
    const auto & g = t.node(t.cur_).grad;
    auto & gx = t.node(x).grad;
    for (int c = 0; c < channels; ++c) {
      gx[static_cast<std::size_t>(c * t_len + t_len - 1)] += g[static_cast<std::size_t>(c)];
    }
  });
}

Index Tape::pairs_to_channels(Index a)
{
  const auto & va = node(a).val;
  const std::size_t n = va.size() / 2;
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = va[2 * i];
    out[n + i] = va[2 * i + 1];
  }
  return push(std::move(out), needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    auto & ga = t.node(a).grad;
    const std::size_t n = g.size() / 2;
    for (std::size_t i = 0; i < n; ++i) {
      ga[2 * i] += g[i];
      ga[2 * i + 1] += g[n + i];
    }
  });
}

Index Tape::pairwise_norms(Index a)
{
  const auto & va = node(a).val;
  const std::size_t n = va.size() / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::hypot(va[2 * i], va[2 * i + 1]);
  }
  return push(std::move(out), needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    const auto & y = t.node(t.cur_).val;
    const auto & x = t.node(a).val;
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] <= 0.0) continue;  // zero subgradient at the origin
      const double gi = g[i] / y[i];
      ga[2 * i] += gi * x[2 * i];
      ga[2 * i + 1] += gi * x[2 * i + 1];
    }
  });
}

Index Tape::smooth_l1_mean(Index a, Index b)
{
  const auto & va = node(a).val;
  const auto & vb = node(b).val;
  require_same_size("Tape::smooth_l1_mean", va.size(), vb.size());
  const double inv = 1.0 / static_cast<double>(va.size());
  double s = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double e = std::abs(va[i] - vb[i]);
    s += (e < 1.0) ? 0.5 * e * e : e - 0.5;
  }
  const bool ng = needs(a) || needs(b);
  return push({s * inv}, ng, [a, b, inv](Tape & t) {
    const double g = t.node(t.cur_).grad[0] * inv;
    const auto & va = t.node(a).val;
    const auto & vb = t.node(b).val;
    for (std::size_t i = 0; i < va.size(); ++i) {
      const double e = va[i] - vb[i];
      const double d = (std::abs(e) < 1.0) ? e : (e > 0.0 ? 1.0 : -1.0);
      if (t.needs(a)) t.node(a).grad[i] += g * d;
      if (t.needs(b)) t.node(b).grad[i] -= g * d;
    }
  });
}

Index Tape::sub_last_pair(Index a)
{
  const auto & va = node(a).val;
  const std::size_t n2 = va.size();
  const double ax = va[n2 - 2];
  const double ay = va[n2 - 1];
  std::vector<double> out(n2);
  for (std::size_t i = 0; i < n2; i += 2) {
    out[i] = va[i] - ax;
    out[i + 1] = va[i + 1] - ay;
  }
  return push(std::move(out), needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    auto & ga = t.node(a).grad;
    const std::size_t n2 = g.size();
    for (std::size_t i = 0; i < n2; i += 2) {
      ga[i] += g[i];
      ga[i + 1] += g[i + 1];
      ga[n2 - 2] -= g[i];
      ga[n2 - 1] -= g[i + 1];
    }
  });
}

Index Tape::seq_diffs(Index a)
{
  const auto & va = node(a).val;
  const std::size_t n2 = va.size();
  std::vector<double> out(n2);
  for (std::size_t i = 2; i < n2; i += 2) {
    out[i] = va[i] - va[i - 2];
    out[i + 1] = va[i + 1] - va[i - 1];
  }
  out[0] = out.size() > 2 ? out[2] : 0.0;
  out[1] = out.size() > 3 ? out[3] : 0.0;
  return push(std::move(out), needs(a), [a](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    auto & ga = t.node(a).grad;
    const std::size_t n2 = g.size();
    for (std::size_t i = 2; i < n2; i += 2) {
      ga[i] += g[i];
      ga[i + 1] += g[i + 1];
      ga[i - 2] -= g[i];
      ga[i - 1] -= g[i + 1];
    }
    if (n2 > 2) {  // first pair copies the second
      ga[2] += g[0];
      ga[3] += g[1];
      ga[0] -= g[0];
      ga[1] -= g[1];
    }
  });
}

Index Tape::normalize2_smooth(Index a, double eps)
{
  const auto & va = node(a).val;
  const double r = std::sqrt(va[0] * va[0] + va[1] * va[1] + eps);
  std::vector<double> out{va[0] / r, va[1] / r};
  return push(std::move(out), needs(a), [a, eps](Tape & t) {
    if (!t.needs(a)) return;
    const auto & g = t.node(t.cur_).grad;
    const auto & x = t.node(a).val;
    auto & ga = t.node(a).grad;
    const double r2 = x[0] * x[0] + x[1] * x[1] + eps;
    const double r = std::sqrt(r2);
    const double xg = x[0] * g[0] + x[1] * g[1];
    ga[0] += g[0] / r - x[0] * xg / (r * r2);
    ga[1] += g[1] / r - x[1] * xg / (r * r2);
  });
}

Index Tape::rotate_pairs(Index h, Index a)
{
  const auto & vh = node(h).val;
  const auto & va = node(a).val;
  const double hx = vh[0];
  const double hy = vh[1];
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); i += 2) {
    out[i] = hx * va[i] + hy * va[i + 1];
    out[i + 1] = hy * va[i] - hx * va[i + 1];
  }
  const bool ng = needs(h) || needs(a);
  return push(std::move(out), ng, [h, a](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    const auto & vh = t.node(h).val;
    const auto & va = t.node(a).val;
    const double hx = vh[0];
    const double hy = vh[1];
    double ghx = 0.0;
    double ghy = 0.0;
    const bool need_a = t.needs(a);
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < va.size(); i += 2) {
      const double g1 = g[i];
      const double g2 = g[i + 1];
      if (need_a) {
        ga[i] += g1 * hx + g2 * hy;
        ga[i + 1] += g1 * hy - g2 * hx;
      }
      ghx += g1 * va[i] - g2 * va[i + 1];
      ghy += g1 * va[i + 1] + g2 * va[i];
    }
    if (t.needs(h)) {
      t.node(h).grad[0] += ghx;
      t.node(h).grad[1] += ghy;
    }
  });
}

Index Tape::unrotate_pairs_add(Index h, Index anchor, Index a)
{
  const auto & vh = node(h).val;
  const auto & vc = node(anchor).val;
  const auto & va = node(a).val;
  const double hx = vh[0];
  const double hy = vh[1];
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); i += 2) {
    out[i] = vc[0] + hx * va[i] + hy * va[i + 1];
    out[i + 1] = vc[1] + hy * va[i] - hx * va[i + 1];
  }
  const bool ng = needs(h) || needs(anchor) || needs(a);
  return push(std::move(out), ng, [h, anchor, a](Tape & t) {
    const auto & g = t.node(t.cur_).grad;
    const auto & vh = t.node(h).val;
    const auto & va = t.node(a).val;
    const double hx = vh[0];
    const double hy = vh[1];
    double ghx = 0.0;
    double ghy = 0.0;
    double gcx = 0.0;
    double gcy = 0.0;
    const bool need_a = t.needs(a);
    auto & ga = t.node(a).grad;
    for (std::size_t i = 0; i < va.size(); i += 2) {
      const double g1 = g[i];
      const double g2 = g[i + 1];
      if (need_a) {
        ga[i] += g1 * hx + g2 * hy;
        ga[i + 1] += g1 * hy - g2 * hx;
      }
      ghx += g1 * va[i] - g2 * va[i + 1];
      ghy += g1 * va[i + 1] + g2 * va[i];
      gcx += g1;
      gcy += g2;
    }
    if (t.needs(h)) {
      t.node(h).grad[0] += ghx;
      t.node(h).grad[1] += ghy;
    }
    if (t.needs(anchor)) {
      t.node(anchor).grad[0] += gcx;
      t.node(anchor).grad[1] += gcy;
    }
  });
}

void Tape::backward(Index root)
{
  auto & r = node(root);
  if (r.val.size() != 1) {
    fail_invariant("Tape::backward: root must be a scalar node");
  }
  r.grad[0] = 1.0;
  for (Index i = static_cast<Index>(nodes_.size()) - 1; i >= 0; --i) {
    auto & n = node(i);
    if (!n.back || !n.needs_grad) continue;
    cur_ = i;
    n.back(*this);
  }
}

}  // namespace ssat::ad
