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

#ifndef SSAT_TAPE_HPP_
#define SSAT_TAPE_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssat::ad
{

// Flat parameter storage with named groups (one group per weight tensor).
// Group order is fixed at registration time and defines the checkpoint layout.
class ParamStore
{
public:
  struct Group
  {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  std::size_t add_group(std::string name, std::size_t size);
  std::size_t group_index(std::string_view name) const;  // throws if absent

  std::span<double> values(std::size_t group);
  std::span<const double> values(std::size_t group) const;
  std::span<double> grads(std::size_t group);

  void zero_grads();
  bool values_finite() const;

  std::size_t total_size() const { return values_.size(); }
  const std::vector<Group> & groups() const { return groups_; }
  std::vector<double> & flat_values() { return values_; }
  const std::vector<double> & flat_values() const { return values_; }
  std::vector<double> & flat_grads() { return grads_; }

private:
  std::vector<Group> groups_;
  std::vector<double> values_;
  std::vector<double> grads_;
};

// Parameter tensor views used by tape ops.
struct MatRef
{
  std::size_t group = 0;
  int rows = 0;
  int cols = 0;
};

struct VecRef
{
  std::size_t group = 0;
  int size = 0;
};

using Index = int;
inline constexpr Index kNoNode = -1;

// Record-and-replay reverse-mode differentiation over vector-valued nodes.
// A tape is built per evaluation; backward() accumulates input gradients on
// the nodes and parameter gradients into the attached ParamStore (unless the
// tape was created with track_params = false).
class Tape
{
public:
  explicit Tape(ParamStore * params = nullptr, bool track_params = true)
  : params_(params), track_params_(track_params && params != nullptr)
  {
    nodes_.reserve(128);
  }

  // Leaves.
  Index input(std::span<const double> v);     // gradient tracked
  Index constant(std::span<const double> v);  // gradient not tracked
  Index scalar_constant(double v);

  // Elementwise / structural.
  Index add(Index a, Index b);
  Index sub(Index a, Index b);
  Index mul(Index a, Index b);
  Index scale(Index a, double k);
  Index sum_list(std::span<const Index> xs);  // elementwise sum of same-size nodes
  Index concat(std::span<const Index> xs);
  Index slice(Index a, int offset, int len);
  Index gather1(Index a, int i);  // single coordinate as a scalar node

  // Nonlinearities.
  Index tanh_op(Index a);
  Index exp_op(Index a);
  Index sigmoid_op(Index a);
  Index softmax_op(Index a);
  Index clamped_log(Index a, double lo);            // log(max(x, lo)), zero grad when clamped
  Index clamp_op(Index a, double lo, double hi);    // pass-through grad inside the range

  // Parameterized layers.
  Index affine(MatRef w, VecRef b, Index x);  // y = W x + b, W row-major rows x cols
  // 1-D convolution over layout [channel][time] with zero padding ("same" length).
  // W is out_c x (in_c * kernel), row-major.
  Index conv1d_same(MatRef w, VecRef b, Index x, int in_c, int t_len, int kernel, int dilation);

  // Reductions.
  Index sum_all(Index a);
  Index mean_all(Index a);
  Index dot(Index a, Index b);
  Index time_mean(Index x, int channels, int t_len);  // per-channel temporal mean
  Index time_last(Index x, int channels, int t_len);  // per-channel last time step

  // Trajectory-shaped helpers over [x0,y0,x1,y1,...] layouts.
  Index pairs_to_channels(Index a);                // interleaved pairs -> [2][n] channel-major
  Index pairwise_norms(Index a);                   // 2n -> n Euclidean norms
  Index smooth_l1_mean(Index a, Index b);          // mean over coordinates of smooth-L1(a-b)
  Index sub_last_pair(Index a);                    // subtract the final (x,y) pair from every pair
  Index seq_diffs(Index a);                        // per-pair differences, first copies second
  Index normalize2_smooth(Index a, double eps);    // v / sqrt(|v|^2 + eps) for a 2-vector
  Index rotate_pairs(Index h, Index a);            // rows (h, perp_right(h)) applied per pair
  Index unrotate_pairs_add(Index h, Index anchor, Index a);  // anchor + R^T * pair

  std::span<const double> value(Index i) const { return nodes_[static_cast<std::size_t>(i)].val; }
  std::span<double> value(Index i) { return nodes_[static_cast<std::size_t>(i)].val; }
  std::span<const double> grad(Index i) const { return nodes_[static_cast<std::size_t>(i)].grad; }
  int size(Index i) const { return static_cast<int>(nodes_[static_cast<std::size_t>(i)].val.size()); }
  double scalar(Index i) const;

  // Reverse sweep from a scalar root; seeds d(root)/d(root) = 1.
  void backward(Index root);

  ParamStore * params() { return params_; }
  bool track_params() const { return track_params_; }

private:
  struct Node
  {
    std::vector<double> val;
    std::vector<double> grad;
    bool needs_grad = false;
    std::function<void(Tape &)> back;  // null for leaves
  };

  Node & node(Index i) { return nodes_[static_cast<std::size_t>(i)]; }
  const Node & node(Index i) const { return nodes_[static_cast<std::size_t>(i)]; }
  bool needs(Index i) const { return node(i).needs_grad; }
  Index push(std::vector<double> val, bool needs_grad, std::function<void(Tape &)> back);

  std::span<const double> param_values(std::size_t group) const;

  std::vector<Node> nodes_;
  ParamStore * params_;
  bool track_params_;
  Index cur_ = kNoNode;  // node whose backward closure is running
};

}  // namespace ssat::ad

#endif  // SSAT_TAPE_HPP_
