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

#ifndef SSAT_SVG_HPP_
#define SSAT_SVG_HPP_

#include <filesystem>

#include "ssat/scene.hpp"

namespace ssat
{

// Static per-scene overlay: benign vs adversarial history plus ground-truth
// and predicted futures, written as a standalone SVG.
void write_scene_overlay(
  const std::filesystem::path & path, const Scene & scene, const Trajectory & adv_history,
  const Trajectory & benign_pred, const Trajectory & attacked_pred);

}  // namespace ssat

#endif  // SSAT_SVG_HPP_
