// Copyright 2026 The Recon Authors
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

#ifndef RECON_RUNTIME_HPP_
#define RECON_RUNTIME_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "recon/rebuild.hpp"
#include "recon/tensor.hpp"

namespace recon::rt {

using TensorMap = std::map<std::string, Tensor>;

// Per-run state over a shared, immutable graph. One thread at a time.
class Session {
 public:
  explicit Session(const graph::ComputationalGraph& g);

  TensorMap forward(const TensorMap& inputs);
  // Single-input, single-output convenience.
  Tensor forward(const Tensor& x);

  // loss_grad is keyed by output node name; returns d loss / d input per input node.
  TensorMap backward(const TensorMap& loss_grad);
  Tensor backward(const Tensor& loss_grad);

  const graph::ComputationalGraph& graph() const { return *g_; }
  const Tensor& activation(std::size_t node) const { return acts_.at(node); }
  bool has_forward() const { return !acts_.empty(); }

 private:
  const graph::ComputationalGraph* g_;
  std::vector<Tensor> acts_;
};

std::pair<double, Tensor> mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace recon::rt

#endif  // RECON_RUNTIME_HPP_
