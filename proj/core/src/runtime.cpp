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

#include "recon/runtime.hpp"

#include "recon/error.hpp"
#include "recon/ops.hpp"

namespace recon::rt {

using graph::GraphNode;

Session::Session(const graph::ComputationalGraph& g) : g_(&g) {}

TensorMap Session::forward(const TensorMap& inputs) {
  acts_.clear();
  std::vector<Tensor> acts(g_->nodes.size());
  for (std::size_t i = 0; i < g_->nodes.size(); ++i) {
    const GraphNode& n = g_->nodes[i];
    switch (n.kind) {
      case GraphNode::Kind::Input: {
        auto it = inputs.find(n.name);
        if (it == inputs.end()) fail(ErrorKind::ShapeMismatch, "no value for input " + n.name);
        if (it->second.shape != n.shape)
          fail(ErrorKind::ShapeMismatch, "input " + n.name + " expects " + format_shape(n.shape) +
                                             ", got " + format_shape(it->second.shape));
        acts[i] = it->second;
        break;
      }
      case GraphNode::Kind::Parameter: acts[i] = n.value; break;
      case GraphNode::Kind::Operator: {
        std::vector<const Tensor*> in;
        for (auto j : n.inputs) {
          if (j >= i) fail(ErrorKind::UnsupportedOp, "node " + n.name + " is not in topological order");
          in.push_back(&acts[j]);
        }
        acts[i] = rt::forward(n.op, n.attrs, in, n.shape);
        break;
      }
    }
  }
  acts_ = std::move(acts);
  TensorMap out;
  for (auto o : g_->outputs) out[g_->nodes[o].name] = acts_[o];
  return out;
}

Tensor Session::forward(const Tensor& x) {
  if (g_->inputs.size() != 1 || g_->outputs.size() != 1)
    fail(ErrorKind::ShapeMismatch, "single-tensor forward needs one input and one output");
  TensorMap in{{g_->nodes[g_->inputs[0]].name, x}};
  return forward(in).begin()->second;
}

TensorMap Session::backward(const TensorMap& loss_grad) {
  if (acts_.empty()) fail(ErrorKind::NoForwardPass, "backward called before forward");
  const auto& nodes = g_->nodes;
  std::vector<Tensor> grads(nodes.size());
  std::vector<bool> live(nodes.size(), false);
  auto accumulate = [&](std::size_t i, const Tensor& t) {
    if (!live[i]) {
      grads[i] = t;
      live[i] = true;
      return;
    }
    for (std::size_t k = 0; k < t.size(); ++k) grads[i][k] += t[k];
  };
  for (auto o : g_->outputs) {
    auto it = loss_grad.find(nodes[o].name);
    if (it == loss_grad.end()) continue;
    if (it->second.shape != acts_[o].shape)
      fail(ErrorKind::ShapeMismatch, "gradient for " + nodes[o].name + " has the wrong shape");
    accumulate(o, it->second);
  }
  for (std::size_t i = nodes.size(); i-- > 0;) {
    const GraphNode& n = nodes[i];
    if (n.kind != GraphNode::Kind::Operator || !live[i]) continue;
    std::vector<const Tensor*> in;
    for (auto j : n.inputs) in.push_back(&acts_[j]);
    auto g = rt::backward(n.op, n.attrs, in, acts_[i], grads[i]);
    for (std::size_t k = 0; k < n.inputs.size() && k < g.size(); ++k)
      if (nodes[n.inputs[k]].kind != GraphNode::Kind::Parameter) accumulate(n.inputs[k], g[k]);
  }
  TensorMap out;
  for (auto i : g_->inputs)
    out[nodes[i].name] = live[i] ? grads[i] : Tensor(acts_[i].shape, 0.0);
  return out;
}

Tensor Session::backward(const Tensor& loss_grad) {
  if (acts_.empty()) fail(ErrorKind::NoForwardPass, "backward called before forward");
  if (g_->inputs.size() != 1 || g_->outputs.size() != 1)
    fail(ErrorKind::ShapeMismatch, "single-tensor backward needs one input and one output");
  TensorMap g{{g_->nodes[g_->outputs[0]].name, loss_grad}};
  return backward(g).begin()->second;
}

std::pair<double, Tensor> mse_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape != target.shape)
    fail(ErrorKind::ShapeMismatch, "mse_loss shapes " + format_shape(pred.shape) + " and " +
                                       format_shape(target.shape));
  const double n = static_cast<double>(pred.size());
  double loss = 0.0;
  Tensor grad(pred.shape);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    loss += d * d;
    grad[i] = 2.0 * d / n;
  }
  return {loss / n, grad};
}

}  // namespace recon::rt
