// Copyright 2026 The distclip Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "distclip/core/error.hpp"
#include "distclip/core/tensor.hpp"

namespace distclip {

template <typename T>
class Tape;

/// Handle to a value slot on a tape. Cheap to copy; valid while the tape lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor<T>& value() const { return tape_->value(*this); }
  const Shape& shape() const { return value().shape(); }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Parameter name -> d(loss)/d(parameter), same shape as the parameter.
template <typename T>
using GradientMap = std::map<std::string, Tensor<T>>;

/// Reverse-mode recording of a forward computation.
///
/// Nodes are appended in execution order, so the node vector is already a
/// topological order. Every non-leaf node keeps its forward closure, which
/// lets `replay()` recompute all values after a leaf changes (used by the
/// finite-difference checker).
template <typename T>
class Tape {
 public:
  using Inputs = std::span<const Tensor<T>* const>;
  using GradInputs = std::span<Tensor<T>* const>;
  using ForwardFn = std::function<Tensor<T>(Inputs)>;
  using BackwardFn =
      std::function<void(Inputs, const Tensor<T>& out, const Tensor<T>& grad_out, GradInputs)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value) { return push_leaf(std::move(value), false, {}); }

  /// Unnamed or named leaf that receives a gradient.
  Var<T> variable(Tensor<T> value, std::string name = {}) {
    if (name.empty()) name = "var:" + std::to_string(nodes_.size());
    auto v = push_leaf(std::move(value), true, name);
    params_.emplace(name, v.id());
    return v;
  }

  /// Trainable leaf keyed by name. Binding the same name twice returns the
  /// existing slot, so shared weights accumulate one gradient.
  Var<T> parameter(const std::string& name, const Tensor<T>& value) {
    if (auto it = params_.find(name); it != params_.end()) return Var<T>(this, it->second);
    return variable(value, name);
  }

  std::optional<Var<T>> find_parameter(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) return std::nullopt;
    return Var<T>(this, it->second);
  }

  Var<T> record(const std::vector<Var<T>>& inputs, ForwardFn forward, BackwardFn backward) {
    Node node;
    node.inputs.reserve(inputs.size());
    for (const auto& in : inputs) {
      node.inputs.push_back(in.id());
      node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    node.value = forward(gather(node.inputs));
    node.forward = std::move(forward);
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var<T>(this, nodes_.size() - 1);
  }

  const Tensor<T>& value(const Var<T>& v) const { return nodes_.at(v.id()).value; }
  bool requires_grad(const Var<T>& v) const { return nodes_.at(v.id()).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Overwrites a leaf value; call `replay()` afterwards to refresh
  /// dependent nodes.
  void set_leaf_value(const Var<T>& v, Tensor<T> value) {
    Node& node = nodes_.at(v.id());
    if (node.forward) throw ContractError("set_leaf_value on a non-leaf node");
    if (node.value.shape() != value.shape()) {
      throw DimensionError("leaf shape " + shape_to_string(node.value.shape()) +
                           " vs new value " + shape_to_string(value.shape()));
    }
    node.value = std::move(value);
  }

  /// Recomputes every non-leaf node from its operands, in recording order.
  void replay() {
    for (Node& node : nodes_) {
      if (node.forward) node.value = node.forward(gather(node.inputs));
    }
  }

  /// Named leaves that receive gradients, in name order.
  std::vector<std::pair<std::string, Var<T>>> gradient_leaves() {
    std::vector<std::pair<std::string, Var<T>>> out;
    std::map<std::string, std::size_t> sorted(params_.begin(), params_.end());
    for (const auto& [name, id] : sorted) out.emplace_back(name, Var<T>(this, id));
    return out;
  }

  /// Reverse sweep from a scalar loss. Returns a gradient for every named
  /// leaf on the tape; leaves the loss does not reach get zeros.
  GradientMap<T> backward(const Var<T>& loss) {
    const Node& root = nodes_.at(loss.id());
    if (root.value.size() != 1 || root.value.rank() > 1) {
      throw ContractError("backward requires a scalar loss, got shape " +
                          shape_to_string(root.value.shape()));
    }
    std::vector<std::optional<Tensor<T>>> grads(loss.id() + 1);
    grads[loss.id()] = Tensor<T>(root.value.shape(), T{1});
    visit_order_.clear();

    std::vector<Tensor<T>*> grad_ptrs;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!grads[i] || !node.requires_grad) continue;
      visit_order_.push_back(i);
      if (!node.backward) continue;
      grad_ptrs.assign(node.inputs.size(), nullptr);
      for (std::size_t k = 0; k < node.inputs.size(); ++k) {
        const std::size_t in = node.inputs[k];
        if (!nodes_[in].requires_grad) continue;
        if (!grads[in]) grads[in] = Tensor<T>(nodes_[in].value.shape(), T{0});
        grad_ptrs[k] = &*grads[in];
      }
      node.backward(gather(node.inputs), node.value, *grads[i], grad_ptrs);
    }

    GradientMap<T> out;
    for (const auto& [name, id] : params_) {
      if (id < grads.size() && grads[id]) {
        out.emplace(name, std::move(*grads[id]));
      } else {
        out.emplace(name, Tensor<T>(nodes_[id].value.shape(), T{0}));
      }
    }
    return out;
  }

  /// Node ids touched by the most recent backward call, in visit order.
  const std::vector<std::size_t>& last_visit_order() const noexcept { return visit_order_; }

 private:
  struct Node {
    Tensor<T> value;
    std::vector<std::size_t> inputs;
    ForwardFn forward;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Var<T> push_leaf(Tensor<T> value, bool requires_grad, const std::string&) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return Var<T>(this, nodes_.size() - 1);
  }

  std::vector<const Tensor<T>*> gather(const std::vector<std::size_t>& ids) const {
    std::vector<const Tensor<T>*> out;
    out.reserve(ids.size());
    for (std::size_t id : ids) out.push_back(&nodes_[id].value);
    return out;
  }

  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> params_;
  std::vector<std::size_t> visit_order_;
};

}  // namespace distclip
