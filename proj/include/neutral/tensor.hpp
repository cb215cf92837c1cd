#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "neutral/errors.hpp"

namespace neutral {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

class Tensor;

namespace detail {

struct Node;
using BackwardFn = std::function<void(const Node& self)>;

// One recorded value in the autodiff graph. `data` is shared and never
// mutated after construction; only `grad` accumulates.
struct Node {
  Shape shape;
  std::shared_ptr<const std::vector<double>> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;

  std::size_t size() const { return data->size(); }

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(size(), 0.0);
    return grad;
  }
};

// Gradient buffer of the i-th parent, or nullptr when it takes no gradient.
inline std::vector<double>* parent_grad(const Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  return p.requires_grad ? &p.grad_buffer() : nullptr;
}

}  // namespace detail

// Dense row-major float64 array. Copies are cheap handles sharing the same
// immutable buffer; the autodiff graph hangs off the handle.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false) {
    if (numel(shape) != data.size())
      throw DimensionError("tensor shape " + neutral::to_string(shape) + " does not match " +
                           std::to_string(data.size()) + " values");
    node_ = std::make_shared<detail::Node>();
    node_->shape = std::move(shape);
    node_->data = std::make_shared<const std::vector<double>>(std::move(data));
    node_->requires_grad = requires_grad;
  }

  static Tensor scalar(double v, bool requires_grad = false) {
    return Tensor(Shape{}, {v}, requires_grad);
  }
  static Tensor vector(std::vector<double> v, bool requires_grad = false) {
    Shape s{v.size()};
    return Tensor(std::move(s), std::move(v), requires_grad);
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) { return full(std::move(shape), 0.0, requires_grad); }
  static Tensor full(Shape shape, double value, bool requires_grad = false) {
    const std::size_t n = numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->data->size(); }

  std::span<const double> data() const { return {node_->data->data(), node_->data->size()}; }
  std::vector<double> to_vector() const { return *node_->data; }
  double at(std::size_t i) const { return node_->data->at(i); }

  double item() const {
    if (size() != 1) throw ContractError("item() on tensor of shape " + neutral::to_string(shape()));
    return (*node_->data)[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return {node_->grad.data(), node_->grad.size()}; }

  // Gradient as a plain tensor (zeros when nothing was accumulated).
  Tensor grad_tensor() const {
    return has_grad() ? Tensor(shape(), node_->grad) : Tensor::zeros(shape());
  }

  void zero_grad() const { node_->grad.clear(); }

  // Same buffer, cut from the graph.
  Tensor detach(bool requires_grad = false) const {
    Tensor t;
    t.node_ = std::make_shared<detail::Node>();
    t.node_->shape = node_->shape;
    t.node_->data = node_->data;
    t.node_->requires_grad = requires_grad;
    return t;
  }

  const std::shared_ptr<detail::Node>& node() const { return node_; }

  // Builds an op result. The graph edge is recorded only when some input
  // requires a gradient.
  static Tensor make_result(Shape shape, std::vector<double> data, const std::vector<Tensor>& inputs,
                            detail::BackwardFn backward) {
    Tensor out(std::move(shape), std::move(data));
    const bool any = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
    if (any) {
      out.node_->requires_grad = true;
      out.node_->parents.reserve(inputs.size());
      for (const auto& t : inputs) out.node_->parents.push_back(t.node_);
      out.node_->backward = std::move(backward);
    }
    return out;
  }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Topologically ordered record of every differentiable node reachable from
// a root. backward() walks it once in reverse.
class Tape {
 public:
  static Tape record(const Tensor& root) {
    Tape tape;
    if (!root.requires_grad()) return tape;
    std::unordered_set<const detail::Node*> seen;
    // Iterative post-order DFS so deep graphs do not exhaust the stack.
    std::vector<std::pair<std::shared_ptr<detail::Node>, std::size_t>> stack;
    stack.emplace_back(root.node(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->parents.size()) {
        auto parent = node->parents[next++];
        if (parent->requires_grad && seen.insert(parent.get()).second) stack.emplace_back(parent, 0);
      } else {
        tape.nodes_.push_back(node);
        stack.pop_back();
      }
    }
    return tape;
  }

  std::size_t size() const { return nodes_.size(); }

  // Position of a node in the recorded order, or size() if absent.
  std::size_t position(const Tensor& t) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i] == t.node()) return i;
    return nodes_.size();
  }

  void backward() {
    if (nodes_.empty()) return;
    auto& root = nodes_.back();
    if (root->size() != 1)
      throw ContractError("backward() needs a scalar loss, got shape " + to_string(root->shape));
    root->grad_buffer()[0] += 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      detail::Node& n = **it;
      if (!n.backward || n.grad.empty()) continue;
      n.backward(n);
      // Interior gradients are consumed; only leaves keep theirs.
      n.grad.clear();
      n.grad.shrink_to_fit();
    }
  }

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
};

// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every leaf that
// requires them.
inline void backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw ContractError("backward() needs a scalar loss, got shape " + to_string(loss.shape()));
  Tape::record(loss).backward();
}

}  // namespace neutral
