#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sepipe/nn/tensor.hpp"

namespace sepipe::nn {

class GradTape;

// Handle into a GradTape. Cheap to copy; only valid for the tape it came from.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Complex value on the tape: a pair of equally shaped real vars.
struct CVar {
  Var re, im;
};

// Reverse-mode tape. Each forward op appends one node whose `backward`
// accumulates into its parents' grads; `backward(loss)` walks nodes once in
// reverse creation order (a reverse topological order of the recorded DAG).
// Gradients at fan-out accumulate additively.
class GradTape {
 public:
  struct Node {
    Tensor value;
    Tensor grad;        // allocated lazily when first touched
    bool touched = false;
    Parameter* param = nullptr;  // set for trainable leaves
    std::vector<int> parents;
    std::function<void(GradTape&, Node&)> backward;  // empty for leaves
  };

  // When enabled, every node value is checked for NaN/Inf on creation.
  bool debug_checks = false;

  std::size_t num_nodes() const { return nodes_.size(); }

  Var constant(Tensor v) { return push(std::move(v), nullptr); }

  // Trainable leaf: gradients reached during backward() are added into
  // p.grad. Pass trainable=false to use a parameter's value as a frozen
  // constant (no gradient is ever written back).
  Var leaf(Parameter& p, bool trainable = true) {
    return push(p.value, trainable ? &p : nullptr);
  }

  Var make(Tensor value, std::vector<int> parents,
           std::function<void(GradTape&, Node&)> backward) {
    Var v = push(std::move(value), nullptr);
    nodes_[v.id]->parents = std::move(parents);
    nodes_[v.id]->backward = std::move(backward);
    return v;
  }

  const Tensor& value(Var v) const { return nodes_.at(v.id)->value; }
  const Shape& shape(Var v) const { return value(v).shape(); }

  // Gradient buffer of a node, allocating (zeroed) on first use.
  Tensor& grad(int id) {
    Node& n = *nodes_.at(id);
    if (!n.touched) {
      n.grad = Tensor(n.value.shape());
      n.touched = true;
    }
    return n.grad;
  }
  Tensor& grad(Var v) { return grad(v.id); }
  bool touched(Var v) const { return nodes_.at(v.id)->touched; }

  // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be scalar-shaped.
  void backward(Var loss) {
    require(value(loss).is_scalar(), "backward target must be a scalar");
    grad(loss.id)[0] += 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = *nodes_[i];
      if (!n.touched) continue;
      if (n.backward) n.backward(*this, n);
      if (n.param) {
        double* g = n.param->grad.data();
        const double* s = n.grad.data();
        for (std::size_t k = 0; k < n.grad.size(); ++k) g[k] += s[k];
      }
    }
  }

 private:
  Var push(Tensor v, Parameter* p) {
    if (debug_checks)
      require_runtime(v.all_finite(), "non-finite value produced at node " +
                                          std::to_string(nodes_.size()));
    auto n = std::make_unique<Node>();
    n->value = std::move(v);
    n->param = p;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace sepipe::nn
