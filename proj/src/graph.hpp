#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace must {

// A trainable tensor. Gradients accumulate into grad during Graph::backward
// and are consumed (and zeroed) by the optimizer.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = value.zeros_like();
  }

  void zero_grad() { grad.fill(0.0); }
};

using NodeId = int32_t;

// Reverse-mode tape over the fixed operator set this project needs. One
// graph per forward pass; backward walks the tape once and flushes leaf
// gradients into their Params. Not a general autodiff system.
class Graph {
 public:
  // Leaf holding a value; gradients are computed for it (readable via
  // grad()) but it is not tied to a Param.
  NodeId input(Tensor v);
  // Leaf referencing caller-owned storage; the tensor must outlive the graph.
  NodeId input_view(const Tensor* v);
  // Leaf bound to a Param; backward accumulates into p->grad.
  NodeId param(Param* p);

  // y = x W + b with x:[b,m], W:[m,n], b:[n].
  NodeId linear(NodeId x, NodeId w, NodeId b);
  NodeId relu(NodeId x);
  // out[i][j] = cos(H_i, P_j); throws DegenerateVector on near-zero rows.
  NodeId cosine_rows(NodeId h, NodeId p);
  // Row-wise log softmax of scores / temperature.
  NodeId log_softmax_rows(NodeId s, double temperature);
  // out[i] = M[i][cols[i]].
  NodeId gather_cols(NodeId m, std::vector<int32_t> cols);
  NodeId affine(NodeId x, double scale, double shift);
  NodeId clamp01(NodeId x);
  NodeId pow_const(NodeId x, double exponent);
  NodeId mul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId exp(NodeId x);
  // Value pass-through that blocks gradient flow.
  NodeId detach(NodeId x);
  NodeId mean_all(NodeId x);

  const Tensor& value(NodeId id) const { return nodes_[id].val(); }
  const Tensor& grad(NodeId id) const { return nodes_[id].grad; }

  // Seeds d(root)/d(root) = 1, walks the tape in reverse, then adds every
  // param leaf's gradient into its Param. root must be a single element.
  void backward(NodeId root);

 private:
  struct Node {
    Tensor value;
    const Tensor* view = nullptr;
    Tensor grad;
    Param* bound = nullptr;
    std::function<void(Graph&, NodeId)> back;  // empty for leaves/detach

    const Tensor& val() const { return view ? *view : value; }
  };

  NodeId push(Tensor value, std::function<void(Graph&, NodeId)> back);
  Tensor& grad_ref(NodeId id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace must
