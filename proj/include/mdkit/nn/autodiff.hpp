#pragma once

#include "mdkit/types.hpp"

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace mdkit::nn {

// Named trainable matrices. Values are read-only while graphs run, so
// several graphs may share one store across threads.
class ParameterStore {
 public:
  int add(std::string name, MatX value);

  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int id) const { return names_[id]; }
  const MatX& value(int id) const { return values_[id]; }
  MatX& value(int id) { return values_[id]; }
  int find(const std::string& name) const;
  std::size_t scalar_count() const;

 private:
  std::vector<std::string> names_;
  std::vector<MatX> values_;
};

// Per-parameter gradient accumulators, aligned with a ParameterStore.
struct Gradients {
  std::vector<MatX> values;

  explicit Gradients(const ParameterStore& store);
  void add(const Gradients& other);
  void scale(double s);
  void zero();
};

class Graph;

// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  int id = -1;

  const MatX& value() const;
  const MatX& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

// Tape of matrix-valued operations, recorded in creation order (which is a
// topological order). backward() replays it in reverse once.
class Graph {
 public:
  using Backward = std::function<void(Graph&, int self)>;

  Var constant(MatX value);
  // Leaf that receives a gradient (used for inputs under test).
  Var variable(MatX value);
  // Parameter leaf; repeated calls for the same id return the same node.
  Var param(const ParameterStore& store, int id);

  // Records a node computed by the caller. `backward` must add into the
  // gradients of `inputs` via grad_of().
  Var record(MatX value, std::vector<int> inputs, Backward backward);

  const MatX& value(int id) const { return nodes_[id].value; }
  const MatX& grad(int id) const { return nodes_[id].grad; }
  // Gradient slot of an input, zero-initialised on first use.
  MatX& grad_of(int id);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Reverse-mode sweep from a 1×1 loss. Throws NotAScalarLoss otherwise.
  void backward(Var loss);

  // Adds parameter-node gradients into `out`.
  void accumulate(Gradients& out) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    MatX value;
    MatX grad;
    bool requires_grad = false;
    std::vector<int> inputs;
    Backward backward;
    int param_id = -1;
  };

  int push(Node node);

  std::vector<Node> nodes_;
  std::unordered_map<int, int> param_nodes_;
};

// Elementwise and linear algebra primitives.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);                 // elementwise
Var scale(Var a, double s);
Var add_bias(Var a, Var bias);         // bias (rows × 1) added to every column
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var transpose(Var a);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
Var gather_cols(Var a, const std::vector<int>& cols);
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);  // column-major
Var broadcast_row(Var v, Eigen::Index rows);               // v (n × 1) -> rows × n, each row = vᵀ
Var sum(Var a);
Var mean(Var a);
Var mean_abs(Var a);                                       // mean |a_ij|, 1 × 1
Var sum_abs(Var a);

// 3-D convolution, kernel 3, padding 1. x is C_in × size³ (x-fastest voxel
// order), weight is C_out × (C_in·27), bias C_out × 1.
Var conv3d(Var x, int size, Var weight, Var bias, int stride);
int conv3d_output_size(int size, int stride);
Var global_avg_pool(Var x);  // C × V -> C × 1

// Gated recurrent step. x: in × 1, h: H × 1, wx: 3H × in, wh: 3H × H,
// bx, bh: 3H × 1. Gate order (reset, update, candidate).
Var gru_cell(Var x, Var h, Var wx, Var wh, Var bx, Var bh);

} // namespace mdkit::nn
