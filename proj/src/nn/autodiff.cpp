#include "mdkit/nn/autodiff.hpp"

#include "mdkit/error.hpp"

#include <cmath>
#include <memory>
#include <sstream>

namespace mdkit::nn {

namespace {

std::string shape(const MatX& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_graph(Var a, Var b) {
  if (a.graph == nullptr || a.graph != b.graph) fail(ErrorCode::ShapeMismatch, "operands belong to different graphs");
}

void require_same_shape(Var a, Var b, const char* op) {
  require_same_graph(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape(a.value()) + " vs " + shape(b.value()));
  }
}

} // namespace

// ---- ParameterStore / Gradients -------------------------------------------

int ParameterStore::add(std::string name, MatX value) {
  if (find(name) >= 0) fail(ErrorCode::FormatError, "duplicate parameter name " + name);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return size() - 1;
}

int ParameterStore::find(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (names_[i] == name) return i;
  }
  return -1;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

Gradients::Gradients(const ParameterStore& store) {
  values.reserve(store.size());
  for (int i = 0; i < store.size(); ++i) values.push_back(MatX::Zero(store.value(i).rows(), store.value(i).cols()));
}

void Gradients::add(const Gradients& other) {
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
}

void Gradients::scale(double s) {
  for (auto& v : values) v *= s;
}

void Gradients::zero() {
  for (auto& v : values) v.setZero();
}

// ---- Graph ----------------------------------------------------------------

const MatX& Var::value() const { return graph->value(id); }
const MatX& Var::grad() const { return graph->grad(id); }

int Graph::push(Node node) {
  const int id = static_cast<int>(nodes_.size());
  for (int in : node.inputs) {
    if (in < 0 || in >= id) fail(ErrorCode::GraphCycle, "node input does not precede the node");
  }
  nodes_.push_back(std::move(node));
  return id;
}

Var Graph::constant(MatX value) {
  Node n;
  n.value = std::move(value);
  return {this, push(std::move(n))};
}

Var Graph::variable(MatX value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  return {this, push(std::move(n))};
}

Var Graph::param(const ParameterStore& store, int id) {
  if (auto it = param_nodes_.find(id); it != param_nodes_.end()) return {this, it->second};
  Node n;
  n.value = store.value(id);
  n.requires_grad = true;
  n.param_id = id;
  const int node = push(std::move(n));
  param_nodes_.emplace(id, node);
  return {this, node};
}

Var Graph::record(MatX value, std::vector<int> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (int in : inputs) {
    if (in >= 0 && in < static_cast<int>(nodes_.size()) && nodes_[in].requires_grad) n.requires_grad = true;
  }
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  return {this, push(std::move(n))};
}

MatX& Graph::grad_of(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = MatX::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Graph::backward(Var loss) {
  if (loss.graph != this) fail(ErrorCode::ShapeMismatch, "loss belongs to another graph");
  if (loss.rows() != 1 || loss.cols() != 1) fail(ErrorCode::NotAScalarLoss, "loss is " + shape(loss.value()));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  grad_of(loss.id)(0, 0) = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    for (int in : n.inputs) {
      if (in >= i) fail(ErrorCode::GraphCycle, "backward order violated");
    }
    n.backward(*this, i);
  }
}

void Graph::accumulate(Gradients& out) const {
  for (const auto& [pid, node] : param_nodes_) {
    const MatX& g = nodes_[node].grad;
    if (g.size() != 0) out.values[pid] += g;
  }
}

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_graph(a, b);
  if (a.cols() != b.rows()) fail(ErrorCode::ShapeMismatch, "matmul: " + shape(a.value()) + " * " + shape(b.value()));
  const int ia = a.id, ib = b.id;
  return a.graph->record(a.value() * b.value(), {ia, ib}, [ia, ib](Graph& g, int self) {
    const MatX& go = g.grad(self);
    if (g.requires_grad(ia)) g.grad_of(ia).noalias() += go * g.value(ib).transpose();
    if (g.requires_grad(ib)) g.grad_of(ib).noalias() += g.value(ia).transpose() * go;
  });
}

Var add(Var a, Var b) {
  require_same_shape(a, b, "add");
  const int ia = a.id, ib = b.id;
  return a.graph->record(a.value() + b.value(), {ia, ib}, [ia, ib](Graph& g, int self) {
    if (g.requires_grad(ia)) g.grad_of(ia) += g.grad(self);
    if (g.requires_grad(ib)) g.grad_of(ib) += g.grad(self);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a, b, "sub");
  const int ia = a.id, ib = b.id;
  return a.graph->record(a.value() - b.value(), {ia, ib}, [ia, ib](Graph& g, int self) {
    if (g.requires_grad(ia)) g.grad_of(ia) += g.grad(self);
    if (g.requires_grad(ib)) g.grad_of(ib) -= g.grad(self);
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a, b, "mul");
  const int ia = a.id, ib = b.id;
  return a.graph->record(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Graph& g, int self) {
    if (g.requires_grad(ia)) g.grad_of(ia) += g.grad(self).cwiseProduct(g.value(ib));
    if (g.requires_grad(ib)) g.grad_of(ib) += g.grad(self).cwiseProduct(g.value(ia));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id;
  return a.graph->record(a.value() * s, {ia}, [ia, s](Graph& g, int self) { g.grad_of(ia) += s * g.grad(self); });
}

Var add_bias(Var a, Var bias) {
  require_same_graph(a, bias);
  if (bias.cols() != 1 || bias.rows() != a.rows()) {
    fail(ErrorCode::ShapeMismatch, "add_bias: " + shape(a.value()) + " + " + shape(bias.value()));
  }
  const int ia = a.id, ib = bias.id;
  MatX out = a.value().colwise() + bias.value().col(0);
  return a.graph->record(std::move(out), {ia, ib}, [ia, ib](Graph& g, int self) {
    if (g.requires_grad(ia)) g.grad_of(ia) += g.grad(self);
    if (g.requires_grad(ib)) g.grad_of(ib) += g.grad(self).rowwise().sum();
  });
}

Var tanh(Var a) {
  const int ia = a.id;
  MatX out = a.value().array().tanh().matrix();
  return a.graph->record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const auto y = g.value(self).array();
    g.grad_of(ia).array() += g.grad(self).array() * (1.0 - y * y);
  });
}

Var sigmoid(Var a) {
  const int ia = a.id;
  MatX out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.graph->record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const auto y = g.value(self).array();
    g.grad_of(ia).array() += g.grad(self).array() * y * (1.0 - y);
  });
}

Var relu(Var a) {
  const int ia = a.id;
  MatX out = a.value().cwiseMax(0.0);
  return a.graph->record(std::move(out), {ia}, [ia](Graph& g, int self) {
    const auto x = g.value(ia).array();
    g.grad_of(ia).array() += (x > 0.0).select(g.grad(self).array(), 0.0);
  });
}

Var transpose(Var a) {
  const int ia = a.id;
  MatX out = a.value().transpose();
  return a.graph->record(std::move(out), {ia}, [ia](Graph& g, int self) { g.grad_of(ia) += g.grad(self).transpose(); });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) fail(ErrorCode::ShapeMismatch, "concat_rows: no operands");
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require_same_graph(parts.front(), p);
    if (p.cols() != parts.front().cols()) fail(ErrorCode::ShapeMismatch, "concat_rows: column count differs");
    rows += p.rows();
  }
  MatX out(rows, parts.front().cols());
  std::vector<int> ids;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
    ids.push_back(p.id);
  }
  return parts.front().graph->record(std::move(out), ids, [ids](Graph& g, int self) {
    Eigen::Index at = 0;
    for (int id : ids) {
      const Eigen::Index r = g.value(id).rows();
      if (g.requires_grad(id)) g.grad_of(id) += g.grad(self).middleRows(at, r);
      at += r;
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) fail(ErrorCode::ShapeMismatch, "concat_cols: no operands");
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require_same_graph(parts.front(), p);
    if (p.rows() != parts.front().rows()) fail(ErrorCode::ShapeMismatch, "concat_cols: row count differs");
    cols += p.cols();
  }
  MatX out(parts.front().rows(), cols);
  std::vector<int> ids;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    ids.push_back(p.id);
  }
  return parts.front().graph->record(std::move(out), ids, [ids](Graph& g, int self) {
    Eigen::Index at = 0;
    for (int id : ids) {
      const Eigen::Index c = g.value(id).cols();
      if (g.requires_grad(id)) g.grad_of(id) += g.grad(self).middleCols(at, c);
      at += c;
    }
  });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) fail(ErrorCode::ShapeMismatch, "slice_rows out of range");
  const int ia = a.id;
  MatX out = a.value().middleRows(begin, count);
  return a.graph->record(std::move(out), {ia}, [ia, begin, count](Graph& g, int self) {
    g.grad_of(ia).middleRows(begin, count) += g.grad(self);
  });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) fail(ErrorCode::ShapeMismatch, "slice_cols out of range");
  const int ia = a.id;
  MatX out = a.value().middleCols(begin, count);
  return a.graph->record(std::move(out), {ia}, [ia, begin, count](Graph& g, int self) {
    g.grad_of(ia).middleCols(begin, count) += g.grad(self);
  });
}

Var gather_cols(Var a, const std::vector<int>& cols) {
  MatX out(a.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= a.cols()) fail(ErrorCode::ShapeMismatch, "gather_cols index out of range");
    out.col(static_cast<Eigen::Index>(j)) = a.value().col(cols[j]);
  }
  const int ia = a.id;
  return a.graph->record(std::move(out), {ia}, [ia, cols](Graph& g, int self) {
    MatX& ga = g.grad_of(ia);
    for (std::size_t j = 0; j < cols.size(); ++j) ga.col(cols[j]) += g.grad(self).col(static_cast<Eigen::Index>(j));
  });
}

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.value().size()) fail(ErrorCode::ShapeMismatch, "reshape changes element count");
  const int ia = a.id;
  MatX out = a.value().reshaped(rows, cols);
  return a.graph->record(std::move(out), {ia}, [ia](Graph& g, int self) {
    MatX& ga = g.grad_of(ia);
    ga += g.grad(self).reshaped(ga.rows(), ga.cols());
  });
}

Var broadcast_row(Var v, Eigen::Index rows) {
  if (v.cols() != 1) fail(ErrorCode::ShapeMismatch, "broadcast_row expects a column vector");
  const int iv = v.id;
  MatX out = v.value().transpose().replicate(rows, 1);
  return v.graph->record(std::move(out), {iv}, [iv](Graph& g, int self) {
    g.grad_of(iv) += g.grad(self).colwise().sum().transpose();
  });
}

Var sum(Var a) {
  const int ia = a.id;
  MatX out(1, 1);
  out(0, 0) = a.value().sum();
  return a.graph->record(std::move(out), {ia}, [ia](Graph& g, int self) { g.grad_of(ia).array() += g.grad(self)(0, 0); });
}

Var mean(Var a) {
  if (a.value().size() == 0) fail(ErrorCode::ShapeMismatch, "mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_abs(Var a) {
  const int ia = a.id;
  MatX out(1, 1);
  out(0, 0) = a.value().cwiseAbs().sum();
  return a.graph->record(std::move(out), {ia}, [ia](Graph& g, int self) {
    g.grad_of(ia).array() += g.grad(self)(0, 0) * g.value(ia).array().sign();
  });
}

Var mean_abs(Var a) {
  if (a.value().size() == 0) fail(ErrorCode::ShapeMismatch, "mean of an empty matrix");
  return scale(sum_abs(a), 1.0 / static_cast<double>(a.value().size()));
}

// ---- convolution ----------------------------------------------------------

int conv3d_output_size(int size, int stride) { return (size - 1) / stride + 1; }

namespace {

// Column (ci·27 + kz·9 + ky·3 + kx, output voxel) of the unfolded input.
MatX im2col(const MatX& x, int size, int stride) {
  const int cin = static_cast<int>(x.rows());
  const int out = conv3d_output_size(size, stride);
  MatX cols = MatX::Zero(static_cast<Eigen::Index>(cin) * 27, static_cast<Eigen::Index>(out) * out * out);
  for (int oz = 0; oz < out; ++oz) {
    for (int oy = 0; oy < out; ++oy) {
      for (int ox = 0; ox < out; ++ox) {
        const Eigen::Index o = ox + out * (oy + static_cast<Eigen::Index>(out) * oz);
        for (int kz = 0; kz < 3; ++kz) {
          const int iz = oz * stride - 1 + kz;
          if (iz < 0 || iz >= size) continue;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride - 1 + ky;
            if (iy < 0 || iy >= size) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride - 1 + kx;
              if (ix < 0 || ix >= size) continue;
              const Eigen::Index v = ix + size * (iy + static_cast<Eigen::Index>(size) * iz);
              const int k = kz * 9 + ky * 3 + kx;
              for (int c = 0; c < cin; ++c) cols(c * 27 + k, o) = x(c, v);
            }
          }
        }
      }
    }
  }
  return cols;
}

void col2im_add(const MatX& cols, int size, int stride, MatX& dx) {
  const int cin = static_cast<int>(dx.rows());
  const int out = conv3d_output_size(size, stride);
  for (int oz = 0; oz < out; ++oz) {
    for (int oy = 0; oy < out; ++oy) {
      for (int ox = 0; ox < out; ++ox) {
        const Eigen::Index o = ox + out * (oy + static_cast<Eigen::Index>(out) * oz);
        for (int kz = 0; kz < 3; ++kz) {
          const int iz = oz * stride - 1 + kz;
          if (iz < 0 || iz >= size) continue;
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = oy * stride - 1 + ky;
            if (iy < 0 || iy >= size) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = ox * stride - 1 + kx;
              if (ix < 0 || ix >= size) continue;
              const Eigen::Index v = ix + size * (iy + static_cast<Eigen::Index>(size) * iz);
              const int k = kz * 9 + ky * 3 + kx;
              for (int c = 0; c < cin; ++c) dx(c, v) += cols(c * 27 + k, o);
            }
          }
        }
      }
    }
  }
}

} // namespace

Var conv3d(Var x, int size, Var weight, Var bias, int stride) {
  require_same_graph(x, weight);
  require_same_graph(x, bias);
  const Eigen::Index voxels = static_cast<Eigen::Index>(size) * size * size;
  if (size < 1 || stride < 1 || x.cols() != voxels) fail(ErrorCode::ShapeMismatch, "conv3d: input is not C x size^3");
  if (weight.cols() != x.rows() * 27) fail(ErrorCode::ShapeMismatch, "conv3d: weight expects C_in*27 columns");
  if (bias.rows() != weight.rows() || bias.cols() != 1) fail(ErrorCode::ShapeMismatch, "conv3d: bias shape");

  auto cols = std::make_shared<MatX>(im2col(x.value(), size, stride));
  MatX out = weight.value() * *cols;
  out.colwise() += bias.value().col(0);
  const int ix = x.id, iw = weight.id, ib = bias.id;
  return x.graph->record(std::move(out), {ix, iw, ib}, [=](Graph& g, int self) {
    const MatX& go = g.grad(self);
    if (g.requires_grad(iw)) g.grad_of(iw).noalias() += go * cols->transpose();
    if (g.requires_grad(ib)) g.grad_of(ib) += go.rowwise().sum();
    if (g.requires_grad(ix)) {
      const MatX dcols = g.value(iw).transpose() * go;
      col2im_add(dcols, size, stride, g.grad_of(ix));
    }
  });
}

Var global_avg_pool(Var x) {
  if (x.cols() == 0) fail(ErrorCode::ShapeMismatch, "global_avg_pool of an empty input");
  const int ix = x.id;
  MatX out = x.value().rowwise().mean();
  return x.graph->record(std::move(out), {ix}, [ix](Graph& g, int self) {
    MatX& gx = g.grad_of(ix);
    gx.colwise() += g.grad(self).col(0) / static_cast<double>(gx.cols());
  });
}

// ---- recurrent cell -------------------------------------------------------

Var gru_cell(Var x, Var h, Var wx, Var wh, Var bx, Var bh) {
  for (Var v : {h, wx, wh, bx, bh}) require_same_graph(x, v);
  const Eigen::Index H = h.rows();
  if (x.cols() != 1 || h.cols() != 1 || wx.rows() != 3 * H || wx.cols() != x.rows() || wh.rows() != 3 * H ||
      wh.cols() != H || bx.rows() != 3 * H || bh.rows() != 3 * H || bx.cols() != 1 || bh.cols() != 1) {
    fail(ErrorCode::ShapeMismatch, "gru_cell: inconsistent shapes");
  }
  const VecX gx = wx.value() * x.value().col(0) + bx.value().col(0);
  const VecX gh = wh.value() * h.value().col(0) + bh.value().col(0);
  const auto sig = [](const VecX& v) -> VecX { return (1.0 / (1.0 + (-v.array()).exp())).matrix(); };
  const VecX r = sig(gx.head(H) + gh.head(H));
  const VecX z = sig(gx.segment(H, H) + gh.segment(H, H));
  const VecX ghn = gh.tail(H);
  const VecX n = (gx.tail(H).array() + r.array() * ghn.array()).tanh().matrix();
  MatX out = ((1.0 - z.array()) * n.array() + z.array() * h.value().col(0).array()).matrix();

  const int ix = x.id, ih = h.id, iwx = wx.id, iwh = wh.id, ibx = bx.id, ibh = bh.id;
  return x.graph->record(std::move(out), {ix, ih, iwx, iwh, ibx, ibh}, [=](Graph& g, int self) {
    const VecX go = g.grad(self).col(0);
    const VecX hv = g.value(ih).col(0);
    const VecX dz = go.cwiseProduct(hv - n);
    const VecX dn = go.cwiseProduct((1.0 - z.array()).matrix());
    const VecX dan = dn.cwiseProduct((1.0 - n.array().square()).matrix());
    const VecX dr = dan.cwiseProduct(ghn);
    const VecX dar = dr.cwiseProduct((r.array() * (1.0 - r.array())).matrix());
    const VecX daz = dz.cwiseProduct((z.array() * (1.0 - z.array())).matrix());
    VecX dgx(3 * H), dgh(3 * H);
    dgx << dar, daz, dan;
    dgh << dar, daz, dan.cwiseProduct(r);
    if (g.requires_grad(iwx)) g.grad_of(iwx).noalias() += dgx * g.value(ix).col(0).transpose();
    if (g.requires_grad(ibx)) g.grad_of(ibx) += dgx;
    if (g.requires_grad(ix)) g.grad_of(ix).noalias() += g.value(iwx).transpose() * dgx;
    if (g.requires_grad(iwh)) g.grad_of(iwh).noalias() += dgh * hv.transpose();
    if (g.requires_grad(ibh)) g.grad_of(ibh) += dgh;
    if (g.requires_grad(ih)) {
      MatX& gh_in = g.grad_of(ih);
      gh_in.col(0) += go.cwiseProduct(z);
      gh_in.noalias() += g.value(iwh).transpose() * dgh;
    }
  });
}

} // namespace mdkit::nn
