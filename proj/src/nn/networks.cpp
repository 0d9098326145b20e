#include "mdkit/nn/networks.hpp"

#include "mdkit/error.hpp"
#include "mdkit/io/binary.hpp"
#include "mdkit/spectral/dct.hpp"

#include <cmath>

namespace mdkit::nn {

namespace {

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  MatX uniform(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, double gain = 1.0) {
    const double bound = gain / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    MatX m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng_);
    return m;
  }

  MatX near_identity(Eigen::Index n, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    MatX m = MatX::Identity(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i) m(i, j) += dist(rng_);
    return m;
  }

 private:
  std::mt19937_64 rng_;
};

// Output layers start small so an untrained model stays close to its skip path.
constexpr double kOutputGain = 1e-2;

GcnLayer make_gcn(ParameterStore& store, Initializer& init, const std::string& name, int nodes, int fin, int fout,
                  Activation act, double gain = 1.0) {
  GcnLayer layer;
  layer.A = store.add(name + ".A", init.near_identity(nodes, 1e-3));
  layer.W = store.add(name + ".W", init.uniform(fin, fout, fin, gain));
  layer.activation = act;
  return layer;
}

GcnBranch make_branch(ParameterStore& store, Initializer& init, const std::string& name, int nodes,
                      const ModelConfig& c) {
  GcnBranch b;
  b.nodes = nodes;
  const int context = c.scene_feature + c.motion_hidden;
  b.input = make_gcn(store, init, name + ".in", nodes, c.length() + context, c.gcn_hidden, Activation::Tanh);
  for (int i = 0; i < c.gcn_blocks; ++i) {
    const std::string block = name + ".block" + std::to_string(i);
    GcnLayer l1 = make_gcn(store, init, block + ".a", nodes, c.gcn_hidden, c.gcn_hidden, Activation::Tanh);
    GcnLayer l2 = make_gcn(store, init, block + ".b", nodes, c.gcn_hidden, c.gcn_hidden, Activation::Tanh);
    b.blocks.emplace_back(l1, l2);
  }
  b.output = make_gcn(store, init, name + ".out", nodes, c.gcn_hidden, c.length(), Activation::Identity,
                      kOutputGain);
  return b;
}

SceneEncoder make_scene(ParameterStore& store, Initializer& init, const std::string& name, const ModelConfig& c) {
  SceneEncoder e;
  e.resolution = c.grid;
  int cin = 1;
  for (std::size_t i = 0; i < c.scene_channels.size(); ++i) {
    const int cout = c.scene_channels[i];
    const std::string stage = name + ".conv" + std::to_string(i);
    e.weights.push_back(store.add(stage + ".W", init.uniform(cout, cin * 27, cin * 27)));
    e.biases.push_back(store.add(stage + ".b", MatX::Zero(cout, 1)));
    cin = cout;
  }
  e.head_w = store.add(name + ".head.W", init.uniform(c.scene_feature, cin, cin));
  e.head_b = store.add(name + ".head.b", MatX::Zero(c.scene_feature, 1));
  return e;
}

struct GruParams {
  int wx, wh, bx, bh;
};

GruParams make_gru(ParameterStore& store, Initializer& init, const std::string& name, int in, int hidden) {
  return {store.add(name + ".Wx", init.uniform(3 * hidden, in, hidden)),
          store.add(name + ".Wh", init.uniform(3 * hidden, hidden, hidden)),
          store.add(name + ".bx", MatX::Zero(3 * hidden, 1)), store.add(name + ".bh", MatX::Zero(3 * hidden, 1))};
}

MotionEncoder make_motion(ParameterStore& store, Initializer& init, const std::string& name, const ModelConfig& c) {
  const GruParams p = make_gru(store, init, name, c.M, c.motion_hidden);
  return {p.wx, p.wh, p.bx, p.bh, c.motion_hidden};
}

std::vector<int> ids_with_prefix(const ParameterStore& store, const std::string& prefix) {
  std::vector<int> ids;
  for (int i = 0; i < store.size(); ++i) {
    if (store.name(i).rfind(prefix, 0) == 0) ids.push_back(i);
  }
  return ids;
}

Var branch_forward(Graph& g, const ParameterStore& store, const GcnBranch& b, Var coeffs, Var scene, Var motion) {
  Var h = gcn_forward(g, store, b.input,
                      concat_cols({coeffs, broadcast_row(scene, b.nodes), broadcast_row(motion, b.nodes)}));
  for (const auto& [l1, l2] : b.blocks) h = add(h, gcn_forward(g, store, l2, gcn_forward(g, store, l1, h)));
  return add(gcn_forward(g, store, b.output, h), coeffs);
}

void require_shape(const MatX& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    fail(ErrorCode::ShapeMismatch, std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                                       std::to_string(m.cols()) + ", expected " + std::to_string(rows) + "x" +
                                       std::to_string(cols));
  }
}

} // namespace

// ---- GCN ------------------------------------------------------------------

MatX gcn_forward(const MatX& A, const MatX& F, const MatX& W, Activation activation) {
  if (A.rows() != A.cols() || A.cols() != F.rows() || F.cols() != W.rows()) {
    fail(ErrorCode::ShapeMismatch, "gcn layer shapes disagree");
  }
  MatX out = A * F * W;
  if (activation == Activation::Tanh) out = out.array().tanh().matrix();
  return out;
}

Var gcn_forward(Graph& graph, const ParameterStore& store, const GcnLayer& layer, Var F) {
  Var A = graph.param(store, layer.A);
  Var W = graph.param(store, layer.W);
  if (A.rows() != A.cols() || A.cols() != F.rows() || F.cols() != W.rows()) {
    fail(ErrorCode::ShapeMismatch, "gcn layer shapes disagree");
  }
  Var out = matmul(matmul(A, F), W);
  return layer.activation == Activation::Tanh ? tanh(out) : out;
}

// ---- model ----------------------------------------------------------------

std::vector<int> Model::predictor_params() const { return ids_with_prefix(store, "predictor."); }
std::vector<int> Model::forecaster_params() const { return ids_with_prefix(store, "forecaster."); }

Model build_model(const ModelConfig& c, std::uint64_t seed) {
  if (c.K < 1 || c.P < 1 || c.T < 1 || c.U < 1 || c.M < 9 || c.grid < 1 || c.scene_channels.empty()) {
    fail(ErrorCode::InvalidCount, "model dimensions must be positive");
  }
  Model m;
  m.config = c;
  Initializer init(seed);
  auto& s = m.store;
  m.predictor.scene = make_scene(s, init, "predictor.scene", c);
  m.predictor.motion = make_motion(s, init, "predictor.motion", c);
  m.predictor.vertex = make_branch(s, init, "predictor.vertex", c.K, c);
  m.predictor.basis = make_branch(s, init, "predictor.basis", c.P, c);

  auto& f = m.forecaster;
  f.scene = make_scene(s, init, "forecaster.scene", c);
  f.motion = make_motion(s, init, "forecaster.motion", c);
  f.hidden = c.forecaster_hidden;
  f.residual = c.residual_pose;
  const int in = c.M + c.K + c.P + c.scene_feature + c.motion_hidden;
  const GruParams cell = make_gru(s, init, "forecaster.cell", in, c.forecaster_hidden);
  f.wx = cell.wx;
  f.wh = cell.wh;
  f.bx = cell.bx;
  f.bh = cell.bh;
  f.head_w = s.add("forecaster.head.W", init.uniform(c.M, c.forecaster_hidden, c.forecaster_hidden, kOutputGain));
  f.head_b = s.add("forecaster.head.b", MatX::Zero(c.M, 1));
  return m;
}

Var encode_scene(Graph& g, const ParameterStore& store, const SceneEncoder& e, const geometry::SdfVolume& volume) {
  if (volume.resolution() != e.resolution) {
    fail(ErrorCode::ResolutionMismatch, "volume resolution " + std::to_string(volume.resolution()) +
                                            " does not match the encoder's " + std::to_string(e.resolution));
  }
  const auto& vals = volume.values();
  MatX x(1, static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = vals[i];
  Var h = g.constant(std::move(x));
  int size = e.resolution;
  for (std::size_t i = 0; i < e.weights.size(); ++i) {
    h = relu(conv3d(h, size, g.param(store, e.weights[i]), g.param(store, e.biases[i]), 2));
    size = conv3d_output_size(size, 2);
  }
  return add_bias(matmul(g.param(store, e.head_w), global_avg_pool(h)), g.param(store, e.head_b));
}

Var encode_motion(Graph& g, const ParameterStore& store, const MotionEncoder& e, Var X) {
  if (X.cols() < 1) fail(ErrorCode::EmptyHistory, "motion history has no frames");
  Var h = g.constant(MatX::Zero(e.hidden, 1));
  Var wx = g.param(store, e.wx), wh = g.param(store, e.wh), bx = g.param(store, e.bx), bh = g.param(store, e.bh);
  for (Eigen::Index t = 0; t < X.cols(); ++t) h = gru_cell(slice_cols(X, t, 1), h, wx, wh, bx, bh);
  return h;
}

DistancePrediction predict_distances(Graph& g, const Model& model, const MatX& D_hist, const MatX& B_hist,
                                     const geometry::SdfVolume& volume, const MatX& X) {
  const ModelConfig& c = model.config;
  if (X.cols() < 1) fail(ErrorCode::EmptyHistory, "motion history has no frames");
  require_shape(D_hist, c.K, c.T, "vertex distance history");
  require_shape(B_hist, c.P, c.T, "basis distance history");
  require_shape(X, c.M, c.T, "motion history");

  const auto& p = model.predictor;
  DistancePrediction out;
  out.scene = encode_scene(g, model.store, p.scene, volume);
  out.motion = encode_motion(g, model.store, p.motion, g.constant(X));
  Var C = g.constant(spectral::dct_basis(c.length())->matrix());
  Var hd = g.constant(spectral::dct_rows(spectral::pad_history(D_hist, c.U)));
  Var hb = g.constant(spectral::dct_rows(spectral::pad_history(B_hist, c.U)));
  out.D = matmul(branch_forward(g, model.store, p.vertex, hd, out.scene, out.motion), C);
  out.B = matmul(branch_forward(g, model.store, p.basis, hb, out.scene, out.motion), C);
  return out;
}

std::vector<Var> forecast_motion(Graph& g, const Model& model, Var x_last, Var D_future, Var B_future,
                                 Var scene_feature, Var motion_feature, int steps) {
  const ModelConfig& c = model.config;
  const auto& f = model.forecaster;
  require_shape(x_last.value(), c.M, 1, "last pose");
  require_shape(D_future.value(), c.K, steps, "future vertex distances");
  require_shape(B_future.value(), c.P, steps, "future basis distances");
  require_shape(scene_feature.value(), c.scene_feature, 1, "scene feature");
  require_shape(motion_feature.value(), c.motion_hidden, 1, "motion feature");

  Var wx = g.param(model.store, f.wx), wh = g.param(model.store, f.wh);
  Var bx = g.param(model.store, f.bx), bh = g.param(model.store, f.bh);
  Var hw = g.param(model.store, f.head_w), hb = g.param(model.store, f.head_b);
  Var h = g.constant(MatX::Zero(f.hidden, 1));
  std::vector<Var> poses;
  Var prev = x_last;
  for (int u = 0; u < steps; ++u) {
    Var in = concat_rows({prev, slice_cols(D_future, u, 1), slice_cols(B_future, u, 1), scene_feature, motion_feature});
    h = gru_cell(in, h, wx, wh, bx, bh);
    Var delta = add_bias(matmul(hw, h), hb);
    prev = f.residual ? add(prev, delta) : delta;
    poses.push_back(prev);
  }
  return poses;
}

// ---- optimizer ------------------------------------------------------------

Adam::Adam(const ParameterStore& store, double beta1, double beta2, double eps)
    : t_(store.size(), 0), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (int i = 0; i < store.size(); ++i) {
    m_.push_back(MatX::Zero(store.value(i).rows(), store.value(i).cols()));
    v_.push_back(m_.back());
  }
}

void Adam::step(ParameterStore& store, const Gradients& grads, double lr, const std::vector<int>& ids) {
  for (int id : ids) {
    const MatX& g = grads.values[id];
    m_[id] = beta1_ * m_[id] + (1.0 - beta1_) * g;
    v_[id] = beta2_ * v_[id] + (1.0 - beta2_) * g.cwiseProduct(g);
    const int t = ++t_[id];
    const double c1 = 1.0 - std::pow(beta1_, t);
    const double c2 = 1.0 - std::pow(beta2_, t);
    store.value(id).array() -= lr * (m_[id].array() / c1) / ((v_[id].array() / c2).sqrt() + eps_);
  }
}

// ---- checkpoints ----------------------------------------------------------

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_checkpoint(const std::filesystem::path& path, const ParameterStore& store, std::uint64_t digest,
                      const std::vector<int>& ids) {
  io::BinaryWriter w(path);
  w.magic("MDCK");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(digest & 0xffffffffULL));
  w.u32(static_cast<std::uint32_t>(digest >> 32));
  w.u32(static_cast<std::uint32_t>(ids.size()));
  for (int id : ids) {
    const std::string& name = store.name(id);
    const MatX& v = store.value(id);
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(v.rows()));
    w.u32(static_cast<std::uint32_t>(v.cols()));
    for (Eigen::Index i = 0; i < v.size(); ++i) w.f64(v.data()[i]);
  }
  w.close();
}

void read_checkpoint(const std::filesystem::path& path, ParameterStore& store, std::uint64_t digest) {
  io::BinaryReader r(path);
  r.expect_magic("MDCK");
  if (r.u32() != 1) fail(ErrorCode::FormatError, "unsupported checkpoint version");
  const std::uint64_t lo = r.u32();
  const std::uint64_t hi = r.u32();
  if ((lo | (hi << 32)) != digest) fail(ErrorCode::FormatError, "checkpoint was written for a different config");
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.string(r.u32());
    const int id = store.find(name);
    if (id < 0) fail(ErrorCode::FormatError, "unknown parameter " + name);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    MatX& v = store.value(id);
    if (v.rows() != rows || v.cols() != cols) fail(ErrorCode::FormatError, "shape mismatch for " + name);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = r.f64();
  }
  r.expect_end();
}

} // namespace mdkit::nn
