#pragma once

#include "mdkit/geometry/sdf.hpp"
#include "mdkit/nn/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace mdkit::nn {

// Shapes and widths of every network. Problem sizes (K, P, T, U, M, grid)
// must match the data; the widths are architecture choices.
struct ModelConfig {
  int K = 67;
  int P = 150;
  int T = 15;
  int U = 30;
  int M = 99;
  int grid = 64;
  int gcn_hidden = 64;
  int gcn_blocks = 4;
  std::vector<int> scene_channels = {8, 16, 32};
  int scene_feature = 64;
  int motion_hidden = 128;
  int forecaster_hidden = 256;
  bool residual_pose = true;

  int length() const { return T + U; }
};

enum class Activation { Identity, Tanh };

struct GcnLayer {
  int A = -1;  // n × n adjacency
  int W = -1;  // F_in × F_out
  Activation activation = Activation::Tanh;
};

// σ(A·F·W) on plain matrices.
MatX gcn_forward(const MatX& A, const MatX& F, const MatX& W, Activation activation);
// σ(A·F·W) on graph nodes.
Var gcn_forward(Graph& graph, const ParameterStore& store, const GcnLayer& layer, Var F);

// Residual GCN stack over n nodes whose features are L DCT coefficients
// plus a broadcast context vector. Output has the coefficient shape n × L.
struct GcnBranch {
  GcnLayer input;
  std::vector<std::pair<GcnLayer, GcnLayer>> blocks;
  GcnLayer output;
  int nodes = 0;
};

struct SceneEncoder {
  std::vector<int> weights, biases;  // per conv stage
  int head_w = -1, head_b = -1;
  int resolution = 0;
};

struct MotionEncoder {
  int wx = -1, wh = -1, bx = -1, bh = -1;
  int hidden = 0;
};

struct DistancePredictor {
  SceneEncoder scene;
  MotionEncoder motion;
  GcnBranch vertex;
  GcnBranch basis;
};

struct MotionForecaster {
  SceneEncoder scene;
  MotionEncoder motion;
  int wx = -1, wh = -1, bx = -1, bh = -1;
  int head_w = -1, head_b = -1;
  int hidden = 0;
  bool residual = true;
};

// Both networks registered in one store under "predictor." / "forecaster."
// name prefixes.
struct Model {
  ModelConfig config;
  ParameterStore store;
  DistancePredictor predictor;
  MotionForecaster forecaster;

  std::vector<int> predictor_params() const;
  std::vector<int> forecaster_params() const;
};

Model build_model(const ModelConfig& config, std::uint64_t seed);

Var encode_scene(Graph& graph, const ParameterStore& store, const SceneEncoder& encoder,
                 const geometry::SdfVolume& volume);
// X is M × T, one pose per column.
Var encode_motion(Graph& graph, const ParameterStore& store, const MotionEncoder& encoder, Var X);

struct DistancePrediction {
  Var D;  // K × (T+U)
  Var B;  // P × (T+U)
  Var scene;
  Var motion;
};

DistancePrediction predict_distances(Graph& graph, const Model& model, const MatX& D_hist, const MatX& B_hist,
                                     const geometry::SdfVolume& volume, const MatX& X);

// Autoregressive rollout of `steps` poses. D_future (K × steps) and B_future
// (P × steps) hold the distance columns for the predicted frames.
std::vector<Var> forecast_motion(Graph& graph, const Model& model, Var x_last, Var D_future, Var B_future,
                                 Var scene_feature, Var motion_feature, int steps);

// Adam with per-parameter moments; updates only the listed parameters.
class Adam {
 public:
  Adam(const ParameterStore& store, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(ParameterStore& store, const Gradients& grads, double lr, const std::vector<int>& ids);

 private:
  std::vector<MatX> m_, v_;
  std::vector<int> t_;
  double beta1_, beta2_, eps_;
};

// FNV-1a 64-bit digest.
std::uint64_t fnv1a(const std::string& text);

// Binary "MDCK" v1: magic, u32 version, u64 digest (two u32, low first),
// u32 count, then per parameter: u32 name length, name, u32 rows, u32 cols,
// rows·cols f64 in column-major order.
void write_checkpoint(const std::filesystem::path& path, const ParameterStore& store, std::uint64_t digest,
                      const std::vector<int>& ids);
// Loads every blob into the parameter of the same name. Throws FormatError on
// digest, name or shape disagreement.
void read_checkpoint(const std::filesystem::path& path, ParameterStore& store, std::uint64_t digest);

} // namespace mdkit::nn
