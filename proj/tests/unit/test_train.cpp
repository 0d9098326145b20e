#include "doctest.h"

#include "../support/gradcheck.hpp"
#include "mdkit/body/kinematics.hpp"
#include "mdkit/distance/mutual_distance.hpp"
#include "mdkit/error.hpp"
#include "mdkit/geometry/mesh.hpp"
#include "mdkit/nn/geometry_ops.hpp"
#include "mdkit/train/trainer.hpp"

#include <filesystem>
#include <random>
#include <sstream>

using namespace mdkit;
using namespace mdkit::train;
using namespace mdkit::testing;

namespace {

geometry::SdfVolume floor_volume(int res = 16) {
  const auto mesh = geometry::make_box(Vec3(-4, -4, -1), Vec3(4, 4, 0));
  return geometry::voxelize_sdf(mesh, geometry::GridSpec::around(Vec3(0, 0, 0.5), 1.5, res));
}

geometry::SdfVolume toy_scene(int res = 8) {
  auto mesh = geometry::make_box(Vec3(-3, -3, -1), Vec3(3, 3, 0));
  geometry::append(mesh, geometry::make_box(Vec3(0.4, -0.3, 0.0), Vec3(0.9, 0.3, 0.6)));
  return geometry::voxelize_sdf(mesh, geometry::GridSpec::around(Vec3(0, 0, 0.5), 1.0, res));
}

MatX walking_poses(const body::Skeleton& skel, int frames, std::mt19937_64& rng, double noise = 0.05) {
  std::normal_distribution<double> n(0.0, noise);
  MatX Y(skel.pose_dim(), frames);
  for (int t = 0; t < frames; ++t) {
    body::Pose p = body::Pose::rest(skel, Vec3(0.03 * t, 0.0, 0.97));
    for (int i = 3; i < p.dim(); ++i) p.vector()[i] += n(rng);
    Y.col(t) = p.vector();
  }
  return Y;
}

MatX marker_distances(const body::Skeleton& skel, const geometry::SdfVolume& volume, const MatX& Y) {
  MatX D(skel.marker_count(), Y.cols());
  for (Eigen::Index u = 0; u < Y.cols(); ++u) {
    D.col(u) = distance::per_vertex_signed_distance(volume, body::marker_vertices(skel, body::Pose(VecX(Y.col(u)))));
  }
  return D;
}

SyntheticConfig tiny_synthetic() {
  SyntheticConfig c;
  c.train = 4;
  c.test_seen = 2;
  c.test_unseen = 1;
  c.seen_layouts = 2;
  c.unseen_layouts = 1;
  c.T = 5;
  c.U = 6;
  c.markers = 8;
  c.basis_points = 10;
  c.grid = 16;
  c.surface_density = 300.0;
  return c;
}

TrainConfig tiny_training() {
  TrainConfig c;
  c.epochs_predictor = 1;
  c.epochs_forecaster = 1;
  c.epochs_finetune = 1;
  c.batch_size = 2;
  c.loss_surface_density = 100.0;
  c.model.gcn_hidden = 6;
  c.model.gcn_blocks = 1;
  c.model.scene_channels = {2, 3, 4};
  c.model.scene_feature = 5;
  c.model.motion_hidden = 6;
  c.model.forecaster_hidden = 7;
  return c;
}

void require_same_store(const nn::ParameterStore& a, const nn::ParameterStore& b) {
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.name(i) == b.name(i));
    CHECK(a.value(i) == b.value(i));
  }
}

} // namespace

TEST_CASE("loss_dist matches a loop oracle and the unit-residual value") {
  SUBCASE("unit residuals give exactly 2") {
    const MatX D = MatX::Zero(2, 3), B = MatX::Zero(2, 3);
    CHECK(loss_dist(MatX::Ones(2, 3), MatX::Ones(2, 3), D, B) == 2.0);
    nn::Graph g;
    CHECK(loss_dist(g.constant(MatX::Ones(2, 3)), g.constant(MatX::Ones(2, 3)), D, B).scalar() == 2.0);
  }
  SUBCASE("random arrays") {
    std::mt19937_64 rng(3);
    const int K = 5, P = 7, L = 9;
    const MatX Dh = random_matrix(K, L, rng), D = random_matrix(K, L, rng);
    const MatX Bh = random_matrix(P, L, rng), B = random_matrix(P, L, rng);
    double sum_d = 0.0, sum_b = 0.0;
    for (int l = 0; l < L; ++l) {
      for (int k = 0; k < K; ++k) sum_d += std::abs(Dh(k, l) - D(k, l));
      for (int p = 0; p < P; ++p) sum_b += std::abs(Bh(p, l) - B(p, l));
    }
    const double oracle = (sum_d / K + sum_b / P) / L;
    CHECK(loss_dist(Dh, Bh, D, B) == doctest::Approx(oracle).epsilon(1e-14));
    nn::Graph g;
    CHECK(loss_dist(g.constant(Dh), g.constant(Bh), D, B).scalar() == doctest::Approx(oracle).epsilon(1e-14));
    const double err = check_inputs(
        [&](nn::Graph&, const std::vector<nn::Var>& v) { return loss_dist(v[0], v[1], D, B); }, {Dh, Bh});
    CHECK(err < 1e-4);
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(loss_dist(MatX::Zero(2, 3), MatX::Zero(2, 3), MatX::Zero(2, 4), MatX::Zero(2, 4)), Error);
    CHECK_THROWS_AS(loss_dist(MatX::Zero(2, 3), MatX::Zero(2, 3), MatX::Zero(2, 3), MatX::Zero(2, 2)), Error);
  }
}

TEST_CASE("combine applies the default weights") {
  MotionComponents c;
  c.global = c.local = c.vertex = c.basis = 1.0;
  CHECK(std::abs(combine(c, LossWeights{}) - 3.5) < 1e-12);
}

TEST_CASE("loss_motion is zero at the ground truth") {
  const auto skel = body::default_skeleton(12);
  const auto volume = toy_scene(16);
  const auto basis = distance::fibonacci_basis(8, 1.5);
  std::mt19937_64 rng(5);
  const MatX Y = walking_poses(skel, 4, rng);
  const MatX D = marker_distances(skel, volume, Y);
  const MatX B = MatX::Constant(basis.size(), 4, 0.7);
  ConsistencyContext ctx(volume, basis.points, skel, 200.0);
  const auto c = loss_motion(Y, Y, D, B, ctx, LossWeights{});
  CHECK(c.global == 0.0);
  CHECK(c.local == 0.0);
  CHECK(c.vertex < 1e-12);
  CHECK(c.basis < 1e-12);
  CHECK(c.total < 1e-12);
}

TEST_CASE("horizontal offset over a floor only moves the global and basis terms") {
  const auto skel = body::default_skeleton(20);
  const auto volume = floor_volume();
  const auto basis = distance::fibonacci_basis(30, 1.2);
  std::mt19937_64 rng(8);
  const MatX Y = walking_poses(skel, 5, rng);
  const MatX D = marker_distances(skel, volume, Y);
  const MatX B = MatX::Zero(basis.size(), 5);
  ConsistencyContext ctx(volume, basis.points, skel, 300.0);
  MatX Y_hat = Y;
  Y_hat.row(0).array() += 0.01;
  const auto c = loss_motion(Y_hat, Y, D, B, ctx, LossWeights{});
  CHECK(c.global == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(c.local == 0.0);
  CHECK(c.vertex < 1e-9);
  CHECK(c.basis > 1e-4);
  CHECK(c.total == doctest::Approx(combine(c, LossWeights{})).epsilon(1e-12));

  SUBCASE("zero weights skip terms") {
    const auto s = loss_motion(Y_hat, Y, D, B, ctx, LossWeights{1.0, 0.5, 0.0, 0.0});
    CHECK(s.vertex == 0.0);
    CHECK(s.basis == 0.0);
    CHECK(s.total == doctest::Approx(0.01).epsilon(1e-9));
  }
}

TEST_CASE("loss_motion gradient matches finite differences on toy dimensions") {
  const auto skel = body::default_skeleton(4);
  const auto volume = toy_scene(8);
  const auto basis = distance::fibonacci_basis(6, 1.0);
  std::mt19937_64 rng(11);
  const int U = 5;
  const MatX Y = walking_poses(skel, U, rng);
  const MatX D = marker_distances(skel, volume, Y);
  const MatX B = random_matrix(basis.size(), U, rng).array().abs() + 0.3;
  ConsistencyContext ctx(volume, basis.points, skel, 60.0, 0.05);
  const MatX calibration = basis_calibration(Y, B, ctx);
  std::vector<MatX> inputs;
  for (int u = 0; u < U; ++u) inputs.push_back(Y.col(u) + random_matrix(skel.pose_dim(), 1, rng, 0.03));
  const double err = check_inputs(
      [&](nn::Graph& g, const std::vector<nn::Var>& poses) {
        return loss_motion(g, poses, Y, D, B, ctx, LossWeights{}, &calibration).total;
      },
      inputs);
  CHECK(err < 1e-4);
}

TEST_CASE("path and pose errors") {
  const auto skel = body::default_skeleton(8);
  std::mt19937_64 rng(2);
  const MatX Y = walking_poses(skel, 30, rng);
  MatX Y_hat = Y;
  Y_hat.row(1).array() += 0.010;
  const auto e = path_pose_error(skel, Y_hat, Y);
  REQUIRE(e.path.size() == 30);
  for (int u = 0; u < 30; ++u) {
    CHECK(e.path[u] == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(e.pose[u] < 1e-9);
  }
  CHECK_THROWS_AS(path_pose_error(skel, Y_hat.leftCols(29), Y), Error);

  SUBCASE("summary matches a loop oracle") {
    std::vector<FrameErrors> all;
    std::uniform_real_distribution<double> u01(0.0, 100.0);
    for (int s = 0; s < 3; ++s) {
      FrameErrors fe{VecX(30), VecX(30)};
      for (int u = 0; u < 30; ++u) {
        fe.path[u] = u01(rng);
        fe.pose[u] = u01(rng);
      }
      all.push_back(fe);
    }
    const Metrics m = summarize(all, 30.0);
    REQUIRE(m.horizons.size() == 2);
    double p15 = 0.0, p30 = 0.0, mean = 0.0;
    for (const auto& fe : all) {
      p15 += fe.path[14] / 3.0;
      p30 += fe.path[29] / 3.0;
      for (int u = 0; u < 30; ++u) mean += fe.path[u] / 90.0;
    }
    CHECK(m.path[0] == doctest::Approx(p15).epsilon(1e-12));
    CHECK(m.path[1] == doctest::Approx(p30).epsilon(1e-12));
    CHECK(m.path_mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(m.sequences == 3);

    std::ostringstream csv;
    write_metrics_csv({{"ours", m}}, csv);
    CHECK(csv.str().rfind("variant,metric,horizon,value_mm\n", 0) == 0);
    CHECK(csv.str().find("ours,path,mean,") != std::string::npos);
  }
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(learning_rate(c, 1) == 5e-4);
  CHECK(learning_rate(c, 29) == 5e-4);
  CHECK(learning_rate(c, 30) == 2.5e-4);
  CHECK(learning_rate(c, 40) == 2.5e-4);
}

TEST_CASE("training configuration JSON") {
  TrainConfig c;
  c.seed = 42;
  c.weights.basis = 0.25;
  c.motion_only = true;
  c.model.gcn_hidden = 32;
  const TrainConfig back = train_config_from_json(train_config_to_json(c));
  CHECK(back.seed == 42);
  CHECK(back.weights.basis == 0.25);
  CHECK(back.motion_only);
  CHECK(back.model.gcn_hidden == 32);
  CHECK(train_config_to_json(back) == train_config_to_json(c));
  CHECK(config_digest(back) == config_digest(c));
  c.seed = 43;
  CHECK(config_digest(back) != config_digest(c));

  const TrainConfig partial = train_config_from_json(R"({"epochs_predictor": 3})");
  CHECK(partial.epochs_predictor == 3);
  CHECK(partial.epochs_forecaster == 40);
  CHECK_THROWS_AS(train_config_from_json(R"({"epochs": 3})"), Error);
  CHECK_THROWS_AS(train_config_from_json(R"({"weights": [1, 2]})"), Error);
  CHECK_THROWS_AS(train_config_from_json("not json"), Error);
}

TEST_CASE("synthetic dataset") {
  const SyntheticConfig cfg = tiny_synthetic();
  const SyntheticDataset a = generate_synthetic(cfg, 0, 1);
  CHECK(a.train.size() == 4);
  CHECK(a.test_seen.size() == 2);
  CHECK(a.test_unseen.size() == 1);
  CHECK(a.layouts.size() == 3);
  CHECK(a.basis.size() == 10);

  for (Split s : {Split::Train, Split::TestSeen, Split::TestUnseen}) {
    for (const Sample& sample : a.split(s)) {
      CHECK(sample.motion.length() == cfg.length());
      CHECK(sample.distances.D.rows() == cfg.markers);
      CHECK(sample.distances.B.rows() == cfg.basis_points);
      CHECK(sample.distances.B.cols() == cfg.length());
      CHECK(sample.volume.spec().resolution == cfg.grid);
      if (s == Split::TestUnseen) CHECK(sample.layout >= cfg.seen_layouts);
      else CHECK(sample.layout < cfg.seen_layouts);
      // Root at the last observed frame is the local origin.
      CHECK(sample.motion.matrix().col(cfg.T - 1).head<2>().norm() < 1e-6);
      // Markers stay clear of the scene up to the generator's tolerance.
      CHECK(sample.distances.D.minCoeff() >= -0.01 - 1e-6);
    }
  }

  SUBCASE("deterministic across job counts") {
    const SyntheticDataset b = generate_synthetic(cfg, 0, 3);
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      CHECK(a.train[i].motion.matrix() == b.train[i].motion.matrix());
      CHECK(a.train[i].distances.D == b.train[i].distances.D);
      CHECK(a.train[i].distances.B == b.train[i].distances.B);
      CHECK(a.train[i].volume.values() == b.train[i].volume.values());
    }
    const SyntheticDataset c = generate_synthetic(cfg, 1, 1);
    CHECK(a.train[0].motion.matrix() != c.train[0].motion.matrix());
  }

  SUBCASE("disk round trip is exact") {
    const auto dir = std::filesystem::temp_directory_path() / "mdkit_test_dataset";
    std::filesystem::remove_all(dir);
    write_dataset(a, dir);
    const SyntheticDataset b = read_dataset(dir);
    CHECK(b.seed == a.seed);
    CHECK(b.basis.points == a.basis.points);
    REQUIRE(b.test_seen.size() == a.test_seen.size());
    for (std::size_t i = 0; i < a.test_seen.size(); ++i) {
      CHECK(a.test_seen[i].motion.matrix() == b.test_seen[i].motion.matrix());
      CHECK(a.test_seen[i].distances.D == b.test_seen[i].distances.D);
      CHECK(a.test_seen[i].distances.B == b.test_seen[i].distances.B);
      CHECK(a.test_seen[i].volume.values() == b.test_seen[i].volume.values());
      CHECK(a.test_seen[i].kind == b.test_seen[i].kind);
    }
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("stage-wise training is deterministic and checkpoints round-trip") {
  const SyntheticDataset ds = generate_synthetic(tiny_synthetic(), 0, 1);
  const TrainConfig cfg = tiny_training();
  std::vector<std::string> stages;
  const TrainResult a = train_stagewise(ds, cfg, 1, [&](const EpochRecord& r) { stages.push_back(r.stage); });
  CHECK(stages == std::vector<std::string>{"predictor", "forecaster", "finetune"});
  REQUIRE(a.log.size() == 3);
  CHECK(a.log[0].motion.total == 0.0);
  CHECK(a.log[1].dist == 0.0);
  CHECK(a.log[2].epoch == 2);
  for (const auto& r : a.log) CHECK(std::isfinite(r.loss));

  const TrainResult b = train_stagewise(ds, cfg, 2);
  require_same_store(a.model.store, b.model.store);

  const auto dir = std::filesystem::temp_directory_path() / "mdkit_test_run";
  std::filesystem::remove_all(dir);
  save_training(a, dir);
  const LoadedModel loaded = load_training(dir);
  require_same_store(a.model.store, loaded.model.store);
  CHECK(train_config_to_json(loaded.config) == train_config_to_json(a.config));
  std::filesystem::remove_all(dir);

  const auto rows = evaluate(a.model, a.config, ds, Split::TestSeen);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].first == "ours");
  CHECK(rows[1].first == "ours-gt-distances");
  CHECK(rows[2].first == "freeze");
  for (const auto& [name, m] : rows) CHECK(std::isfinite(m.path_mean));

  SUBCASE("motion-only ablation ignores scene and distances") {
    TrainConfig mo = cfg;
    mo.motion_only = true;
    const TrainResult r = train_stagewise(ds, mo, 1);
    CHECK(r.config.weights.vertex == 0.0);
    CHECK(r.config.weights.basis == 0.0);
    const auto mrows = evaluate(r.model, r.config, ds, Split::TestSeen);
    REQUIRE(mrows.size() == 2);
    CHECK(mrows[0].first == "motion-only");
    CHECK(mrows[1].first == "freeze");
  }
}
