// mdkit command-line front end.
//
// Exit codes: 0 success, 1 domain error (reported by error name), 2 usage
// error including missing input files.

#include "CLI11.hpp"

#include "mdkit/body/pose.hpp"
#include "mdkit/body/skeleton.hpp"
#include "mdkit/distance/mutual_distance.hpp"
#include "mdkit/error.hpp"
#include "mdkit/geometry/mesh.hpp"
#include "mdkit/geometry/sdf.hpp"
#include "mdkit/selftest.hpp"
#include "mdkit/train/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace mdkit;

namespace {

constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Vec3 parse_vec3(const std::string& text) {
  std::istringstream in(text);
  Vec3 v;
  char comma = 0;
  if (!(in >> v.x() >> comma) || comma != ',' || !(in >> v.y() >> comma) || comma != ',' || !(in >> v.z()) ||
      !(in >> std::ws).eof()) {
    throw UsageError("expected x,y,z but got '" + text + "'");
  }
  return v;
}

// Output files must land in an existing directory.
void check_output_file(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) throw UsageError("output directory " + parent.string() + " does not exist");
}

struct VoxelizeArgs {
  std::string mesh, out, center;
  int res = 64;
  std::optional<double> radius;
  int jobs = 1;
};

int run_voxelize(const VoxelizeArgs& a) {
  check_output_file(a.out);
  const geometry::TriangleMesh mesh = geometry::read_obj(a.mesh);
  const auto box = geometry::bounds(mesh);
  const Vec3 center = a.center.empty() ? Vec3(box.center()) : parse_vec3(a.center);
  const double radius = a.radius ? *a.radius : 0.5 * box.sizes().maxCoeff();
  geometry::VoxelizeOptions options;
  options.jobs = a.jobs;
  const auto volume = geometry::voxelize_sdf(mesh, geometry::GridSpec::around(center, radius, a.res), options);
  geometry::write_mdsf(volume, a.out);
  std::cout << "wrote " << a.out << " (" << a.res << "^3 voxels, " << mesh.size() << " triangles)\n";
  return 0;
}

struct BasisArgs {
  int count = 150;
  double radius = 2.0;
  std::string out;
};

int run_basis(const BasisArgs& a) {
  check_output_file(a.out);
  distance::write_basis_csv(distance::fibonacci_basis(a.count, a.radius), a.out);
  std::cout << "wrote " << a.out << " (" << a.count << " points at radius " << a.radius << ")\n";
  return 0;
}

struct DistancesArgs {
  std::string scene, motion, skeleton, basis, out;
  int count = 150;
  double radius = 2.0;
  int markers = 67;
  double density = 2000.0;
  int jobs = 1;
};

int run_distances(const DistancesArgs& a) {
  check_output_file(a.out);
  const auto volume = geometry::read_mdsf(a.scene);
  const auto motion = body::read_mdms(a.motion);
  const body::Skeleton skel = a.skeleton.empty() ? body::default_skeleton(a.markers) : body::read_skeleton_json(a.skeleton);
  const distance::BasisSet basis = a.basis.empty() ? distance::fibonacci_basis(a.count, a.radius) : distance::read_basis_csv(a.basis);
  distance::DistanceOptions options;
  options.surface_density = a.density;
  options.jobs = a.jobs;
  const auto seq = distance::sequence_distances(volume, basis, skel, motion, options);
  if (fs::path(a.out).extension() == ".csv") {
    distance::write_distances_csv(seq, a.out);
  } else {
    distance::write_mdds(seq, a.out);
  }
  std::cout << "wrote " << a.out << " (" << seq.length() << " frames, K=" << seq.D.rows() << ", P=" << seq.B.rows()
            << ")\n";
  return 0;
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::string out, config;
  std::optional<int> train, test_seen, test_unseen, grid;
  int jobs = 1;
};

int run_synth(const SynthArgs& a) {
  train::SyntheticConfig cfg;
  if (!a.config.empty()) cfg = train::synthetic_config_from_json(read_text(a.config));
  if (a.train) cfg.train = *a.train;
  if (a.test_seen) cfg.test_seen = *a.test_seen;
  if (a.test_unseen) cfg.test_unseen = *a.test_unseen;
  if (a.grid) cfg.grid = *a.grid;
  const auto ds = train::generate_synthetic(cfg, a.seed, a.jobs);
  train::write_dataset(ds, a.out);
  std::cout << "wrote " << a.out << " (" << ds.train.size() << " train, " << ds.test_seen.size() << " test-seen, "
            << ds.test_unseen.size() << " test-unseen)\n";
  return 0;
}

struct TrainArgs {
  std::string data, config, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs_predictor, epochs_forecaster, epochs_finetune, train_limit;
  bool motion_only = false;
  int jobs = 1;
};

void write_metrics(const std::vector<std::pair<std::string, train::Metrics>>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  train::write_metrics_csv(rows, out);
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

int run_train(const TrainArgs& a) {
  train::TrainConfig cfg;
  if (!a.config.empty()) cfg = train::train_config_from_json(read_text(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (a.epochs_predictor) cfg.epochs_predictor = *a.epochs_predictor;
  if (a.epochs_forecaster) cfg.epochs_forecaster = *a.epochs_forecaster;
  if (a.epochs_finetune) cfg.epochs_finetune = *a.epochs_finetune;
  if (a.train_limit) cfg.train_limit = *a.train_limit;
  if (a.motion_only) cfg.motion_only = true;
  const auto ds = train::read_dataset(a.data);
  const auto result = train::train_stagewise(ds, cfg, a.jobs, [](const train::EpochRecord& r) {
    std::cout << train::epoch_record_json(r) << std::endl;
  });
  train::save_training(result, a.out);
  const auto rows = train::evaluate(result.model, result.config, ds, train::Split::TestSeen, a.jobs);
  write_metrics(rows, fs::path(a.out) / "metrics.csv");
  std::cout << "test-seen:\n";
  train::print_metrics_table(rows, std::cout);
  return 0;
}

struct EvalArgs {
  std::string ckpt, data, split = "test-seen", out;
  int jobs = 1;
};

int run_eval(const EvalArgs& a) {
  if (!a.out.empty()) check_output_file(a.out);
  const auto loaded = train::load_training(a.ckpt);
  const auto ds = train::read_dataset(a.data);
  const auto rows = train::evaluate(loaded.model, loaded.config, ds, train::split_from_name(a.split), a.jobs);
  if (!a.out.empty()) write_metrics(rows, a.out);
  std::cout << a.split << ":\n";
  train::print_metrics_table(rows, std::cout);
  return 0;
}

int report(const std::vector<selftest::SuiteResult>& results) {
  selftest::print(results, std::cout);
  for (const auto& r : results) {
    if (!r.passed) return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"mdkit: scene-aware motion forecasting through mutual distances"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mdkit 1.0");
  int code = 0;

  VoxelizeArgs vox;
  auto* c_vox = app.add_subcommand("voxelize", "Voxelize a closed OBJ mesh into a signed distance volume (MDSF)");
  c_vox->add_option("mesh", vox.mesh, "Input mesh (.obj)")->required()->check(CLI::ExistingFile);
  c_vox->add_option("--res", vox.res, "Voxels per axis")->capture_default_str()->check(CLI::Range(2, 1024));
  c_vox->add_option("--crop-center", vox.center, "Grid centre x,y,z (default: bounding-box centre of the mesh)");
  c_vox->add_option("--crop-radius", vox.radius, "Half edge of the cubic grid in metres (default: half the longest bounding-box side)")
      ->check(CLI::PositiveNumber);
  c_vox->add_option("-o,--output", vox.out, "Output volume (.mdsf)")->required();
  c_vox->add_option("--jobs", vox.jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));
  c_vox->callback([&] { code = run_voxelize(vox); });

  BasisArgs bas;
  auto* c_bas = app.add_subcommand("basis", "Write a spherical Fibonacci basis point set (CSV)");
  c_bas->add_option("--count", bas.count, "Number of basis points")->capture_default_str()->check(CLI::PositiveNumber);
  c_bas->add_option("--radius", bas.radius, "Sphere radius in metres")->capture_default_str()->check(CLI::PositiveNumber);
  c_bas->add_option("-o,--output", bas.out, "Output CSV")->required();
  c_bas->callback([&] { code = run_basis(bas); });

  DistancesArgs dis;
  auto* c_dis = app.add_subcommand("distances", "Compute per-marker and per-basis distances for a motion in a scene");
  c_dis->add_option("scene", dis.scene, "Scene volume (.mdsf)")->required()->check(CLI::ExistingFile);
  c_dis->add_option("motion", dis.motion, "Motion sequence (.mdms)")->required()->check(CLI::ExistingFile);
  c_dis->add_option("--skeleton", dis.skeleton, "Skeleton JSON (default: built-in skeleton with --markers markers)")
      ->check(CLI::ExistingFile);
  c_dis->add_option("--markers", dis.markers, "Marker count of the built-in skeleton")->capture_default_str()->check(CLI::PositiveNumber);
  c_dis->add_option("--basis", dis.basis, "Basis CSV (default: Fibonacci basis from --count and --radius)")
      ->check(CLI::ExistingFile);
  c_dis->add_option("--count", dis.count, "Basis point count when --basis is absent")->capture_default_str()->check(CLI::PositiveNumber);
  c_dis->add_option("--radius", dis.radius, "Basis radius when --basis is absent")->capture_default_str()->check(CLI::PositiveNumber);
  c_dis->add_option("--surface-density", dis.density, "Body surface samples per square metre")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_dis->add_option("-o,--output", dis.out, "Output (.mdds, or .csv for the text form)")->required();
  c_dis->add_option("--jobs", dis.jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));
  c_dis->callback([&] { code = run_distances(dis); });

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate the synthetic room dataset");
  c_syn->add_option("--seed", syn.seed, "Random seed")->capture_default_str();
  c_syn->add_option("--out", syn.out, "Output directory")->required();
  c_syn->add_option("--config", syn.config, "Dataset config JSON; flags below override it")->check(CLI::ExistingFile);
  c_syn->add_option("--train", syn.train, "Training samples (default 200)")->check(CLI::NonNegativeNumber);
  c_syn->add_option("--test-seen", syn.test_seen, "Test samples in training rooms (default 40)")->check(CLI::NonNegativeNumber);
  c_syn->add_option("--test-unseen", syn.test_unseen, "Test samples in held-out rooms (default 20)")->check(CLI::NonNegativeNumber);
  c_syn->add_option("--grid", syn.grid, "Scene crop voxels per axis (default 64)")->check(CLI::Range(2, 1024));
  c_syn->add_option("--jobs", syn.jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));
  c_syn->callback([&] { code = run_synth(syn); });

  TrainArgs trn;
  auto* c_trn = app.add_subcommand("train", "Train the distance predictor and motion forecaster stage by stage");
  c_trn->add_option("--data", trn.data, "Dataset directory written by synth")->required()->check(CLI::ExistingDirectory);
  c_trn->add_option("--config", trn.config, "Training config JSON; flags below override it")->check(CLI::ExistingFile);
  c_trn->add_option("--out", trn.out, "Checkpoint directory")->required();
  c_trn->add_option("--seed", trn.seed, "Random seed (default 0)");
  c_trn->add_option("--epochs-predictor", trn.epochs_predictor, "Stage 1 epochs (default 40)")->check(CLI::NonNegativeNumber);
  c_trn->add_option("--epochs-forecaster", trn.epochs_forecaster, "Stage 2 epochs (default 40)")->check(CLI::NonNegativeNumber);
  c_trn->add_option("--epochs-finetune", trn.epochs_finetune, "Stage 3 epochs (default 1)")->check(CLI::NonNegativeNumber);
  c_trn->add_option("--train-limit", trn.train_limit, "Use only the first N training samples (default 0: all)")
      ->check(CLI::NonNegativeNumber);
  c_trn->add_flag("--motion-only", trn.motion_only, "Train the motion-only ablation (no distances, no scene)");
  c_trn->add_option("--jobs", trn.jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));
  c_trn->callback([&] { code = run_train(trn); });

  EvalArgs evl;
  auto* c_evl = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  c_evl->add_option("--ckpt", evl.ckpt, "Checkpoint directory written by train")->required()->check(CLI::ExistingDirectory);
  c_evl->add_option("--data", evl.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  c_evl->add_option("--split", evl.split, "Split to evaluate")->capture_default_str()
      ->check(CLI::IsMember({"train", "test-seen", "test-unseen"}));
  c_evl->add_option("-o,--output", evl.out, "Metrics CSV (default: table only)");
  c_evl->add_option("--jobs", evl.jobs, "Worker threads")->capture_default_str()->check(CLI::Range(1, 1024));
  c_evl->callback([&] { code = run_eval(evl); });

  auto* c_self = app.add_subcommand("selftest", "Run the DCT, BVH oracle and gradient self-checks");
  c_self->callback([&] { code = report(selftest::run_all()); });

  bool dct_self_test = false;
  auto* c_dct = app.add_subcommand("dct", "Spectral transform utilities");
  c_dct->add_flag("--self-test", dct_self_test, "Check orthonormality and round trip for lengths 1..90")->required();
  c_dct->callback([&] { code = report({selftest::dct_suite()}); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }
  return code;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
