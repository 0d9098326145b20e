#include "doctest.h"

#include "mdkit/distance/mutual_distance.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path& workdir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "mdkit_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Outcome run_cli(const std::string& args) {
  const fs::path out = workdir() / "stdout.txt", err = workdir() / "stderr.txt";
  const std::string cmd = "cd '" + workdir().string() + "' && '" MDKIT_BINARY "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

constexpr const char* kSynth =
    R"({"train": 4, "test_seen": 2, "test_unseen": 1, "seen_layouts": 2, "unseen_layouts": 1, "T": 5, "U": 6,)"
    R"( "markers": 8, "basis_points": 10, "grid": 16, "surface_density": 300})";
constexpr const char* kTrain =
    R"({"epochs_predictor": 1, "epochs_forecaster": 1, "epochs_finetune": 1, "batch_size": 2,)"
    R"( "loss_surface_density": 100, "model": {"gcn_hidden": 6, "gcn_blocks": 1, "scene_channels": [2, 3, 4],)"
    R"( "scene_feature": 5, "motion_hidden": 6, "forecaster_hidden": 7}})";

} // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  const Outcome missing = run_cli("voxelize missing.obj -o out.mdsf");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("missing.obj") != std::string::npos);
  CHECK(run_cli("basis --count 10").code == 2);
  CHECK(run_cli("basis --count -3 -o b.csv").code == 2);
  CHECK(run_cli("basis --count 10 -o no_such_dir/b.csv").code == 2);
  CHECK(run_cli("dct").code == 2);
}

TEST_CASE("every subcommand documents its flags") {
  for (const char* sub : {"voxelize", "basis", "distances", "synth", "train", "eval", "selftest", "dct"}) {
    const Outcome o = run_cli(std::string(sub) + " --help");
    CHECK(o.code == 0);
    CHECK(o.out.find("--help") != std::string::npos);
  }
  CHECK(run_cli("train --help").out.find("--motion-only") != std::string::npos);
  CHECK(run_cli("voxelize --help").out.find("--crop-radius") != std::string::npos);
}

TEST_CASE("basis writes points on the sphere") {
  const Outcome o = run_cli("basis --count 150 --radius 2.0 -o b.csv");
  REQUIRE(o.code == 0);
  const auto basis = mdkit::distance::read_basis_csv(workdir() / "b.csv");
  CHECK(basis.size() == 150);
  for (int i = 0; i < basis.size(); ++i) CHECK(std::abs(basis.points.row(i).norm() - 2.0) < 1e-12);
  REQUIRE(run_cli("basis --count 150 --radius 2.0 -o b2.csv").code == 0);
  CHECK(slurp(workdir() / "b.csv") == slurp(workdir() / "b2.csv"));
}

TEST_CASE("self-tests pass") {
  const Outcome all = run_cli("selftest");
  CHECK(all.code == 0);
  CHECK(all.out.find("PASS dct") != std::string::npos);
  CHECK(all.out.find("PASS bvh") != std::string::npos);
  CHECK(all.out.find("PASS gradients") != std::string::npos);
  const Outcome dct = run_cli("dct --self-test");
  CHECK(dct.code == 0);
  CHECK(dct.out.find("PASS dct") != std::string::npos);
}

TEST_CASE("pipeline from synth to eval") {
  write_file(workdir() / "synth.json", kSynth);
  write_file(workdir() / "train.json", kTrain);
  REQUIRE(run_cli("synth --seed 3 --out data --config synth.json --jobs 2").code == 0);
  REQUIRE(fs::exists(workdir() / "data" / "dataset.json"));

  SUBCASE("domain errors exit with 1 and name the error") {
    write_file(workdir() / "broken.mdsf", "MDSFgarbage");
    const Outcome o = run_cli("distances broken.mdsf data/samples/train_0000.mdms -o d.mdds");
    CHECK(o.code == 1);
    CHECK(o.err.find("FormatError") != std::string::npos);
    write_file(workdir() / "bad.json", R"({"epochs": 1})");
    const Outcome cfg = run_cli("train --data data --config bad.json --out bad_ckpt");
    CHECK(cfg.code == 1);
    CHECK(cfg.err.find("FormatError") != std::string::npos);
  }

  SUBCASE("voxelize and distances") {
    CHECK(run_cli("voxelize data/layouts/layout_00.obj --res 12 --crop-center 0,0,1 --crop-radius 2 -o room.mdsf").code == 0);
    CHECK(run_cli("voxelize data/layouts/layout_00.obj --res 12 --crop-center 0,0 -o room.mdsf").code == 2);
    CHECK(run_cli("distances data/samples/train_0000.mdsf data/samples/train_0000.mdms --skeleton data/skeleton.json "
                "--basis data/basis.csv --surface-density 300 -o d.mdds")
              .code == 0);
    const auto mine = mdkit::distance::read_mdds(workdir() / "d.mdds");
    const auto stored = mdkit::distance::read_mdds(workdir() / "data" / "samples" / "train_0000.mdds");
    CHECK(mine.D.rows() == stored.D.rows());
    CHECK(mine.B.rows() == stored.B.rows());
    CHECK((mine.D - stored.D).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((mine.B - stored.B).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("train is reproducible and eval reads its checkpoint") {
    REQUIRE(run_cli("train --data data --config train.json --out run_a").code == 0);
    REQUIRE(run_cli("train --data data --config train.json --out run_b --jobs 2").code == 0);
    for (const char* f : {"config.json", "predictor.mdck", "forecaster.mdck", "model.mdck", "log.jsonl", "metrics.csv"}) {
      CAPTURE(f);
      CHECK(slurp(workdir() / "run_a" / f) == slurp(workdir() / "run_b" / f));
    }
    REQUIRE(run_cli("train --data data --config train.json --seed 1 --out run_c").code == 0);
    CHECK(slurp(workdir() / "run_a" / "model.mdck") != slurp(workdir() / "run_c" / "model.mdck"));

    const Outcome ev = run_cli("eval --ckpt run_a --data data --split test-seen -o eval.csv");
    CHECK(ev.code == 0);
    CHECK(slurp(workdir() / "eval.csv") == slurp(workdir() / "run_a" / "metrics.csv"));
    CHECK(run_cli("eval --ckpt run_a --data data --split validation").code == 2);
  }
}
