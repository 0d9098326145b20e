#include "mdkit/train/trainer.hpp"

#include "mdkit/error.hpp"
#include "mdkit/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>

namespace mdkit::train {

using nlohmann::json;
using nn::Graph;
using nn::Var;

// ---- configuration --------------------------------------------------------

std::string train_config_to_json(const TrainConfig& c) {
  const auto& m = c.model;
  json j = {{"epochs_predictor", c.epochs_predictor},
            {"epochs_forecaster", c.epochs_forecaster},
            {"epochs_finetune", c.epochs_finetune},
            {"learning_rate", c.learning_rate},
            {"decay_epoch", c.decay_epoch},
            {"decay_factor", c.decay_factor},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"weights", {c.weights.global, c.weights.local, c.weights.vertex, c.weights.basis}},
            {"tau", c.tau},
            {"loss_surface_density", c.loss_surface_density},
            {"teacher_forcing", c.teacher_forcing},
            {"motion_only", c.motion_only},
            {"train_limit", c.train_limit},
            {"model",
             {{"K", m.K},
              {"P", m.P},
              {"T", m.T},
              {"U", m.U},
              {"M", m.M},
              {"grid", m.grid},
              {"gcn_hidden", m.gcn_hidden},
              {"gcn_blocks", m.gcn_blocks},
              {"scene_channels", m.scene_channels},
              {"scene_feature", m.scene_feature},
              {"motion_hidden", m.motion_hidden},
              {"forecaster_hidden", m.forecaster_hidden},
              {"residual_pose", m.residual_pose}}}};
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) fail(ErrorCode::FormatError, "training config must be a JSON object");
    static const std::vector<std::string> known = {
        "epochs_predictor", "epochs_forecaster", "epochs_finetune", "learning_rate", "decay_epoch",
        "decay_factor",     "batch_size",        "seed",            "weights",       "tau",
        "loss_surface_density", "teacher_forcing", "motion_only",   "train_limit",   "model"};
    for (const auto& [key, value] : j.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        fail(ErrorCode::FormatError, "unknown training config key " + key);
      }
    }
    auto get = [](const json& obj, const char* key, auto& field) {
      if (obj.contains(key)) field = obj.at(key).get<std::decay_t<decltype(field)>>();
    };
    get(j, "epochs_predictor", c.epochs_predictor);
    get(j, "epochs_forecaster", c.epochs_forecaster);
    get(j, "epochs_finetune", c.epochs_finetune);
    get(j, "learning_rate", c.learning_rate);
    get(j, "decay_epoch", c.decay_epoch);
    get(j, "decay_factor", c.decay_factor);
    get(j, "batch_size", c.batch_size);
    get(j, "seed", c.seed);
    if (j.contains("weights")) {
      const auto w = j.at("weights").get<std::vector<double>>();
      if (w.size() != 4) fail(ErrorCode::FormatError, "weights must hold four numbers");
      c.weights = {w[0], w[1], w[2], w[3]};
    }
    get(j, "tau", c.tau);
    get(j, "loss_surface_density", c.loss_surface_density);
    get(j, "teacher_forcing", c.teacher_forcing);
    get(j, "motion_only", c.motion_only);
    get(j, "train_limit", c.train_limit);
    if (j.contains("model")) {
      const json& m = j.at("model");
      get(m, "K", c.model.K);
      get(m, "P", c.model.P);
      get(m, "T", c.model.T);
      get(m, "U", c.model.U);
      get(m, "M", c.model.M);
      get(m, "grid", c.model.grid);
      get(m, "gcn_hidden", c.model.gcn_hidden);
      get(m, "gcn_blocks", c.model.gcn_blocks);
      get(m, "scene_channels", c.model.scene_channels);
      get(m, "scene_feature", c.model.scene_feature);
      get(m, "motion_hidden", c.model.motion_hidden);
      get(m, "forecaster_hidden", c.model.forecaster_hidden);
      get(m, "residual_pose", c.model.residual_pose);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("training config: ") + e.what());
  }
  const auto& w = c.weights;
  if (w.global < 0 || w.local < 0 || w.vertex < 0 || w.basis < 0) fail(ErrorCode::FormatError, "loss weights must be nonnegative");
  if (c.batch_size < 1 || c.epochs_predictor < 0 || c.epochs_forecaster < 0 || c.epochs_finetune < 0) {
    fail(ErrorCode::FormatError, "epochs must be nonnegative and the batch size positive");
  }
  return c;
}

TrainConfig resolve_config(TrainConfig c, const SyntheticDataset& ds) {
  c.model.K = ds.skeleton.marker_count();
  c.model.P = ds.basis.size();
  c.model.T = ds.config.T;
  c.model.U = ds.config.U;
  c.model.M = ds.skeleton.pose_dim();
  c.model.grid = ds.config.grid;
  if (c.motion_only) c.weights.vertex = c.weights.basis = 0.0;
  return c;
}

double learning_rate(const TrainConfig& c, int epoch) {
  return epoch >= c.decay_epoch ? c.learning_rate * c.decay_factor : c.learning_rate;
}

std::uint64_t config_digest(const TrainConfig& c) { return nn::fnv1a(train_config_to_json(c)); }

std::string epoch_record_json(const EpochRecord& r) {
  json j = {{"stage", r.stage},
            {"epoch", r.epoch},
            {"lr", r.lr},
            {"loss", r.loss},
            {"dist", r.dist},
            {"global", r.motion.global},
            {"local", r.motion.local},
            {"vertex", r.motion.vertex},
            {"basis", r.motion.basis},
            {"motion", r.motion.total}};
  return j.dump();
}

// ---- per-sample computations ----------------------------------------------

namespace {

struct SampleData {
  const Sample* sample = nullptr;
  MatX X, Y, D, B, D_hist, B_hist, D_future, B_future, calibration;
  std::unique_ptr<ConsistencyContext> ctx;
};

SampleData prepare(const Sample& s, const SyntheticDataset& ds, const TrainConfig& c, bool need_consistency) {
  const int T = c.model.T, U = c.model.U;
  if (s.motion.length() != T + U || s.distances.length() != T + U) {
    fail(ErrorCode::ShapeMismatch, "sample length does not match T + U");
  }
  SampleData d;
  d.sample = &s;
  const MatX motion = s.motion.matrix();
  d.X = motion.leftCols(T);
  d.Y = motion.rightCols(U);
  d.D = s.distances.D;
  d.B = s.distances.B;
  d.D_hist = d.D.leftCols(T);
  d.B_hist = d.B.leftCols(T);
  d.D_future = d.D.rightCols(U);
  d.B_future = d.B.rightCols(U);
  if (need_consistency) {
    d.ctx = std::make_unique<ConsistencyContext>(s.volume, ds.basis.points, ds.skeleton, c.loss_surface_density,
                                                 c.tau);
    if (c.weights.basis != 0.0) d.calibration = basis_calibration(d.Y, d.B_future, *d.ctx);
  }
  return d;
}

struct StepResult {
  Var loss;
  double dist = 0.0;
  MotionComponents motion;
};

struct ForecastInputs {
  Var D_future, B_future, scene;
};

// Forecaster inputs: zeros for the motion-only ablation, otherwise the
// forecaster's own scene feature and the requested distance columns.
ForecastInputs forecaster_inputs(Graph& g, const nn::Model& model, const TrainConfig& c, const SampleData& d,
                                 const nn::DistancePrediction* predicted) {
  const auto& m = c.model;
  if (c.motion_only) {
    return {g.constant(MatX::Zero(m.K, m.U)), g.constant(MatX::Zero(m.P, m.U)),
            g.constant(MatX::Zero(m.scene_feature, 1))};
  }
  ForecastInputs in;
  in.scene = nn::encode_scene(g, model.store, model.forecaster.scene, d.sample->volume);
  if (predicted) {
    in.D_future = nn::slice_cols(predicted->D, m.T, m.U);
    in.B_future = nn::slice_cols(predicted->B, m.T, m.U);
  } else {
    in.D_future = g.constant(d.D_future);
    in.B_future = g.constant(d.B_future);
  }
  return in;
}

std::vector<Var> rollout(Graph& g, const nn::Model& model, const TrainConfig& c, const SampleData& d,
                         const nn::DistancePrediction* predicted) {
  const ForecastInputs in = forecaster_inputs(g, model, c, d, predicted);
  Var motion = nn::encode_motion(g, model.store, model.forecaster.motion, g.constant(d.X));
  Var last = g.constant(d.X.col(c.model.T - 1));
  return nn::forecast_motion(g, model, last, in.D_future, in.B_future, in.scene, motion, c.model.U);
}

StepResult predictor_step(Graph& g, const nn::Model& model, const TrainConfig&, const SampleData& d) {
  const auto pred = nn::predict_distances(g, model, d.D_hist, d.B_hist, d.sample->volume, d.X);
  StepResult r;
  r.loss = loss_dist(pred.D, pred.B, d.D, d.B);
  r.dist = r.loss.scalar();
  return r;
}

StepResult forecaster_step(Graph& g, const nn::Model& model, const TrainConfig& c, const SampleData& d) {
  std::unique_ptr<nn::DistancePrediction> pred;
  if (!c.teacher_forcing && !c.motion_only) {
    pred = std::make_unique<nn::DistancePrediction>(
        nn::predict_distances(g, model, d.D_hist, d.B_hist, d.sample->volume, d.X));
  }
  const auto poses = rollout(g, model, c, d, pred.get());
  const MotionLoss ml = loss_motion(g, poses, d.Y, d.D_future, d.B_future, *d.ctx, c.weights,
                                    d.calibration.size() ? &d.calibration : nullptr);
  StepResult r;
  r.loss = ml.total;
  r.motion = ml.values;
  return r;
}

StepResult finetune_step(Graph& g, const nn::Model& model, const TrainConfig& c, const SampleData& d) {
  if (c.motion_only) return forecaster_step(g, model, c, d);
  const auto pred = nn::predict_distances(g, model, d.D_hist, d.B_hist, d.sample->volume, d.X);
  Var dist = loss_dist(pred.D, pred.B, d.D, d.B);
  const auto poses = rollout(g, model, c, d, &pred);
  const MotionLoss ml = loss_motion(g, poses, d.Y, d.D_future, d.B_future, *d.ctx, c.weights,
                                    d.calibration.size() ? &d.calibration : nullptr);
  StepResult r;
  r.loss = add(dist, ml.total);
  r.dist = dist.scalar();
  r.motion = ml.values;
  return r;
}

using StepFn = StepResult (*)(Graph&, const nn::Model&, const TrainConfig&, const SampleData&);

void run_stage(const std::string& name, int stage_id, int epochs, int epoch_offset, const std::vector<int>& ids,
               StepFn step, nn::Model& model, const TrainConfig& c, const std::vector<SampleData>& data, int jobs,
               std::vector<EpochRecord>& log, const std::function<void(const EpochRecord&)>& on_epoch) {
  if (epochs <= 0 || data.empty()) return;
  nn::Adam adam(model.store);
  const std::size_t batch = static_cast<std::size_t>(c.batch_size);
  std::vector<nn::Gradients> slots(std::min(batch, data.size()), nn::Gradients(model.store));
  nn::Gradients total(model.store);
  struct Values {
    double loss = 0.0, dist = 0.0;
    MotionComponents motion;
  };
  std::vector<Values> results(slots.size());

  for (int e = 1; e <= epochs; ++e) {
    const int epoch = epoch_offset + e;
    const double lr = learning_rate(c, epoch);
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(stream_seed(c.seed, 100 + static_cast<std::uint64_t>(stage_id), static_cast<std::uint64_t>(e)));
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord rec;
    rec.stage = name;
    rec.epoch = epoch;
    rec.lr = lr;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t n = std::min(batch, order.size() - start);
      parallel_for(n, jobs, [&](std::size_t k) {
        const int idx = order[start + k];
        Graph g;
        StepResult r = step(g, model, c, data[static_cast<std::size_t>(idx)]);
        if (!std::isfinite(r.loss.scalar())) {
          std::ostringstream os;
          os << name << " stage, epoch " << epoch << ", training sample " << idx << ": loss " << r.loss.scalar()
             << " (dist " << r.dist << ", global " << r.motion.global << ", local " << r.motion.local << ", vertex "
             << r.motion.vertex << ", basis " << r.motion.basis << ")";
          fail(ErrorCode::NonFiniteLoss, os.str());
        }
        g.backward(r.loss);
        slots[k].zero();
        g.accumulate(slots[k]);
        results[k] = {r.loss.scalar(), r.dist, r.motion};
      });
      total.zero();
      for (std::size_t k = 0; k < n; ++k) {
        total.add(slots[k]);
        rec.loss += results[k].loss;
        rec.dist += results[k].dist;
        rec.motion.global += results[k].motion.global;
        rec.motion.local += results[k].motion.local;
        rec.motion.vertex += results[k].motion.vertex;
        rec.motion.basis += results[k].motion.basis;
        rec.motion.total += results[k].motion.total;
      }
      total.scale(1.0 / static_cast<double>(n));
      adam.step(model.store, total, lr, ids);
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    rec.loss *= inv;
    rec.dist *= inv;
    rec.motion.global *= inv;
    rec.motion.local *= inv;
    rec.motion.vertex *= inv;
    rec.motion.basis *= inv;
    rec.motion.total *= inv;
    log.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
}

} // namespace

// ---- training -------------------------------------------------------------

TrainResult train_stagewise(const SyntheticDataset& dataset, const TrainConfig& config, int jobs,
                            const std::function<void(const EpochRecord&)>& on_epoch) {
  TrainResult result;
  result.config = resolve_config(config, dataset);
  const TrainConfig& c = result.config;
  result.model = nn::build_model(c.model, stream_seed(c.seed, 2, 0));

  const std::size_t limit = c.train_limit > 0 ? std::min<std::size_t>(c.train_limit, dataset.train.size())
                                               : dataset.train.size();
  if (limit == 0) fail(ErrorCode::InvalidCount, "training split is empty");
  const bool consistency = c.epochs_forecaster > 0 || c.epochs_finetune > 0;
  std::vector<SampleData> data(limit);
  parallel_for(limit, jobs, [&](std::size_t i) { data[i] = prepare(dataset.train[i], dataset, c, consistency); });

  nn::Model& model = result.model;
  if (!c.motion_only) {
    run_stage("predictor", 1, c.epochs_predictor, 0, model.predictor_params(), predictor_step, model, c, data, jobs,
              result.log, on_epoch);
  }
  run_stage("forecaster", 2, c.epochs_forecaster, 0, model.forecaster_params(), forecaster_step, model, c, data,
            jobs, result.log, on_epoch);
  std::vector<int> all = c.motion_only ? model.forecaster_params() : model.predictor_params();
  if (!c.motion_only) {
    const auto f = model.forecaster_params();
    all.insert(all.end(), f.begin(), f.end());
  }
  run_stage("finetune", 3, c.epochs_finetune, c.epochs_forecaster, all, finetune_step, model, c, data, jobs,
            result.log, on_epoch);
  return result;
}

void save_training(const TrainResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "config.json");
    out << train_config_to_json(r.config) << "\n";
    if (!out) fail(ErrorCode::IoError, "cannot write config.json");
  }
  const std::uint64_t digest = config_digest(r.config);
  nn::write_checkpoint(dir / "predictor.mdck", r.model.store, digest, r.model.predictor_params());
  nn::write_checkpoint(dir / "forecaster.mdck", r.model.store, digest, r.model.forecaster_params());
  std::vector<int> all(static_cast<std::size_t>(r.model.store.size()));
  std::iota(all.begin(), all.end(), 0);
  nn::write_checkpoint(dir / "model.mdck", r.model.store, digest, all);
  std::ofstream log(dir / "log.jsonl");
  for (const auto& rec : r.log) log << epoch_record_json(rec) << "\n";
  if (!log) fail(ErrorCode::IoError, "cannot write log.jsonl");
}

LoadedModel load_training(const std::filesystem::path& dir) {
  std::ifstream in(dir / "config.json");
  if (!in) fail(ErrorCode::IoError, "cannot open " + (dir / "config.json").string());
  std::stringstream text;
  text << in.rdbuf();
  LoadedModel out{train_config_from_json(text.str()), {}};
  out.model = nn::build_model(out.config.model, stream_seed(out.config.seed, 2, 0));
  nn::read_checkpoint(dir / "model.mdck", out.model.store, config_digest(out.config));
  return out;
}

// ---- inference and evaluation ---------------------------------------------

MatX forecast_sample(const nn::Model& model, const TrainConfig& c, const Sample& sample, DistanceSource source) {
  const int T = c.model.T, U = c.model.U;
  if (sample.motion.length() != T + U) fail(ErrorCode::ShapeMismatch, "sample length does not match T + U");
  SampleData d;
  d.sample = &sample;
  const MatX motion = sample.motion.matrix();
  d.X = motion.leftCols(T);
  d.D_hist = sample.distances.D.leftCols(T);
  d.B_hist = sample.distances.B.leftCols(T);
  d.D_future = sample.distances.D.rightCols(U);
  d.B_future = sample.distances.B.rightCols(U);
  Graph g;
  std::unique_ptr<nn::DistancePrediction> pred;
  if (source == DistanceSource::Predicted && !c.motion_only) {
    pred = std::make_unique<nn::DistancePrediction>(
        nn::predict_distances(g, model, d.D_hist, d.B_hist, sample.volume, d.X));
  }
  const auto poses = rollout(g, model, c, d, pred.get());
  MatX out(c.model.M, U);
  for (int u = 0; u < U; ++u) out.col(u) = poses[static_cast<std::size_t>(u)].value();
  return out;
}

std::vector<std::pair<std::string, Metrics>> evaluate(const nn::Model& model, const TrainConfig& c,
                                                      const SyntheticDataset& ds, Split split, int jobs) {
  const auto& samples = ds.split(split);
  const int T = c.model.T, U = c.model.U;
  const std::size_t n = samples.size();
  std::vector<FrameErrors> predicted(n), truth(n), freeze(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const Sample& s = samples[i];
    const MatX Y = s.motion.matrix().rightCols(U);
    predicted[i] = path_pose_error(ds.skeleton, forecast_sample(model, c, s, DistanceSource::Predicted), Y);
    if (!c.motion_only) truth[i] = path_pose_error(ds.skeleton, forecast_sample(model, c, s, DistanceSource::GroundTruth), Y);
    const MatX still = s.motion.frames[static_cast<std::size_t>(T - 1)].vector().replicate(1, U);
    freeze[i] = path_pose_error(ds.skeleton, still, Y);
  });
  const double fps = ds.config.fps;
  std::vector<std::pair<std::string, Metrics>> rows;
  if (c.motion_only) {
    rows.emplace_back("motion-only", summarize(predicted, fps));
  } else {
    rows.emplace_back("ours", summarize(predicted, fps));
    rows.emplace_back("ours-gt-distances", summarize(truth, fps));
  }
  rows.emplace_back("freeze", summarize(freeze, fps));
  return rows;
}

} // namespace mdkit::train
