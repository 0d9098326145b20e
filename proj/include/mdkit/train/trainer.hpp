#pragma once

#include "mdkit/nn/networks.hpp"
#include "mdkit/train/losses.hpp"
#include "mdkit/train/metrics.hpp"
#include "mdkit/train/synthetic.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mdkit::train {

struct TrainConfig {
  int epochs_predictor = 40;
  int epochs_forecaster = 40;
  int epochs_finetune = 1;
  double learning_rate = 5e-4;
  int decay_epoch = 30;        // 1-based epoch from which the rate is scaled
  double decay_factor = 0.5;
  int batch_size = 16;
  std::uint64_t seed = 0;
  LossWeights weights;
  double tau = 0.01;                    // smooth-min temperature (m)
  double loss_surface_density = 400.0; // body points per m² in the basis term
  bool teacher_forcing = true;          // forecaster stage sees ground-truth distances
  bool motion_only = false;             // ablation: no distances, no scene
  int train_limit = 0;                  // use only the first N training samples (0: all)
  nn::ModelConfig model;                // problem sizes are taken from the dataset
};

std::string train_config_to_json(const TrainConfig& config);
// Keys absent from `text` keep their defaults. Throws FormatError.
TrainConfig train_config_from_json(const std::string& text);

// Copies T, U, K, P, M and grid size from the dataset into config.model.
TrainConfig resolve_config(TrainConfig config, const SyntheticDataset& dataset);

// Rate for a 1-based epoch within a stage.
double learning_rate(const TrainConfig& config, int epoch);

struct EpochRecord {
  std::string stage;
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0;
  double dist = 0.0;
  MotionComponents motion;
};
std::string epoch_record_json(const EpochRecord& record);

struct TrainResult {
  TrainConfig config;
  nn::Model model;
  std::vector<EpochRecord> log;
};

// Stage 1 trains the distance predictor on loss_dist, stage 2 the forecaster
// on loss_motion, stage 3 fine-tunes both on their sum. `on_epoch` sees
// every record as it is produced. Throws NonFiniteLoss.
TrainResult train_stagewise(const SyntheticDataset& dataset, const TrainConfig& config, int jobs = 1,
                            const std::function<void(const EpochRecord&)>& on_epoch = {});

// config.json, predictor.mdck, forecaster.mdck, model.mdck and log.jsonl.
void save_training(const TrainResult& result, const std::filesystem::path& dir);
struct LoadedModel {
  TrainConfig config;
  nn::Model model;
};
LoadedModel load_training(const std::filesystem::path& dir);
std::uint64_t config_digest(const TrainConfig& config);

enum class DistanceSource { Predicted, GroundTruth };

// U × M forecast for one sample (as an M × U matrix).
MatX forecast_sample(const nn::Model& model, const TrainConfig& config, const Sample& sample, DistanceSource source);

// Rows: "ours" and "ours-gt-distances" (or "motion-only"), plus "freeze".
std::vector<std::pair<std::string, Metrics>> evaluate(const nn::Model& model, const TrainConfig& config,
                                                      const SyntheticDataset& dataset, Split split, int jobs = 1);

} // namespace mdkit::train
