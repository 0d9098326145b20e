#pragma once

#include "mdkit/body/skeleton.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mdkit::train {

// Per-frame errors of one forecast, in millimetres.
struct FrameErrors {
  VecX path;  // ‖t̂ − t‖ per frame
  VecX pose;  // MPJPE of root-relative joints per frame
};

// Y_hat, Y: M × U. Throws LengthMismatch when the frame counts differ.
FrameErrors path_pose_error(const body::Skeleton& skeleton, const MatX& Y_hat, const MatX& Y);

struct Metrics {
  std::vector<double> horizons;  // seconds
  std::vector<double> path;      // mm at each horizon
  std::vector<double> pose;
  double path_mean = 0.0;        // mm averaged over every predicted frame
  double pose_mean = 0.0;
  int sequences = 0;
};

// Averages over sequences. Horizon h maps to frame round(h·fps) (1-based);
// horizons beyond the forecast length are dropped.
Metrics summarize(const std::vector<FrameErrors>& errors, double fps, const std::vector<double>& horizons = {0.5, 1.0});

// CSV rows "variant,metric,horizon,value_mm" with horizon "mean" for means.
void write_metrics_csv(const std::vector<std::pair<std::string, Metrics>>& rows, std::ostream& out);
// Aligned table with path and pose columns per horizon plus mean.
void print_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows, std::ostream& out);

} // namespace mdkit::train
