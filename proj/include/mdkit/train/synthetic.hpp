#pragma once

#include "mdkit/body/pose.hpp"
#include "mdkit/body/skeleton.hpp"
#include "mdkit/distance/mutual_distance.hpp"
#include "mdkit/geometry/mesh.hpp"
#include "mdkit/geometry/sdf.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mdkit::train {

struct SyntheticConfig {
  int train = 200;
  int test_seen = 40;
  int test_unseen = 20;
  int seen_layouts = 8;
  int unseen_layouts = 4;
  int T = 15;
  int U = 30;
  double fps = 30.0;
  int markers = 67;
  int basis_points = 150;
  double basis_radius = 2.0;
  double crop_radius = 2.0;
  int grid = 64;
  double surface_density = 2000.0;
  double room_half_size = 3.0;
  int max_attempts = 200;

  int length() const { return T + U; }
};

std::string config_to_json(const SyntheticConfig& config);
SyntheticConfig synthetic_config_from_json(const std::string& text);

// Axis-aligned footprint element resting on the floor.
struct Obstacle {
  bool cylinder = false;
  Vec3 center = Vec3::Zero();  // footprint centre, z = 0
  Vec3 half = Vec3::Zero();    // half extents; a cylinder uses half.x as its radius
  double height() const { return 2.0 * half.z(); }
  double footprint_radius() const;
};

struct RoomLayout {
  int id = 0;
  std::vector<Obstacle> obstacles;
  Obstacle seat;
  Vec3 seat_front = Vec3::UnitX();  // unit axis a seated person faces
  double half_size = 3.0;
  geometry::TriangleMesh mesh;
};

// Floor slab, four walls, 1-3 obstacles and a seat, all disjoint closed meshes.
RoomLayout make_layout(int id, std::uint64_t seed, double half_size = 3.0);

enum class MotionKind { WalkAround, SitDown, ReachWall };
const char* motion_kind_name(MotionKind kind);

enum class Split { Train, TestSeen, TestUnseen };
const char* split_name(Split split);
Split split_from_name(const std::string& name);

struct Sample {
  Split split = Split::Train;
  int index = 0;
  int layout = 0;
  MotionKind kind = MotionKind::WalkAround;
  Vec3 origin = Vec3::Zero();          // world position of the local frame origin (root at frame T)
  geometry::SdfVolume volume;          // crop around the origin, local frame
  body::MotionSequence motion;         // T + U frames, local frame
  distance::DistanceSequence distances;
  int attempts = 0;                    // generator draws used, including rejected ones
};

struct SyntheticDataset {
  SyntheticConfig config;
  std::uint64_t seed = 0;
  body::Skeleton skeleton = body::default_skeleton();
  distance::BasisSet basis;
  std::vector<RoomLayout> layouts;
  std::vector<Sample> train, test_seen, test_unseen;

  const std::vector<Sample>& split(Split s) const;
};

// Deterministic in (config, seed); `jobs` only changes the speed.
SyntheticDataset generate_synthetic(const SyntheticConfig& config, std::uint64_t seed, int jobs = 1);

// Directory layout: dataset.json, skeleton.json, basis.csv, layouts/*.obj,
// samples/<split>_<index>.{mdsf,mdms,mdds}.
void write_dataset(const SyntheticDataset& dataset, const std::filesystem::path& dir);
SyntheticDataset read_dataset(const std::filesystem::path& dir);

// Counter-based stream seed: independent per (seed, stream, index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

} // namespace mdkit::train
