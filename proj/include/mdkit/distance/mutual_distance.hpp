#pragma once

#include "mdkit/body/kinematics.hpp"
#include "mdkit/geometry/sdf.hpp"
#include "mdkit/types.hpp"

#include <filesystem>

namespace mdkit::distance {

inline constexpr int kDefaultBasisCount = 150;
inline constexpr double kDefaultBasisRadius = 2.0;

// Fixed basis points on a sphere around the sample origin (last observed root).
struct BasisSet {
  Points points;
  double radius = 0.0;

  int size() const { return static_cast<int>(points.rows()); }
};

// Spherical Fibonacci lattice: z_i = 1 - (2i + 1) / P, azimuth in golden-angle steps.
BasisSet fibonacci_basis(int count, double radius);

// Per-marker signed distance through the interpolated volume (K entries).
VecX per_vertex_signed_distance(const geometry::SdfVolume& volume, const Points& markers);

// Per-basis minimum distance to the sampled body surface (P entries).
VecX per_basis_distance(const BasisSet& basis, const body::BodySurface& surface);
VecX per_basis_distance(const BasisSet& basis, const Points& surface_points);

// D is K × L, B is P × L; column t belongs to frame t.
struct DistanceSequence {
  MatX D;
  MatX B;

  int length() const { return static_cast<int>(D.cols()); }
  DistanceSequence slice(int begin, int count) const;
};

struct DistanceOptions {
  double surface_density = 2000.0;
  int jobs = 1;
};

// All inputs share one frame (the crop frame in the training pipeline).
DistanceSequence sequence_distances(const geometry::SdfVolume& volume, const BasisSet& basis,
                                    const body::Skeleton& skeleton, const body::MotionSequence& motion,
                                    const DistanceOptions& options = {});

// CSV with header "frame,kind,index,value", kind is "d" or "b".
void write_distances_csv(const DistanceSequence& seq, const std::filesystem::path& path);
// Binary "MDDS" v1: magic, u32 version, u32 frames, u32 K, u32 P, then per frame K + P f32.
void write_mdds(const DistanceSequence& seq, const std::filesystem::path& path);
DistanceSequence read_mdds(const std::filesystem::path& path);

// CSV with header "index,x,y,z"; the radius is the mean point norm.
void write_basis_csv(const BasisSet& basis, const std::filesystem::path& path);
BasisSet read_basis_csv(const std::filesystem::path& path);

} // namespace mdkit::distance
