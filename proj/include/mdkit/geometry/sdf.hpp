#pragma once

#include "mdkit/geometry/bvh.hpp"
#include "mdkit/geometry/mesh.hpp"

#include <filesystem>
#include <vector>

namespace mdkit::geometry {

// Cell-centred cubic grid: voxel (i,j,k) has centre origin + (idx + 0.5) * voxel_size,
// so the grid covers the box [origin, origin + resolution * voxel_size].
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 1.0;
  int resolution = 2;

  Vec3 center(int i, int j, int k) const {
    return origin + voxel_size * Vec3(i + 0.5, j + 0.5, k + 0.5);
  }
  double extent() const { return voxel_size * resolution; }
  std::size_t voxel_count() const {
    return static_cast<std::size_t>(resolution) * resolution * resolution;
  }

  // Grid covering center ± radius.
  static GridSpec around(const Vec3& center, double radius, int resolution);
};

void validate(const GridSpec& spec);

class SdfVolume {
 public:
  SdfVolume() = default;
  SdfVolume(GridSpec spec, std::vector<float> values);

  const GridSpec& spec() const { return spec_; }
  const std::vector<float>& values() const { return values_; }
  int resolution() const { return spec_.resolution; }

  // x-fastest linear layout.
  std::size_t index(int i, int j, int k) const {
    const std::size_t n = spec_.resolution;
    return (static_cast<std::size_t>(k) * n + j) * n + i;
  }
  double at(int i, int j, int k) const { return values_[index(i, j, k)]; }

  // Same values expressed in a frame shifted by -offset (world point p maps to p - offset).
  SdfVolume shifted(const Vec3& offset) const;

 private:
  GridSpec spec_;
  std::vector<float> values_;
};

struct VoxelizeOptions {
  int jobs = 1;
};

// Exact signed distance at every voxel centre: nearest-triangle distance with
// the sign from +x ray parity.
SdfVolume voxelize_sdf(const TriangleMesh& mesh, const GridSpec& spec, const VoxelizeOptions& options = {});

// Trilinear interpolation of voxel-centre values. Queries outside the span of
// voxel centres are clamped onto it.
double sample_sdf(const SdfVolume& volume, const Vec3& q);

// Gradient of the trilinear interpolant (zero along clamped axes).
Vec3 sample_sdf_gradient(const SdfVolume& volume, const Vec3& q);

// Value and gradient in one pass.
double sample_sdf(const SdfVolume& volume, const Vec3& q, Vec3* gradient);

// Sub-volume covering center ± radius on the source lattice, re-expressed in a
// frame whose origin is `center`. Voxels beyond the source grid are clamped.
SdfVolume crop_scene(const SdfVolume& volume, const Vec3& center, double radius);

// Binary "MDSF" v1, little-endian.
void write_mdsf(const SdfVolume& volume, const std::filesystem::path& path);
SdfVolume read_mdsf(const std::filesystem::path& path);

} // namespace mdkit::geometry
