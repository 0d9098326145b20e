#include "mdkit/geometry/sdf.hpp"

#include "mdkit/error.hpp"
#include "mdkit/io/binary.hpp"
#include "mdkit/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

namespace mdkit::geometry {

GridSpec GridSpec::around(const Vec3& center, double radius, int resolution) {
  GridSpec spec;
  spec.origin = center - Vec3::Constant(radius);
  spec.voxel_size = 2.0 * radius / resolution;
  spec.resolution = resolution;
  return spec;
}

void validate(const GridSpec& spec) {
  if (spec.resolution < 2) fail(ErrorCode::GridTooSmall, "resolution must be at least 2");
  if (!(spec.voxel_size > 0.0)) fail(ErrorCode::GridTooSmall, "voxel size must be positive");
}

SdfVolume::SdfVolume(GridSpec spec, std::vector<float> values)
    : spec_(std::move(spec)), values_(std::move(values)) {
  validate(spec_);
  if (values_.size() != spec_.voxel_count()) {
    fail(ErrorCode::DimensionMismatch, "value count does not match resolution^3");
  }
}

SdfVolume SdfVolume::shifted(const Vec3& offset) const {
  GridSpec spec = spec_;
  spec.origin -= offset;
  return SdfVolume(spec, values_);
}

namespace {

// Signs for one x-row of voxels from a single +x ray. Returns false if the
// ray grazed an edge, in which case the caller falls back to point_sign.
bool row_signs(const Bvh& bvh, const GridSpec& spec, const Eigen::AlignedBox3d& mesh_box, int j, int k,
               std::vector<int>& signs) {
  const Vec3 first = spec.center(0, j, k);
  const double start_x = std::min(mesh_box.min().x(), first.x()) - 1.0;
  const Vec3 origin(start_x, first.y(), first.z());
  const auto hits = bvh.intersect_ray(origin, Vec3::UnitX());
  if (hits.grazing || hits.on_surface) return false;
  std::size_t passed = 0;
  for (int i = 0; i < spec.resolution; ++i) {
    const double x = spec.center(i, j, k).x();
    while (passed < hits.t.size() && start_x + hits.t[passed] <= x) ++passed;
    const std::size_t ahead = hits.t.size() - passed;
    signs[i] = (ahead % 2 == 1) ? -1 : +1;
  }
  return true;
}

} // namespace

SdfVolume voxelize_sdf(const TriangleMesh& mesh, const GridSpec& spec, const VoxelizeOptions& options) {
  validate(spec);
  validate(mesh);
  require_watertight(mesh);
  const Bvh bvh(mesh);
  const auto mesh_box = bounds(mesh);
  const Eigen::AlignedBox3d grid_box(spec.origin, spec.origin + Vec3::Constant(spec.extent()));
  if (!grid_box.intersects(mesh_box)) {
    std::cerr << "warning: voxel grid does not overlap the mesh bounds\n";
  }

  const int n = spec.resolution;
  std::vector<float> values(spec.voxel_count());
  // One task per (j,k) row; each row writes a disjoint slice.
  parallel_for(static_cast<std::size_t>(n) * n, options.jobs, [&](std::size_t row) {
    const int j = static_cast<int>(row % n);
    const int k = static_cast<int>(row / n);
    std::vector<int> signs(n);
    const bool ok = row_signs(bvh, spec, mesh_box, j, k, signs);
    for (int i = 0; i < n; ++i) {
      const Vec3 c = spec.center(i, j, k);
      const double dist = bvh.closest(c).distance;
      int sign = ok ? signs[i] : 0;
      if (!ok) sign = dist == 0.0 ? 1 : point_sign(mesh, bvh, c);
      values[(static_cast<std::size_t>(k) * n + j) * n + i] = static_cast<float>(sign * dist);
    }
  });
  return SdfVolume(spec, std::move(values));
}

double sample_sdf(const SdfVolume& volume, const Vec3& q, Vec3* gradient) {
  const GridSpec& spec = volume.spec();
  const int n = spec.resolution;
  int base[3];
  double frac[3];
  bool clamped[3];
  for (int a = 0; a < 3; ++a) {
    double u = (q[a] - spec.origin[a]) / spec.voxel_size - 0.5;
    clamped[a] = u < 0.0 || u > n - 1;
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    int i0 = static_cast<int>(std::floor(u));
    i0 = std::min(i0, n - 2);
    base[a] = i0;
    frac[a] = u - i0;
  }
  double c[2][2][2];
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) c[dz][dy][dx] = volume.at(base[0] + dx, base[1] + dy, base[2] + dz);

  const double fx = frac[0], fy = frac[1], fz = frac[2];
  // Interpolate along x, then y, then z.
  const double c00 = c[0][0][0] * (1 - fx) + c[0][0][1] * fx;
  const double c10 = c[0][1][0] * (1 - fx) + c[0][1][1] * fx;
  const double c01 = c[1][0][0] * (1 - fx) + c[1][0][1] * fx;
  const double c11 = c[1][1][0] * (1 - fx) + c[1][1][1] * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  const double value = c0 * (1 - fz) + c1 * fz;

  if (gradient) {
    const double inv_h = 1.0 / spec.voxel_size;
    const double dx00 = c[0][0][1] - c[0][0][0];
    const double dx10 = c[0][1][1] - c[0][1][0];
    const double dx01 = c[1][0][1] - c[1][0][0];
    const double dx11 = c[1][1][1] - c[1][1][0];
    const double gx = ((dx00 * (1 - fy) + dx10 * fy) * (1 - fz) + (dx01 * (1 - fy) + dx11 * fy) * fz);
    const double gy = (c10 - c00) * (1 - fz) + (c11 - c01) * fz;
    const double gz = c1 - c0;
    *gradient = Vec3(clamped[0] ? 0.0 : gx * inv_h, clamped[1] ? 0.0 : gy * inv_h,
                     clamped[2] ? 0.0 : gz * inv_h);
  }
  return value;
}

double sample_sdf(const SdfVolume& volume, const Vec3& q) { return sample_sdf(volume, q, nullptr); }

Vec3 sample_sdf_gradient(const SdfVolume& volume, const Vec3& q) {
  Vec3 g;
  sample_sdf(volume, q, &g);
  return g;
}

SdfVolume crop_scene(const SdfVolume& volume, const Vec3& center, double radius) {
  if (!(radius > 0.0)) fail(ErrorCode::InvalidRadius, "crop radius must be positive");
  const GridSpec& src = volume.spec();
  const int n = src.resolution;
  const double h = src.voxel_size;
  constexpr double kSnap = 1e-9;

  int lo[3];
  int count = 2;
  for (int a = 0; a < 3; ++a) {
    const double u_lo = (center[a] - radius - src.origin[a]) / h;
    const double u_hi = (center[a] + radius - src.origin[a]) / h;
    if (u_hi <= 0.0 || u_lo >= n) {
      fail(ErrorCode::CropOutsideVolume, "crop box does not overlap the volume");
    }
    lo[a] = static_cast<int>(std::floor(u_lo + kSnap));
    const int hi = static_cast<int>(std::ceil(u_hi - kSnap)) - 1;
    count = std::max(count, hi - lo[a] + 1);
  }

  GridSpec spec;
  spec.voxel_size = h;
  spec.resolution = count;
  spec.origin = src.origin + h * Vec3(lo[0], lo[1], lo[2]) - center;
  std::vector<float> values(spec.voxel_count());
  std::size_t idx = 0;
  for (int k = 0; k < count; ++k)
    for (int j = 0; j < count; ++j)
      for (int i = 0; i < count; ++i) {
        const int si = std::clamp(lo[0] + i, 0, n - 1);
        const int sj = std::clamp(lo[1] + j, 0, n - 1);
        const int sk = std::clamp(lo[2] + k, 0, n - 1);
        values[idx++] = static_cast<float>(volume.at(si, sj, sk));
      }
  return SdfVolume(spec, std::move(values));
}

void write_mdsf(const SdfVolume& volume, const std::filesystem::path& path) {
  io::BinaryWriter out(path);
  out.magic("MDSF");
  out.u32(1);
  const auto& spec = volume.spec();
  for (int a = 0; a < 3; ++a) out.f64(spec.origin[a]);
  out.f64(spec.voxel_size);
  out.u32(static_cast<std::uint32_t>(spec.resolution));
  out.f32_array(volume.values().data(), volume.values().size());
  out.close();
}

SdfVolume read_mdsf(const std::filesystem::path& path) {
  io::BinaryReader in(path);
  in.expect_magic("MDSF");
  const auto version = in.u32();
  if (version != 1) fail(ErrorCode::FormatError, "unsupported MDSF version " + std::to_string(version));
  GridSpec spec;
  for (int a = 0; a < 3; ++a) spec.origin[a] = in.f64();
  spec.voxel_size = in.f64();
  spec.resolution = static_cast<int>(in.u32());
  validate(spec);
  std::vector<float> values(spec.voxel_count());
  in.f32_array(values.data(), values.size());
  in.expect_end();
  return SdfVolume(spec, std::move(values));
}

} // namespace mdkit::geometry
