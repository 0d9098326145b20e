#include "doctest.h"

#include "../support/oracles.hpp"
#include "mdkit/error.hpp"
#include "mdkit/geometry/bvh.hpp"
#include "mdkit/geometry/sdf.hpp"

#include <filesystem>
#include <random>

using namespace mdkit;
using namespace mdkit::geometry;

namespace {

TriangleMesh single_triangle() {
  TriangleMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}};
  return m;
}

// Floor slab whose top face is z = 0 and whose lateral extent dwarfs any test grid.
TriangleMesh floor_slab() { return make_box(Vec3(-50, -50, -5), Vec3(50, 50, 0)); }

} // namespace

TEST_CASE("build_bvh rejects empty and degenerate meshes") {
  TriangleMesh empty;
  CHECK_THROWS_AS(Bvh{empty}, Error);
  TriangleMesh flat;
  flat.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  flat.triangles = {{0, 1, 2}};
  try {
    Bvh bvh(flat);
    FAIL("expected DegenerateTriangle");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateTriangle);
  }
}

TEST_CASE("build_bvh structure") {
  SUBCASE("single triangle gives one leaf holding triangle 0") {
    Bvh bvh(single_triangle());
    REQUIRE(bvh.nodes().size() == 1);
    CHECK(bvh.nodes()[0].leaf());
    CHECK(bvh.order() == std::vector<int>{0});
  }
  SUBCASE("two distant triangles split into one child each") {
    auto mesh = single_triangle();
    append(mesh, translated(single_triangle(), Vec3(100, 0, 0)));
    Bvh bvh(mesh, 1);
    REQUIRE(bvh.nodes().size() == 3);
    const auto& root = bvh.nodes()[0];
    CHECK(root.box.contains(mesh.vertices[0]));
    CHECK(root.box.contains(mesh.vertices[5]));
    CHECK(bvh.nodes()[root.left].end - bvh.nodes()[root.left].begin == 1);
    CHECK(bvh.nodes()[root.right].end - bvh.nodes()[root.right].begin == 1);
  }
  SUBCASE("every triangle in exactly one leaf and boxes nest") {
    std::mt19937_64 rng(3);
    const auto mesh = mdkit::testing::random_triangle_soup(300, rng);
    Bvh bvh(mesh);
    std::vector<int> seen(mesh.size(), 0);
    for (const auto& node : bvh.nodes()) {
      if (node.leaf()) {
        for (int i = node.begin; i < node.end; ++i) ++seen[bvh.order()[i]];
      } else {
        CHECK(node.box.contains(bvh.nodes()[node.left].box));
        CHECK(node.box.contains(bvh.nodes()[node.right].box));
      }
    }
    for (int c : seen) CHECK(c == 1);
  }
}

TEST_CASE("closest_surface_point hand cases") {
  Bvh bvh(single_triangle());
  auto r = closest_surface_point(bvh, Vec3(0, 0, 1));
  CHECK(r.distance == doctest::Approx(1.0));
  CHECK((r.point - Vec3(0, 0, 0)).norm() < 1e-15);
  r = closest_surface_point(bvh, Vec3(2, 0, 0));
  CHECK(r.distance == doctest::Approx(1.0));
  CHECK((r.point - Vec3(1, 0, 0)).norm() < 1e-15);
}

TEST_CASE("closest_surface_point matches brute force on a 500-triangle mesh") {
  std::mt19937_64 rng(11);
  const auto mesh = mdkit::testing::random_triangle_soup(500, rng);
  Bvh bvh(mesh);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  int mismatched_tri = 0;
  for (int i = 0; i < 10000; ++i) {
    const Vec3 q(u(rng), u(rng), u(rng));
    const auto fast = bvh.closest(q);
    const auto slow = closest_surface_point_brute_force(mesh, q);
    worst = std::max(worst, std::abs(fast.distance - slow.distance));
    if (fast.triangle != slow.triangle) ++mismatched_tri;
  }
  CHECK(worst < 1e-9);
  CHECK(mismatched_tri == 0);
}

TEST_CASE("point_sign") {
  const auto cube = make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  Bvh bvh(cube);
  CHECK(point_sign(cube, bvh, Vec3(0, 0, 0)) == -1);
  CHECK(point_sign(cube, bvh, Vec3(1.5, 0, 0)) == +1);
  // On the axis of a face diagonal: the +x ray grazes a triangle edge, forcing a retry.
  CHECK(point_sign(cube, bvh, Vec3(0.1, 0.2, -0.2)) == -1);
  CHECK(point_sign(cube, bvh, Vec3(-0.9, 0.0, 0.0)) == +1);

  TriangleMesh open = single_triangle();
  Bvh open_bvh(open);
  CHECK_THROWS_AS(point_sign(open, open_bvh, Vec3::Zero()), Error);
}

TEST_CASE("point_sign agrees with the winding-number oracle") {
  std::mt19937_64 rng(5);
  const auto mesh = mdkit::testing::random_watertight(rng);
  REQUIRE(is_watertight(mesh));
  Bvh bvh(mesh);
  std::uniform_real_distribution<double> u(-1.6, 1.6);
  int disagreements = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 q(u(rng), u(rng), u(rng));
    const bool inside = mdkit::testing::winding_number(mesh, q) > 0.5;
    if ((point_sign(mesh, bvh, q) < 0) != inside) ++disagreements;
  }
  CHECK(disagreements == 0);
}

TEST_CASE("voxelize_sdf on the unit cube") {
  const auto cube = make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  // 21 voxels over [-1,1]: voxel 10 is centred on the origin.
  GridSpec spec{Vec3::Constant(-1.0), 2.0 / 21.0, 21};
  const auto vol = voxelize_sdf(cube, spec);
  CHECK(vol.at(10, 10, 10) == doctest::Approx(-0.5).epsilon(1e-6));
  // Voxel centre nearest (0.9, 0, 0).
  const int i = static_cast<int>(std::floor((0.9 + 1.0) / spec.voxel_size));
  const Vec3 c = spec.center(i, 10, 10);
  const double half_diag = std::sqrt(3.0) * spec.voxel_size / 2.0;
  CHECK(std::abs(vol.at(i, 10, 10) - 0.4) <= half_diag);
  CHECK(vol.at(i, 10, 10) == doctest::Approx(c.x() - 0.5).epsilon(1e-6));
  CHECK_THROWS_AS(voxelize_sdf(cube, GridSpec{Vec3::Zero(), 0.1, 1}), Error);
}

TEST_CASE("voxelize_sdf on a subdivided sphere matches the analytic distance") {
  const double radius = 0.8;
  const auto sphere = make_icosphere(Vec3::Zero(), radius, 4);
  // Chordal error bound: the largest gap between the sphere and the inscribed facets.
  double max_edge = 0.0;
  for (const auto& t : sphere.triangles) {
    for (int k = 0; k < 3; ++k) {
      max_edge = std::max(max_edge, (sphere.vertices[t[k]] - sphere.vertices[t[(k + 1) % 3]]).norm());
    }
  }
  const double chordal = radius - std::sqrt(radius * radius - max_edge * max_edge / 3.0);
  GridSpec spec{Vec3::Constant(-1.2), 2.4 / 16.0, 16};
  const auto vol = voxelize_sdf(sphere, spec);
  double worst = 0.0;
  for (int k = 0; k < 16; ++k)
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i) {
        worst = std::max(worst, std::abs(vol.at(i, j, k) - (spec.center(i, j, k).norm() - radius)));
      }
  CHECK(worst <= chordal + 1e-6);
}

TEST_CASE("voxelization is independent of worker count") {
  const auto sphere = make_icosphere(Vec3::Zero(), 0.7, 2);
  GridSpec spec{Vec3::Constant(-1.0), 2.0 / 12.0, 12};
  const auto a = voxelize_sdf(sphere, spec, {1});
  const auto b = voxelize_sdf(sphere, spec, {3});
  CHECK(a.values() == b.values());
}

TEST_CASE("sample_sdf interpolation") {
  const auto cube = make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  GridSpec spec{Vec3::Constant(-1.0), 0.2, 10};
  const auto vol = voxelize_sdf(cube, spec);
  CHECK(sample_sdf(vol, spec.center(3, 4, 5)) == vol.at(3, 4, 5));
  const Vec3 mid = 0.5 * (spec.center(3, 4, 5) + spec.center(4, 4, 5));
  CHECK(sample_sdf(vol, mid) == doctest::Approx(0.5 * (vol.at(3, 4, 5) + vol.at(4, 4, 5))));

  const auto floor = floor_slab();
  GridSpec floor_spec{Vec3(-1, -1, -1), 2.0 / 16.0, 16};
  const auto floor_vol = voxelize_sdf(floor, floor_spec);
  CHECK(std::abs(sample_sdf(floor_vol, Vec3(0.13, -0.41, 0.37)) - 0.37) < 1e-6);
  const Vec3 g = sample_sdf_gradient(floor_vol, Vec3(0.2, 0.3, 0.5));
  CHECK((g - Vec3(0, 0, 1)).norm() < 1e-6);
  // Out-of-grid queries clamp and stay finite.
  CHECK(std::isfinite(sample_sdf(floor_vol, Vec3(10, 10, 10))));
}

TEST_CASE("sample_sdf_gradient matches central differences inside cells") {
  const auto sphere = make_icosphere(Vec3::Zero(), 0.6, 3);
  GridSpec spec{Vec3::Constant(-1.0), 2.0 / 14.0, 14};
  const auto vol = voxelize_sdf(sphere, spec);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> cell(0, 12);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Vec3 base = spec.center(cell(rng), cell(rng), cell(rng));
    const Vec3 q = base + spec.voxel_size * Vec3(frac(rng), frac(rng), frac(rng));
    const Vec3 g = sample_sdf_gradient(vol, q);
    const double h = 1e-5;
    Vec3 fd;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      fd[a] = (sample_sdf(vol, q + e) - sample_sdf(vol, q - e)) / (2 * h);
    }
    worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / std::max(1e-3, fd.cwiseAbs().maxCoeff()));
  }
  CHECK(worst < 1e-4);

  // Radial gradient outside a sphere on +x.
  const Vec3 g = sample_sdf_gradient(vol, Vec3(0.85, 0.0, 0.0));
  CHECK(g.x() > 0.9);
  CHECK(std::abs(g.y()) < 0.1);
  CHECK(std::abs(g.z()) < 0.1);
}

TEST_CASE("SDF is 1-Lipschitz and sign-consistent") {
  std::mt19937_64 rng(21);
  const auto mesh = mdkit::testing::random_watertight(rng, 2);
  GridSpec spec{Vec3::Constant(-1.6), 3.2 / 20.0, 20};
  const auto vol = voxelize_sdf(mesh, spec);
  const double n = spec.resolution;
  for (int k = 0; k + 1 < n; ++k)
    for (int j = 0; j + 1 < n; ++j)
      for (int i = 0; i + 1 < n; ++i) {
        CHECK(std::abs(vol.at(i + 1, j, k) - vol.at(i, j, k)) <= spec.voxel_size * std::sqrt(3.0) + 1e-6);
      }
  Bvh bvh(mesh);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  for (int s = 0; s < 500; ++s) {
    const Vec3 a(u(rng), u(rng), u(rng));
    const Vec3 b(u(rng), u(rng), u(rng));
    CHECK(std::abs(sample_sdf(vol, a) - sample_sdf(vol, b)) <= (a - b).norm() + 1e-6);
    if (point_sign(mesh, bvh, a) < 0) CHECK(sample_sdf(vol, a) <= spec.voxel_size);
  }
}

TEST_CASE("crop_scene") {
  const auto sphere = make_icosphere(Vec3(0.3, -0.2, 0.1), 0.6, 2);
  GridSpec spec{Vec3::Constant(-2.0), 0.25, 16};
  const auto vol = voxelize_sdf(sphere, spec);

  SUBCASE("full box is the identity up to the frame shift") {
    const Vec3 center = Vec3::Zero();
    const auto crop = crop_scene(vol, center, 2.0);
    CHECK(crop.resolution() == 16);
    CHECK(crop.values() == vol.values());
    CHECK((crop.spec().origin - (spec.origin - center)).norm() < 1e-12);
  }
  SUBCASE("lattice-aligned root gives origin = root - radius") {
    const Vec3 root(0.5, -0.25, 0.0);
    const auto crop = crop_scene(vol, root, 1.0);
    CHECK((crop.spec().origin + root - (root - Vec3::Constant(1.0))).norm() < 1e-12);
    CHECK(crop.resolution() == 8);
  }
  SUBCASE("queries agree with the source at corresponding world points") {
    const Vec3 center(0.13, 0.07, -0.21);
    const auto crop = crop_scene(vol, center, 1.0);
    std::mt19937_64 rng(4);
    const auto& cs = crop.spec();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 local = cs.origin + Vec3::Constant(0.5 * cs.voxel_size) +
                         (cs.resolution - 1) * cs.voxel_size * Vec3(u(rng), u(rng), u(rng));
      worst = std::max(worst, std::abs(sample_sdf(crop, local) - sample_sdf(vol, local + center)));
    }
    CHECK(worst < 1e-9);
  }
  CHECK_THROWS_AS(crop_scene(vol, Vec3(100, 0, 0), 1.0), Error);
}

TEST_CASE("MDSF and OBJ round trips") {
  const auto tmp = std::filesystem::temp_directory_path() / "mdkit_geometry_test";
  std::filesystem::create_directories(tmp);
  const auto cube = make_box(Vec3::Constant(-0.5), Vec3::Constant(0.5));
  write_obj(cube, tmp / "cube.obj");
  const auto back = read_obj(tmp / "cube.obj");
  CHECK(back.triangles == cube.triangles);
  CHECK(is_watertight(back));

  const auto vol = voxelize_sdf(cube, GridSpec{Vec3::Constant(-1.0), 0.25, 8});
  write_mdsf(vol, tmp / "cube.mdsf");
  const auto loaded = read_mdsf(tmp / "cube.mdsf");
  CHECK(loaded.values() == vol.values());
  CHECK(loaded.spec().origin == vol.spec().origin);
  CHECK(std::filesystem::file_size(tmp / "cube.mdsf") == 4 + 4 + 24 + 8 + 4 + 512 * 4);
  CHECK_THROWS_AS(read_mdsf(tmp / "cube.obj"), Error);
}
