#include "mdkit/body/skeleton.hpp"

#include "mdkit/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace mdkit::body {

namespace {

BoneFrame make_frame(const Vec3& offset) {
  BoneFrame f;
  f.length = offset.norm();
  f.axis = f.length > 1e-12 ? Vec3(offset / f.length) : Vec3::UnitZ();
  const Vec3 helper = std::abs(f.axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  f.normal = f.axis.cross(helper).normalized();
  f.binormal = f.axis.cross(f.normal);
  return f;
}

} // namespace

Skeleton::Skeleton(std::vector<Joint> joints, std::vector<double> radii, std::vector<Marker> markers)
    : joints_(std::move(joints)), radii_(std::move(radii)), markers_(std::move(markers)) {
  if (joints_.empty() || joints_[0].parent != -1) {
    fail(ErrorCode::DimensionMismatch, "joint 0 must be the root");
  }
  for (int j = 1; j < joint_count(); ++j) {
    if (joints_[j].parent < 0 || joints_[j].parent >= j) {
      fail(ErrorCode::DimensionMismatch, "joints must be topologically sorted");
    }
  }
  if (static_cast<int>(radii_.size()) != bone_count()) {
    fail(ErrorCode::DimensionMismatch, "one radius per bone expected");
  }
  for (const auto& m : markers_) {
    if (m.bone < 0 || m.bone >= bone_count()) fail(ErrorCode::DimensionMismatch, "marker bone out of range");
  }
  for (int b = 0; b < bone_count(); ++b) frames_.push_back(make_frame(joints_[b + 1].offset));
}

double Skeleton::bone_area(int bone) const {
  const double r = radii_[bone];
  return 2.0 * std::numbers::pi * r * frames_[bone].length + 4.0 * std::numbers::pi * r * r;
}

int Skeleton::find_joint(const std::string& name) const {
  for (int j = 0; j < joint_count(); ++j) {
    if (joints_[j].name == name) return j;
  }
  return -1;
}

Skeleton Skeleton::with_markers(std::vector<Marker> markers) const {
  return Skeleton(joints_, radii_, std::move(markers));
}

std::vector<Marker> distribute_markers(const Skeleton& skeleton, int count) {
  const int bones = skeleton.bone_count();
  std::vector<double> area(bones);
  for (int b = 0; b < bones; ++b) area[b] = skeleton.bone_area(b);
  const double total = std::accumulate(area.begin(), area.end(), 0.0);

  std::vector<int> per_bone(bones);
  std::vector<std::pair<double, int>> remainders;
  int assigned = 0;
  for (int b = 0; b < bones; ++b) {
    const double share = count * area[b] / total;
    per_bone[b] = static_cast<int>(std::floor(share));
    assigned += per_bone[b];
    remainders.emplace_back(share - per_bone[b], b);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int i = 0; assigned < count; ++i, ++assigned) ++per_bone[remainders[i % bones].second];

  constexpr double kGolden = 2.399963229728653;  // pi * (3 - sqrt 5)
  std::vector<Marker> markers;
  for (int b = 0; b < bones; ++b) {
    for (int i = 0; i < per_bone[b]; ++i) {
      Marker m;
      m.bone = b;
      m.axial = (i + 0.5) / per_bone[b];
      m.azimuth = std::fmod(i * kGolden, 2.0 * std::numbers::pi);
      markers.push_back(m);
    }
  }
  return markers;
}

Skeleton default_skeleton(int marker_count) {
  std::vector<Joint> joints = {
      {"pelvis", -1, {0, 0, 0}},
      {"spine1", 0, {0, 0, 0.20}},
      {"spine2", 1, {0, 0, 0.22}},
      {"head", 2, {0, 0, 0.28}},
      {"left_shoulder", 2, {0, 0.17, 0}},
      {"left_elbow", 4, {0, 0, -0.28}},
      {"left_wrist", 5, {0, 0, -0.25}},
      {"right_shoulder", 2, {0, -0.17, 0}},
      {"right_elbow", 7, {0, 0, -0.28}},
      {"right_wrist", 8, {0, 0, -0.25}},
      {"left_hip", 0, {0, 0.09, -0.07}},
      {"left_knee", 10, {0, 0, -0.42}},
      {"left_ankle", 11, {0, 0, -0.42}},
      {"right_hip", 0, {0, -0.09, -0.07}},
      {"right_knee", 13, {0, 0, -0.42}},
      {"right_ankle", 14, {0, 0, -0.42}},
  };
  // Radius of the capsule ending at joints 1..15.
  std::vector<double> radii = {0.11, 0.12, 0.09, 0.05, 0.045, 0.04, 0.05, 0.045,
                               0.04, 0.08, 0.065, 0.05, 0.08, 0.065, 0.05};
  Skeleton bare(joints, radii, {});
  return bare.with_markers(distribute_markers(bare, marker_count));
}

std::string skeleton_to_json(const Skeleton& skeleton) {
  nlohmann::json j;
  for (const auto& joint : skeleton.joints()) {
    j["joints"].push_back({{"name", joint.name},
                           {"parent", joint.parent},
                           {"offset", {joint.offset.x(), joint.offset.y(), joint.offset.z()}}});
  }
  j["radii"] = skeleton.radii();
  j["markers"] = nlohmann::json::array();
  for (const auto& m : skeleton.markers()) {
    j["markers"].push_back({{"bone", m.bone}, {"axial", m.axial}, {"azimuth", m.azimuth}});
  }
  return j.dump(2);
}

Skeleton skeleton_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    std::vector<Joint> joints;
    for (const auto& item : j.at("joints")) {
      const auto off = item.at("offset").get<std::vector<double>>();
      if (off.size() != 3) fail(ErrorCode::FormatError, "joint offset must have 3 entries");
      joints.push_back({item.at("name").get<std::string>(), item.at("parent").get<int>(),
                        Vec3(off[0], off[1], off[2])});
    }
    auto radii = j.at("radii").get<std::vector<double>>();
    std::vector<Marker> markers;
    for (const auto& item : j.at("markers")) {
      markers.push_back({item.at("bone").get<int>(), item.at("axial").get<double>(),
                         item.at("azimuth").get<double>()});
    }
    return Skeleton(std::move(joints), std::move(radii), std::move(markers));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, std::string("skeleton json: ") + e.what());
  }
}

Skeleton read_skeleton_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return skeleton_from_json(ss.str());
}

void write_skeleton_json(const Skeleton& skeleton, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << skeleton_to_json(skeleton) << '\n';
}

} // namespace mdkit::body
