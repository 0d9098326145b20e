#include "mdkit/train/synthetic.hpp"

#include "mdkit/body/kinematics.hpp"
#include "mdkit/error.hpp"
#include "mdkit/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace mdkit::train {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int pick(std::mt19937_64& rng, int count) { return std::uniform_int_distribution<int>(0, count - 1)(rng); }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 json_vec(const json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

// ---- room layouts ---------------------------------------------------------

geometry::TriangleMesh obstacle_mesh(const Obstacle& o) {
  if (o.cylinder) return geometry::make_cylinder(o.center, o.half.x(), o.height(), 24);
  return geometry::make_box(Vec3(o.center.x() - o.half.x(), o.center.y() - o.half.y(), 0.0),
                            Vec3(o.center.x() + o.half.x(), o.center.y() + o.half.y(), o.height()));
}

geometry::TriangleMesh room_mesh(const RoomLayout& room) {
  const double h = room.half_size, t = 0.2, wall = 2.5;
  geometry::TriangleMesh mesh = geometry::make_box(Vec3(-h - t, -h - t, -t), Vec3(h + t, h + t, 0.0));
  geometry::append(mesh, geometry::make_box(Vec3(-h - t, -h - t, 0.0), Vec3(-h, h + t, wall)));
  geometry::append(mesh, geometry::make_box(Vec3(h, -h - t, 0.0), Vec3(h + t, h + t, wall)));
  geometry::append(mesh, geometry::make_box(Vec3(-h, -h - t, 0.0), Vec3(h, -h, wall)));
  geometry::append(mesh, geometry::make_box(Vec3(-h, h, 0.0), Vec3(h, h + t, wall)));
  for (const auto& o : room.obstacles) geometry::append(mesh, obstacle_mesh(o));
  geometry::append(mesh, obstacle_mesh(room.seat));
  return mesh;
}

// ---- body poses -----------------------------------------------------------

struct BodyParams {
  Vec3 root = Vec3(0, 0, 0.97);
  double heading = 0.0;
  double lean = 0.0;
  double hip[2] = {0, 0};       // flexion, left / right
  double knee[2] = {0, 0};
  double shoulder[2] = {0, 0};  // forward raise
  double elbow[2] = {0.2, 0.2};
};

struct JointIds {
  int spine1, hip[2], knee[2], shoulder[2], elbow[2];
  explicit JointIds(const body::Skeleton& s)
      : spine1(s.find_joint("spine1")),
        hip{s.find_joint("left_hip"), s.find_joint("right_hip")},
        knee{s.find_joint("left_knee"), s.find_joint("right_knee")},
        shoulder{s.find_joint("left_shoulder"), s.find_joint("right_shoulder")},
        elbow{s.find_joint("left_elbow"), s.find_joint("right_elbow")} {}
};

body::Pose to_pose(const body::Skeleton& skel, const JointIds& ids, const BodyParams& b) {
  const Vec3 y = Vec3::UnitY();
  body::Pose pose = body::Pose::rest(skel, b.root);
  pose.set_root_rotation(body::matrix_to_rot6d(body::axis_angle(Vec3::UnitZ(), b.heading)));
  pose.set_local_rotation(ids.spine1, body::matrix_to_rot6d(body::axis_angle(y, b.lean)));
  for (int s = 0; s < 2; ++s) {
    pose.set_local_rotation(ids.hip[s], body::matrix_to_rot6d(body::axis_angle(y, -b.hip[s])));
    pose.set_local_rotation(ids.knee[s], body::matrix_to_rot6d(body::axis_angle(y, b.knee[s])));
    pose.set_local_rotation(ids.shoulder[s], body::matrix_to_rot6d(body::axis_angle(y, -b.shoulder[s])));
    pose.set_local_rotation(ids.elbow[s], body::matrix_to_rot6d(body::axis_angle(y, -b.elbow[s])));
  }
  return pose;
}

// Straight-legged gait at phase `phase` with hip amplitude `amp`. The pelvis
// height keeps the lower foot 1 cm above the floor.
void apply_gait(BodyParams& b, double phase, double amp) {
  const double a = amp * std::sin(phase);
  b.hip[0] = a;
  b.hip[1] = -a;
  // Swing-leg knee flexes only while that thigh is behind the body.
  b.knee[0] = 2.0 * amp * 2.0 * std::max(0.0, std::cos(phase)) * std::max(0.0, -std::sin(phase));
  b.knee[1] = 2.0 * amp * 2.0 * std::max(0.0, -std::cos(phase)) * std::max(0.0, std::sin(phase));
  b.shoulder[0] = -0.8 * a;
  b.shoulder[1] = 0.8 * a;
  b.root.z() = 0.13 + 0.84 * std::cos(a);
}

constexpr double kGaitCycle = 1.1;  // metres per two steps
constexpr double kGaitAmplitude = 0.33;

double gait_amplitude(double speed) { return kGaitAmplitude * std::min(1.0, speed / 1.2); }

// ---- motion generators ----------------------------------------------------

using Frames = std::vector<BodyParams>;

struct PathTable {
  std::vector<Vec3> points;
  std::vector<double> arc;

  Vec3 at(double s, Vec3* tangent) const {
    const auto it = std::upper_bound(arc.begin(), arc.end(), s);
    std::size_t i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - arc.begin(), 1, arc.size() - 1));
    const double seg = arc[i] - arc[i - 1];
    const double w = seg > 0 ? std::clamp((s - arc[i - 1]) / seg, 0.0, 1.0) : 0.0;
    if (tangent) *tangent = (points[i] - points[i - 1]).normalized();
    return points[i - 1] + w * (points[i] - points[i - 1]);
  }
  double length() const { return arc.back(); }
};

PathTable bezier_table(const Vec3& a, const Vec3& c, const Vec3& b) {
  PathTable t;
  const int n = 400;
  for (int i = 0; i <= n; ++i) {
    const double u = static_cast<double>(i) / n;
    t.points.push_back((1 - u) * (1 - u) * a + 2 * u * (1 - u) * c + u * u * b);
    t.arc.push_back(i == 0 ? 0.0 : t.arc.back() + (t.points[i] - t.points[i - 1]).norm());
  }
  return t;
}

bool inside_room(const Vec3& p, double half, double margin) {
  return std::abs(p.x()) <= half - margin && std::abs(p.y()) <= half - margin;
}

bool walk_around(const RoomLayout& room, const SyntheticConfig& cfg, std::mt19937_64& rng, Frames& out) {
  if (room.obstacles.empty()) return false;
  const Obstacle& o = room.obstacles[pick(rng, static_cast<int>(room.obstacles.size()))];
  const double theta = uniform(rng, 0.0, 2.0 * kPi);
  const Vec3 dir(std::cos(theta), std::sin(theta), 0.0);
  const Vec3 perp(-dir.y(), dir.x(), 0.0);
  const double side = uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0;
  const Vec3 start = o.center + uniform(rng, 1.4, 2.2) * dir;
  const Vec3 goal = o.center - uniform(rng, 1.4, 2.2) * dir;
  const Vec3 ctrl = o.center + side * 2.0 * (o.footprint_radius() + uniform(rng, 0.5, 0.7)) * perp;
  if (!inside_room(start, room.half_size, 0.5) || !inside_room(goal, room.half_size, 0.5)) return false;
  const PathTable path = bezier_table(start, ctrl, goal);
  const double speed = uniform(rng, 0.9, 1.3);
  const double span = speed * (cfg.length() - 1) / cfg.fps;
  if (path.length() < span) return false;
  const double s0 = uniform(rng, 0.0, path.length() - span);
  const double phase0 = uniform(rng, 0.0, 2.0 * kPi);
  out.clear();
  for (int i = 0; i < cfg.length(); ++i) {
    const double s = s0 + speed * i / cfg.fps;
    Vec3 tangent;
    const Vec3 p = path.at(s, &tangent);
    BodyParams b;
    b.heading = std::atan2(tangent.y(), tangent.x());
    b.lean = 0.05;
    apply_gait(b, phase0 + 2.0 * kPi * s / kGaitCycle, gait_amplitude(speed));
    b.root.x() = p.x();
    b.root.y() = p.y();
    if (!inside_room(b.root, room.half_size, 0.45)) return false;
    out.push_back(b);
  }
  return true;
}

// Two-link leg inverse kinematics in the sagittal plane: hip flexion and
// knee flexion that put the ankle at `forward`, `down` from the hip.
void leg_ik(double forward, double down, double& hip, double& knee) {
  const double reach = 0.84;
  const double d = std::min(std::hypot(forward, down), reach - 1e-9);
  const double beta = std::atan2(forward, down);
  const double alpha = std::acos(d / reach);
  hip = beta + alpha;
  knee = 2.0 * alpha;
}

bool sit_down(const RoomLayout& room, const SyntheticConfig& cfg, std::mt19937_64& rng, Frames& out) {
  const Vec3 f = room.seat_front;
  const double seat_top = room.seat.height();
  const Vec3 seated = room.seat.center - 0.075 * f;
  const Vec3 standing = seated + 0.42 * f;
  const double z_seated = seat_top + 0.16, z_standing = 0.97;
  const double onset = uniform(rng, 0.1, 0.45);
  const double duration = uniform(rng, 0.9, 1.3);
  const double heading = std::atan2(f.y(), f.x());
  const double sway = uniform(rng, -0.05, 0.05);
  out.clear();
  for (int i = 0; i < cfg.length(); ++i) {
    const double t = i / cfg.fps;
    const double s = smoothstep((t - onset) / duration);
    BodyParams b;
    b.heading = heading + sway * (1.0 - s);
    const Vec3 p = standing + s * (seated - standing);
    b.root = Vec3(p.x(), p.y(), z_standing + s * (z_seated - z_standing));
    b.lean = 0.45 * std::sin(kPi * s) + 0.1 * s;
    // Feet stay where the seated shins hang.
    const double forward = 0.42 - (p - seated).dot(f);
    const double down = b.root.z() - 0.07 - 0.06;
    double hip = 0.0, knee = 0.0;
    leg_ik(forward, down, hip, knee);
    b.hip[0] = b.hip[1] = hip;
    b.knee[0] = b.knee[1] = knee;
    b.shoulder[0] = b.shoulder[1] = 0.3 * std::sin(kPi * s);
    out.push_back(b);
  }
  return true;
}

bool reach_wall(const RoomLayout& room, const SyntheticConfig& cfg, std::mt19937_64& rng, Frames& out) {
  static const Vec3 normals[4] = {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(), -Vec3::UnitY()};
  const Vec3 n = normals[pick(rng, 4)];  // into the room from the wall
  const Vec3 lateral(-n.y(), n.x(), 0.0);
  const double h = room.half_size;
  const double offset = uniform(rng, -h + 0.7, h - 0.7);
  const double stop = uniform(rng, 0.60, 0.70);
  const double speed = uniform(rng, 0.8, 1.2);
  const double brake = 0.5;
  const double brake_time = 2.0 * brake / speed;
  const double t_stop = uniform(rng, 0.6, 1.3);
  const int arm = pick(rng, 2);
  const double phase0 = uniform(rng, 0.0, 2.0 * kPi);
  const Vec3 wall_point = -h * n + offset * lateral;
  const double start_dist = stop + brake + speed * std::max(0.0, t_stop - brake_time);
  out.clear();
  for (int i = 0; i < cfg.length(); ++i) {
    const double t = i / cfg.fps;
    double remaining = 0.0, v = 0.0;
    if (t >= t_stop) {
      remaining = 0.0;
    } else if (t >= t_stop - brake_time) {
      const double left = t_stop - t;
      remaining = 0.5 * (speed / brake_time) * left * left;
      v = speed * left / brake_time;
    } else {
      remaining = brake + speed * (t_stop - brake_time - t);
      v = speed;
    }
    const double travelled = start_dist - stop - remaining;
    BodyParams b;
    b.heading = std::atan2(-n.y(), -n.x());
    b.lean = 0.05;
    apply_gait(b, phase0 + 2.0 * kPi * travelled / kGaitCycle, gait_amplitude(v));
    const Vec3 p = wall_point + (stop + remaining) * n;
    b.root.x() = p.x();
    b.root.y() = p.y();
    const double raise = smoothstep((t - (t_stop - 0.6)) / 0.8);
    b.shoulder[arm] = (1.0 - raise) * b.shoulder[arm] + raise * 0.48 * kPi;
    b.elbow[arm] = (1.0 - raise) * 0.2;
    out.push_back(b);
  }
  return inside_room(out.front().root, h, 0.45);
}

// ---- sample assembly ------------------------------------------------------

double quantize(double v) { return static_cast<double>(static_cast<float>(v)); }

double box_sdf(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  const Vec3 c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  const Vec3 d = (q - c).cwiseAbs() - h;
  return d.cwiseMax(0.0).norm() + std::min(d.maxCoeff(), 0.0);
}

double obstacle_sdf(const Obstacle& o, const Vec3& q) {
  if (!o.cylinder) {
    return box_sdf(q, Vec3(o.center.x() - o.half.x(), o.center.y() - o.half.y(), 0.0),
                   Vec3(o.center.x() + o.half.x(), o.center.y() + o.half.y(), o.height()));
  }
  const double radial = std::hypot(q.x() - o.center.x(), q.y() - o.center.y()) - o.half.x();
  const double axial = std::abs(q.z() - o.half.z()) - o.half.z();
  return std::hypot(std::max(radial, 0.0), std::max(axial, 0.0)) + std::min(std::max(radial, axial), 0.0);
}

// Exact distance to the union of the room's primitives. The faceted
// cylinders are inscribed in the analytic ones, so this never understates
// clearance.
double room_sdf(const RoomLayout& room, const Vec3& q) {
  const double h = room.half_size, t = 0.2, wall = 2.5;
  double d = box_sdf(q, Vec3(-h - t, -h - t, -t), Vec3(h + t, h + t, 0.0));
  d = std::min(d, box_sdf(q, Vec3(-h - t, -h - t, 0.0), Vec3(-h, h + t, wall)));
  d = std::min(d, box_sdf(q, Vec3(h, -h - t, 0.0), Vec3(h + t, h + t, wall)));
  d = std::min(d, box_sdf(q, Vec3(-h, -h - t, 0.0), Vec3(h, -h, wall)));
  d = std::min(d, box_sdf(q, Vec3(-h, h, 0.0), Vec3(h, h + t, wall)));
  for (const auto& o : room.obstacles) d = std::min(d, obstacle_sdf(o, q));
  return std::min(d, obstacle_sdf(room.seat, q));
}

bool clear_of_scene(const RoomLayout& room, const body::Skeleton& skel,
                    const std::vector<body::SurfaceAnchor>& probe, const body::MotionSequence& motion) {
  for (const auto& pose : motion.frames) {
    const Points pts = body::place_anchors(body::forward_kinematics_state(skel, pose), probe);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      if (room_sdf(room, pts.row(i).transpose()) < 0.0) return false;
    }
  }
  return true;
}

Sample make_sample(const SyntheticDataset& ds, Split split, int index, std::uint64_t seed,
                   const std::vector<body::SurfaceAnchor>& probe) {
  const SyntheticConfig& cfg = ds.config;
  std::mt19937_64 rng(stream_seed(seed, 10 + static_cast<std::uint64_t>(split), static_cast<std::uint64_t>(index)));
  const int first = split == Split::TestUnseen ? cfg.seen_layouts : 0;
  const int count = split == Split::TestUnseen ? cfg.unseen_layouts : cfg.seen_layouts;
  const JointIds ids(ds.skeleton);
  const std::vector<body::SurfaceAnchor> markers = body::marker_anchors(ds.skeleton);

  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    Sample s;
    s.split = split;
    s.index = index;
    s.layout = first + pick(rng, count);
    s.kind = static_cast<MotionKind>((index + attempt / 20) % 3);
    const RoomLayout& room = ds.layouts[static_cast<std::size_t>(s.layout)];
    Frames frames;
    bool ok = false;
    switch (s.kind) {
      case MotionKind::WalkAround: ok = walk_around(room, cfg, rng, frames); break;
      case MotionKind::SitDown: ok = sit_down(room, cfg, rng, frames); break;
      case MotionKind::ReachWall: ok = reach_wall(room, cfg, rng, frames); break;
    }
    if (!ok) continue;

    body::MotionSequence world;
    world.fps = cfg.fps;
    for (const auto& b : frames) world.frames.push_back(to_pose(ds.skeleton, ids, b));
    if (!clear_of_scene(room, ds.skeleton, probe, world)) continue;

    s.origin = world.frames[static_cast<std::size_t>(cfg.T - 1)].translation();
    s.motion.fps = cfg.fps;
    for (const auto& pose : world.frames) {
      VecX v = pose.vector();
      v.head<3>() -= s.origin;
      for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = quantize(v[i]);
      s.motion.frames.emplace_back(std::move(v));
    }
    s.volume = geometry::voxelize_sdf(geometry::translated(room.mesh, -s.origin),
                                      geometry::GridSpec::around(Vec3::Zero(), cfg.crop_radius, cfg.grid));
    bool clearance = true;
    for (const auto& pose : s.motion.frames) {
      const Points m = body::place_anchors(body::forward_kinematics_state(ds.skeleton, pose), markers);
      for (Eigen::Index i = 0; i < m.rows() && clearance; ++i) {
        clearance = geometry::sample_sdf(s.volume, m.row(i).transpose()) >= -0.01;
      }
    }
    if (!clearance) continue;
    s.attempts = attempt + 1;
    s.distances = distance::sequence_distances(s.volume, ds.basis, ds.skeleton, s.motion,
                                               {cfg.surface_density, 1});
    // Stored as f32 on disk; keep memory and disk copies identical.
    s.distances.D = s.distances.D.unaryExpr(&quantize);
    s.distances.B = s.distances.B.unaryExpr(&quantize);
    return s;
  }
  fail(ErrorCode::InvalidCount, std::string("could not place a collision-free motion for ") + split_name(split) +
                                    " sample " + std::to_string(index));
}

} // namespace

// ---- public ---------------------------------------------------------------

double Obstacle::footprint_radius() const { return cylinder ? half.x() : std::hypot(half.x(), half.y()); }

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

RoomLayout make_layout(int id, std::uint64_t seed, double half_size) {
  std::mt19937_64 rng(stream_seed(seed, 1, static_cast<std::uint64_t>(id)));
  RoomLayout room;
  room.id = id;
  room.half_size = half_size;

  // Seat: axis-aligned, front facing the room centre's dominant axis.
  const double lim = half_size - 1.3;
  room.seat.center = Vec3(uniform(rng, -lim, lim), uniform(rng, -lim, lim), 0.0);
  const Vec3 to_center = -room.seat.center;
  room.seat_front = std::abs(to_center.x()) >= std::abs(to_center.y())
                        ? Vec3(to_center.x() >= 0 ? 1.0 : -1.0, 0, 0)
                        : Vec3(0, to_center.y() >= 0 ? 1.0 : -1.0, 0);
  const double depth = 0.225, width = 0.25;
  const bool along_x = room.seat_front.x() != 0.0;
  room.seat.half = Vec3(along_x ? depth : width, along_x ? width : depth, 0.5 * uniform(rng, 0.40, 0.46));

  // Keep-out discs: the seat with the space in front of it, then obstacles.
  std::vector<std::pair<Vec3, double>> keep_out = {{room.seat.center + 0.35 * room.seat_front, 0.75}};
  const int count = 1 + pick(rng, 3);
  int guard = 0;
  while (static_cast<int>(room.obstacles.size()) < count && guard++ < 1000) {
    Obstacle o;
    o.cylinder = uniform(rng, 0.0, 1.0) < 0.4;
    const double r = uniform(rng, 0.15, 0.4);
    o.half = o.cylinder ? Vec3(r, r, 0.5 * uniform(rng, 0.5, 1.2))
                        : Vec3(r, uniform(rng, 0.15, 0.4), 0.5 * uniform(rng, 0.5, 1.2));
    const double olim = half_size - 1.0;
    o.center = Vec3(uniform(rng, -olim, olim), uniform(rng, -olim, olim), 0.0);
    bool free = true;
    for (const auto& [c, rad] : keep_out) free = free && (o.center - c).norm() > rad + o.footprint_radius() + 1.0;
    if (!free) continue;
    keep_out.emplace_back(o.center, o.footprint_radius());
    room.obstacles.push_back(o);
  }
  room.mesh = room_mesh(room);
  return room;
}

const char* motion_kind_name(MotionKind kind) {
  switch (kind) {
    case MotionKind::WalkAround: return "walk-around-obstacle";
    case MotionKind::SitDown: return "sit-down";
    case MotionKind::ReachWall: return "reach-toward-wall";
  }
  return "unknown";
}

const char* split_name(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::TestSeen: return "test-seen";
    case Split::TestUnseen: return "test-unseen";
  }
  return "unknown";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "test-seen") return Split::TestSeen;
  if (name == "test-unseen") return Split::TestUnseen;
  fail(ErrorCode::FormatError, "unknown split " + name);
}

const std::vector<Sample>& SyntheticDataset::split(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::TestSeen: return test_seen;
    case Split::TestUnseen: return test_unseen;
  }
  return train;
}

std::string config_to_json(const SyntheticConfig& c) {
  json j = {{"train", c.train},
            {"test_seen", c.test_seen},
            {"test_unseen", c.test_unseen},
            {"seen_layouts", c.seen_layouts},
            {"unseen_layouts", c.unseen_layouts},
            {"T", c.T},
            {"U", c.U},
            {"fps", c.fps},
            {"markers", c.markers},
            {"basis_points", c.basis_points},
            {"basis_radius", c.basis_radius},
            {"crop_radius", c.crop_radius},
            {"grid", c.grid},
            {"surface_density", c.surface_density},
            {"room_half_size", c.room_half_size},
            {"max_attempts", c.max_attempts}};
  return j.dump(2);
}

SyntheticConfig synthetic_config_from_json(const std::string& text) {
  SyntheticConfig c;
  const json j = json::parse(text);
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("train", c.train);
  get("test_seen", c.test_seen);
  get("test_unseen", c.test_unseen);
  get("seen_layouts", c.seen_layouts);
  get("unseen_layouts", c.unseen_layouts);
  get("T", c.T);
  get("U", c.U);
  get("fps", c.fps);
  get("markers", c.markers);
  get("basis_points", c.basis_points);
  get("basis_radius", c.basis_radius);
  get("crop_radius", c.crop_radius);
  get("grid", c.grid);
  get("surface_density", c.surface_density);
  get("room_half_size", c.room_half_size);
  get("max_attempts", c.max_attempts);
  return c;
}

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed, int jobs) {
  if (cfg.train < 0 || cfg.test_seen < 0 || cfg.test_unseen < 0 || cfg.seen_layouts < 1 ||
      (cfg.test_unseen > 0 && cfg.unseen_layouts < 1) || cfg.T < 1 || cfg.U < 1) {
    fail(ErrorCode::InvalidCount, "invalid synthetic dataset configuration");
  }
  SyntheticDataset ds;
  ds.config = cfg;
  ds.seed = seed;
  ds.skeleton = body::default_skeleton(cfg.markers);
  ds.basis = distance::fibonacci_basis(cfg.basis_points, cfg.basis_radius);
  for (int i = 0; i < cfg.seen_layouts + cfg.unseen_layouts; ++i) {
    ds.layouts.push_back(make_layout(i, seed, cfg.room_half_size));
  }
  const auto probe = body::surface_anchors(ds.skeleton, 400.0);

  struct Job {
    Split split;
    int index;
  };
  std::vector<Job> work;
  for (int i = 0; i < cfg.train; ++i) work.push_back({Split::Train, i});
  for (int i = 0; i < cfg.test_seen; ++i) work.push_back({Split::TestSeen, i});
  for (int i = 0; i < cfg.test_unseen; ++i) work.push_back({Split::TestUnseen, i});
  std::vector<Sample> samples(work.size());
  parallel_for(work.size(), jobs,
               [&](std::size_t k) { samples[k] = make_sample(ds, work[k].split, work[k].index, seed, probe); });
  for (auto& s : samples) {
    switch (s.split) {
      case Split::Train: ds.train.push_back(std::move(s)); break;
      case Split::TestSeen: ds.test_seen.push_back(std::move(s)); break;
      case Split::TestUnseen: ds.test_unseen.push_back(std::move(s)); break;
    }
  }
  return ds;
}

// ---- storage --------------------------------------------------------------

namespace {

json obstacle_json(const Obstacle& o) {
  return {{"cylinder", o.cylinder}, {"center", vec_json(o.center)}, {"half", vec_json(o.half)}};
}

Obstacle json_obstacle(const json& j) {
  Obstacle o;
  o.cylinder = j.at("cylinder").get<bool>();
  o.center = json_vec(j.at("center"));
  o.half = json_vec(j.at("half"));
  return o;
}

std::string sample_stem(const Sample& s) {
  std::ostringstream os;
  os << split_name(s.split) << "_" << std::setw(4) << std::setfill('0') << s.index;
  return os.str();
}

} // namespace

void write_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir / "layouts", ec);
  fs::create_directories(dir / "samples", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  json j;
  j["seed"] = ds.seed;
  j["config"] = json::parse(config_to_json(ds.config));
  j["layouts"] = json::array();
  for (const auto& room : ds.layouts) {
    json r = {{"id", room.id}, {"half_size", room.half_size}, {"seat", obstacle_json(room.seat)},
              {"seat_front", vec_json(room.seat_front)}, {"obstacles", json::array()}};
    for (const auto& o : room.obstacles) r["obstacles"].push_back(obstacle_json(o));
    j["layouts"].push_back(r);
    std::ostringstream name;
    name << "layout_" << std::setw(2) << std::setfill('0') << room.id << ".obj";
    geometry::write_obj(room.mesh, dir / "layouts" / name.str());
  }
  j["samples"] = json::array();
  for (Split split : {Split::Train, Split::TestSeen, Split::TestUnseen}) {
    for (const auto& s : ds.split(split)) {
      const std::string stem = sample_stem(s);
      j["samples"].push_back({{"split", split_name(s.split)},
                              {"index", s.index},
                              {"layout", s.layout},
                              {"kind", motion_kind_name(s.kind)},
                              {"origin", vec_json(s.origin)},
                              {"stem", stem}});
      geometry::write_mdsf(s.volume, dir / "samples" / (stem + ".mdsf"));
      body::write_mdms(s.motion, dir / "samples" / (stem + ".mdms"));
      distance::write_mdds(s.distances, dir / "samples" / (stem + ".mdds"));
    }
  }
  std::ofstream out(dir / "dataset.json");
  out << j.dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "cannot write dataset.json");
  body::write_skeleton_json(ds.skeleton, dir / "skeleton.json");
  distance::write_basis_csv(ds.basis, dir / "basis.csv");
}

SyntheticDataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream in(dir / "dataset.json");
  if (!in) fail(ErrorCode::IoError, "cannot open " + (dir / "dataset.json").string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::FormatError, std::string("dataset.json: ") + e.what());
  }
  SyntheticDataset ds;
  ds.seed = j.at("seed").get<std::uint64_t>();
  ds.config = synthetic_config_from_json(j.at("config").dump());
  ds.skeleton = body::read_skeleton_json(dir / "skeleton.json");
  ds.basis = distance::fibonacci_basis(ds.config.basis_points, ds.config.basis_radius);
  for (const auto& r : j.at("layouts")) {
    RoomLayout room;
    room.id = r.at("id").get<int>();
    room.half_size = r.at("half_size").get<double>();
    room.seat = json_obstacle(r.at("seat"));
    room.seat_front = json_vec(r.at("seat_front"));
    for (const auto& o : r.at("obstacles")) room.obstacles.push_back(json_obstacle(o));
    room.mesh = room_mesh(room);
    ds.layouts.push_back(std::move(room));
  }
  for (const auto& e : j.at("samples")) {
    Sample s;
    s.split = split_from_name(e.at("split").get<std::string>());
    s.index = e.at("index").get<int>();
    s.layout = e.at("layout").get<int>();
    const std::string kind = e.at("kind").get<std::string>();
    for (MotionKind k : {MotionKind::WalkAround, MotionKind::SitDown, MotionKind::ReachWall}) {
      if (kind == motion_kind_name(k)) s.kind = k;
    }
    s.origin = json_vec(e.at("origin"));
    const std::string stem = e.at("stem").get<std::string>();
    s.volume = geometry::read_mdsf(dir / "samples" / (stem + ".mdsf"));
    s.motion = body::read_mdms(dir / "samples" / (stem + ".mdms"));
    s.distances = distance::read_mdds(dir / "samples" / (stem + ".mdds"));
    switch (s.split) {
      case Split::Train: ds.train.push_back(std::move(s)); break;
      case Split::TestSeen: ds.test_seen.push_back(std::move(s)); break;
      case Split::TestUnseen: ds.test_unseen.push_back(std::move(s)); break;
    }
  }
  return ds;
}

} // namespace mdkit::train
