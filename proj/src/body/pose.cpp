#include "mdkit/body/pose.hpp"

#include "mdkit/body/skeleton.hpp"
#include "mdkit/error.hpp"
#include "mdkit/io/binary.hpp"

namespace mdkit::body {

Pose Pose::rest(const Skeleton& skeleton, const Vec3& t) {
  VecX data = VecX::Zero(skeleton.pose_dim());
  Rot6 identity;
  identity << 1, 0, 0, 0, 1, 0;
  data.head<3>() = t;
  for (int j = 0; j < skeleton.joint_count(); ++j) data.segment<6>(3 + 6 * j) = identity;
  return Pose(std::move(data));
}

MotionSequence MotionSequence::slice(int begin, int count) const {
  MotionSequence out;
  out.fps = fps;
  out.frames.assign(frames.begin() + begin, frames.begin() + begin + count);
  return out;
}

MatX MotionSequence::matrix() const {
  MatX m(pose_dim(), length());
  for (int t = 0; t < length(); ++t) m.col(t) = frames[t].vector();
  return m;
}

void write_mdms(const MotionSequence& motion, const std::filesystem::path& path) {
  io::BinaryWriter out(path);
  out.magic("MDMS");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(motion.length()));
  out.u32(static_cast<std::uint32_t>(motion.pose_dim()));
  out.f32(static_cast<float>(motion.fps));
  for (const auto& pose : motion.frames) {
    for (int i = 0; i < pose.dim(); ++i) out.f32(static_cast<float>(pose.vector()[i]));
  }
  out.close();
}

MotionSequence read_mdms(const std::filesystem::path& path) {
  io::BinaryReader in(path);
  in.expect_magic("MDMS");
  if (in.u32() != 1) fail(ErrorCode::FormatError, "unsupported MDMS version");
  const auto frames = in.u32();
  const auto dim = in.u32();
  MotionSequence motion;
  motion.fps = in.f32();
  for (std::uint32_t f = 0; f < frames; ++f) {
    VecX v(dim);
    for (std::uint32_t i = 0; i < dim; ++i) v[i] = in.f32();
    motion.frames.emplace_back(std::move(v));
  }
  in.expect_end();
  return motion;
}

} // namespace mdkit::body
