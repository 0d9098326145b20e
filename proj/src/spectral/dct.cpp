#include "mdkit/spectral/dct.hpp"

#include "mdkit/error.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace mdkit::spectral {

DctBasis::DctBasis(int length) {
  if (length < 1) fail(ErrorCode::InvalidLength, "DCT length must be at least 1");
  const int L = length;
  matrix_.resize(L, L);
  const double scale = std::sqrt(2.0 / L);
  for (int l = 0; l < L; ++l) {
    const double norm = l == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
    for (int t = 0; t < L; ++t) {
      matrix_(l, t) = scale * norm * std::cos(std::numbers::pi / (2.0 * L) * (2.0 * t + 1.0) * l);
    }
  }
}

std::shared_ptr<const DctBasis> dct_basis(int length) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const DctBasis>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[length];
  if (!slot) slot = std::make_shared<const DctBasis>(length);
  return slot;
}

VecX dct(const VecX& seq) { return dct_basis(static_cast<int>(seq.size()))->matrix() * seq; }

VecX idct(const VecX& coeffs) {
  return dct_basis(static_cast<int>(coeffs.size()))->matrix().transpose() * coeffs;
}

VecX dct(const DctBasis& basis, const VecX& seq) {
  if (seq.size() != basis.length()) fail(ErrorCode::LengthMismatch, "sequence length differs from basis");
  return basis.matrix() * seq;
}

VecX idct(const DctBasis& basis, const VecX& coeffs) {
  if (coeffs.size() != basis.length()) fail(ErrorCode::LengthMismatch, "coefficient count differs from basis");
  return basis.matrix().transpose() * coeffs;
}

MatX dct_rows(const MatX& seq) {
  return seq * dct_basis(static_cast<int>(seq.cols()))->matrix().transpose();
}

MatX idct_rows(const MatX& coeffs) {
  return coeffs * dct_basis(static_cast<int>(coeffs.cols()))->matrix();
}

MatX pad_history(const MatX& seq, int horizon) {
  if (seq.cols() < 1) fail(ErrorCode::EmptyHistory, "history has no frames");
  if (horizon < 0) fail(ErrorCode::InvalidLength, "horizon must be non-negative");
  MatX out(seq.rows(), seq.cols() + horizon);
  out.leftCols(seq.cols()) = seq;
  for (int u = 0; u < horizon; ++u) out.col(seq.cols() + u) = seq.col(seq.cols() - 1);
  return out;
}

} // namespace mdkit::spectral
