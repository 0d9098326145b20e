#pragma once

#include "mdkit/types.hpp"

#include <memory>

namespace mdkit::spectral {

// Orthonormal DCT-II basis: row l holds cosine basis l for sequences of length L.
class DctBasis {
 public:
  explicit DctBasis(int length);

  int length() const { return static_cast<int>(matrix_.rows()); }
  const MatX& matrix() const { return matrix_; }

 private:
  MatX matrix_;
};

// Shared, cached basis for length L.
std::shared_ptr<const DctBasis> dct_basis(int length);

VecX dct(const VecX& seq);
VecX idct(const VecX& coeffs);

// Against an explicit basis; throws LengthMismatch on size disagreement.
VecX dct(const DctBasis& basis, const VecX& seq);
VecX idct(const DctBasis& basis, const VecX& coeffs);

// Row-wise transforms of a (rows × L) array: rows(seq) -> rows(coeffs).
MatX dct_rows(const MatX& seq);
MatX idct_rows(const MatX& coeffs);

// Replicates the last observed column `horizon` times.
MatX pad_history(const MatX& seq, int horizon);

} // namespace mdkit::spectral
