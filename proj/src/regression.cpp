#include "pabs/regression.hpp"

#include "pabs/error.hpp"

namespace pabs {

AffineMap fit_affine(std::span<const PerceptPair> samples, const std::string& context) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  if (n < 3) throw DegenerateFit(context, "need at least 3 samples, got " + std::to_string(n));

  Eigen::MatrixXd design(n, 3);
  Eigen::MatrixXd rhs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [truth, perceived] = samples[static_cast<std::size_t>(i)];
    design.row(i) << truth.d, truth.psi, 1.0;
    rhs.row(i) << perceived.d, perceived.psi;
  }
  if (!design.allFinite() || !rhs.allFinite()) throw DegenerateFit(context, "non-finite sample");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 3) throw DegenerateFit(context, "rank-deficient design (rank " + std::to_string(qr.rank()) + ")");
  const Eigen::MatrixXd coef = qr.solve(rhs);  // 3 x 2

  AffineMap map;
  map.A = coef.topRows<2>().transpose();
  map.b = coef.row(2).transpose();
  if (!map.finite()) throw DegenerateFit(context, "non-finite coefficients");
  return map;
}

}  // namespace pabs
