#pragma once

#include <span>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "pabs/models.hpp"

namespace pabs {

/// Center map z = A * z_truth + b.
struct AffineMap {
  Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();

  Percept apply(const Percept& truth) const {
    const Eigen::Vector2d v = A * Eigen::Vector2d(truth.d, truth.psi) + b;
    return {v(0), v(1)};
  }
  bool finite() const { return A.allFinite() && b.allFinite(); }

  static AffineMap identity() { return {}; }
};

/// (truth, perceived) pair.
using PerceptPair = std::pair<Percept, Percept>;

/// Least-squares fit of perceived ~ A * truth + b.
///
/// Solved with a column-pivoting QR factorization of the n x 3 design matrix
/// [d*, psi*, 1]. Throws DegenerateFit (tagged with `context`) for fewer than
/// three samples or a design of rank below three.
AffineMap fit_affine(std::span<const PerceptPair> samples, const std::string& context = {});

}  // namespace pabs
