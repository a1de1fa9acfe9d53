#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "pabs/error.hpp"
#include "pabs/regression.hpp"

using namespace pabs;

namespace {

AffineMap map_of(double a00, double a01, double a10, double a11, double b0, double b1) {
  AffineMap m;
  m.A << a00, a01, a10, a11;
  m.b << b0, b1;
  return m;
}

std::vector<PerceptPair> generate(const AffineMap& m, int n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.2, 1.2), psi(-0.26, 0.26), e(-noise, noise);
  std::vector<PerceptPair> out;
  for (int i = 0; i < n; ++i) {
    const Percept t{d(rng), psi(rng)};
    Percept z = m.apply(t);
    if (noise > 0) z.d += e(rng), z.psi += e(rng);
    out.push_back({t, z});
  }
  return out;
}

double max_abs_diff(const AffineMap& a, const AffineMap& b) {
  return std::max((a.A - b.A).cwiseAbs().maxCoeff(), (a.b - b.b).cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Regression, RecoversExactMap) {
  const AffineMap truth = map_of(1, 0, 0, 1, 0.05, -0.02);
  const AffineMap fit = fit_affine(generate(truth, 10, 0, 1));
  EXPECT_LE(max_abs_diff(fit, truth), 1e-9);
  const AffineMap skew = map_of(0.97, 0.04, -0.03, 1.02, -0.01, 0.03);
  EXPECT_LE(max_abs_diff(fit_affine(generate(skew, 50, 0, 2)), skew), 1e-9);
}

TEST(Regression, IdentityWhenPerceivedEqualsTruth) {
  EXPECT_LE(max_abs_diff(fit_affine(generate(AffineMap::identity(), 20, 0, 3)), AffineMap::identity()), 1e-9);
}

TEST(Regression, Degenerate) {
  std::vector<PerceptPair> same(10, {{0.3, 0.1}, {0.31, 0.1}});
  EXPECT_THROW(fit_affine(same, "cell (1, 2)"), DegenerateFit);
  try {
    fit_affine(same, "cell (1, 2)");
  } catch (const DegenerateFit& e) {
    EXPECT_EQ(e.context(), "cell (1, 2)");
  }
  EXPECT_THROW(fit_affine(generate(AffineMap::identity(), 2, 0, 4)), DegenerateFit);
  // collinear truths: rank 2
  std::vector<PerceptPair> line;
  for (int i = 0; i < 10; ++i) line.push_back({{0.1 * i, 0.2 * i}, {0.1 * i, 0.2 * i}});
  EXPECT_THROW(fit_affine(line), DegenerateFit);
}

TEST(Regression, ResidualOrthogonality) {
  const auto data = generate(map_of(0.95, 0.02, 0.01, 1.05, 0.04, -0.01), 400, 0.02, 5);
  const AffineMap fit = fit_affine(data);
  Eigen::Vector3d g0 = Eigen::Vector3d::Zero(), g1 = Eigen::Vector3d::Zero();
  double scale = 0;
  for (const auto& [t, z] : data) {
    const Percept f = fit.apply(t);
    const Eigen::Vector3d row(t.d, t.psi, 1.0);
    g0 += row * (z.d - f.d);
    g1 += row * (z.psi - f.psi);
    scale = std::max({scale, std::abs(z.d), std::abs(z.psi)});
  }
  const double tol = 1e-7 * scale * static_cast<double>(data.size());
  EXPECT_LE(g0.cwiseAbs().maxCoeff(), tol);
  EXPECT_LE(g1.cwiseAbs().maxCoeff(), tol);
}

TEST(Regression, OrderInvariant) {
  auto data = generate(map_of(1.01, 0, 0.02, 0.99, 0.05, 0), 100, 0.01, 6);
  const AffineMap a = fit_affine(data);
  std::reverse(data.begin(), data.end());
  std::shuffle(data.begin(), data.end(), std::mt19937_64(1));
  EXPECT_LE(max_abs_diff(a, fit_affine(data)), 1e-12);
}

TEST(Regression, MoreSamplesShrinkBiasError) {
  const AffineMap truth = map_of(1, 0, 0, 1, 0.05, -0.02);
  std::vector<double> small, large;
  for (int t = 0; t < 20; ++t) {
    small.push_back((fit_affine(generate(truth, 100, 0.05, 100 + t)).b - truth.b).norm());
    large.push_back((fit_affine(generate(truth, 400, 0.05, 200 + t)).b - truth.b).norm());
  }
  std::nth_element(small.begin(), small.begin() + 10, small.end());
  std::nth_element(large.begin(), large.begin() + 10, large.end());
  EXPECT_LT(large[10], small[10]);
}
