// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>

#include "generators.hpp"
#include "vtedit/metrics.hpp"
#include "vtedit/mock_backends.hpp"

namespace vtedit {
namespace {

using testing::random_image;

Errc error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

// Direct evaluation of the windowed SSIM definition: 2-d weights, centred moments.
double ssim_oracle(const Image& a, const Image& b, int win, double sigma) {
  auto gray = [](const Image& im, int x, int y) {
    return 0.299 * im.at(x, y, 0) + 0.587 * im.at(x, y, 1) + 0.114 * im.at(x, y, 2);
  };
  std::vector<std::vector<double>> w(win, std::vector<double>(win));
  double ws = 0;
  const double c = (win - 1) / 2.0;
  for (int i = 0; i < win; ++i) {
    for (int j = 0; j < win; ++j) {
      w[i][j] = std::exp(-((i - c) * (i - c) + (j - c) * (j - c)) / (2 * sigma * sigma));
      ws += w[i][j];
    }
  }
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double total = 0;
  int count = 0;
  for (int oy = 0; oy + win <= a.height; ++oy) {
    for (int ox = 0; ox + win <= a.width; ++ox) {
      double ma = 0, mb = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          ma += w[i][j] / ws * gray(a, ox + j, oy + i);
          mb += w[i][j] / ws * gray(b, ox + j, oy + i);
        }
      }
      double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < win; ++i) {
        for (int j = 0; j < win; ++j) {
          const double da = gray(a, ox + j, oy + i) - ma, db = gray(b, ox + j, oy + i) - mb;
          va += w[i][j] / ws * da * da;
          vb += w[i][j] / ws * db * db;
          cov += w[i][j] / ws * da * db;
        }
      }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / count;
}

TEST(Ssim, IdentityAndConstantImages) {
  SplitMix64 rng(1);
  auto x = random_image(rng, 20, 17);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-12);
  EXPECT_NEAR(ssim(Image(12, 12, 77), Image(12, 12, 77)), 1.0, 1e-12);
}

TEST(Ssim, MatchesSlidingWindowOracleOnSmallImages) {
  SplitMix64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_image(rng, 8, 8);
    auto b = a;
    for (auto& v : b.rgb) v = static_cast<std::uint8_t>(std::clamp<int>(v + static_cast<int>(rng.uniform_index(61)) - 30, 0, 255));
    // An 8x8 image cannot hold the 11x11 window; the largest odd fit is 7.
    EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b, 7, 1.5), 1e-9);
  }
  auto a = random_image(rng, 23, 19), b = random_image(rng, 23, 19);
  EXPECT_NEAR(ssim(a, b), ssim_oracle(a, b, 11, 1.5), 1e-9);
}

TEST(Ssim, RejectsDifferentResolutions) {
  EXPECT_EQ(error_of([] { ssim(Image(8, 8), Image(8, 9)); }), Errc::resolution_mismatch);
}

TEST(Ssim, StaysInRangeAndIsSymmetric) {
  SplitMix64 rng(3);
  for (int i = 0; i < 20; ++i) {
    auto a = random_image(rng, 14, 12), b = random_image(rng, 14, 12);
    const double s = ssim(a, b);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
    EXPECT_NEAR(s, ssim(b, a), 1e-12);
  }
}

FeatureSet random_set(SplitMix64& rng, int n, int d, double half_range = 2.0) {
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  for (auto& r : rows) {
    for (auto& v : r) v = (rng.uniform01() * 2 - 1) * half_range;
  }
  return FeatureSet::from_rows(rows);
}

TEST(Fid, IdenticalSetsAreZero) {
  SplitMix64 rng(4);
  auto x = random_set(rng, 60, 8);
  EXPECT_LE(fid(x, x), 1e-6);
  EXPECT_GE(fid(x, x), 0.0);
}

TEST(Fid, OneDimensionalClosedForm) {
  // Sample mean 0 / sd 1 against sample mean 1 / sd 2.
  auto a = FeatureSet::from_rows({{-1}, {0}, {1}});
  auto b = FeatureSet::from_rows({{-1}, {1}, {3}});
  const double oracle = std::pow(0.0 - 1.0, 2) + std::pow(1.0 - 2.0, 2);
  EXPECT_NEAR(fid(a, b), oracle, 1e-9);
  EXPECT_NEAR(oracle, 2.0, 0);
}

TEST(Fid, MeanShiftGivesSquaredShift) {
  SplitMix64 rng(5);
  auto a = random_set(rng, 40, 5);
  auto b = a;
  Eigen::RowVectorXd c(5);
  c << 0.5, -1.0, 2.0, 0.0, 0.25;
  b.vectors.rowwise() += c;
  EXPECT_NEAR(fid(a, b), c.squaredNorm(), 1e-6);
}

TEST(Fid, MatchesNonSymmetricEigenOracleAndIsSymmetric) {
  SplitMix64 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = random_set(rng, 30, 4), q = random_set(rng, 25, 4);
    Eigen::RowVectorXd mp = p.vectors.colwise().mean(), mq = q.vectors.colwise().mean();
    Eigen::MatrixXd cp = p.vectors.rowwise() - mp, cq = q.vectors.rowwise() - mq;
    Eigen::MatrixXd sp = cp.transpose() * cp / 29.0, sq = cq.transpose() * cq / 24.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(sp * sq);
    double tr = 0;
    for (Eigen::Index i = 0; i < 4; ++i) tr += std::sqrt(std::complex<double>(es.eigenvalues()[i])).real();
    const double oracle = (mp - mq).squaredNorm() + sp.trace() + sq.trace() - 2 * tr;
    EXPECT_NEAR(fid(p, q), oracle, 1e-9);
    EXPECT_NEAR(fid(p, q), fid(q, p), 1e-9);
  }
}

TEST(Fid, Preconditions) {
  SplitMix64 rng(7);
  EXPECT_EQ(error_of([&] { fid(random_set(rng, 5, 3), random_set(rng, 5, 4)); }), Errc::dimension_mismatch);
  EXPECT_EQ(error_of([&] { fid(random_set(rng, 1, 3), random_set(rng, 5, 3)); }), Errc::invalid_argument);
}

// Literal double sums over the kernel, accumulated in long double.
double kid_oracle(const FeatureSet& p, const FeatureSet& q) {
  const auto m = p.n(), n = q.n(), d = p.d();
  auto k = [&](const Eigen::MatrixXd& A, Eigen::Index i, const Eigen::MatrixXd& B, Eigen::Index j) {
    long double dot = 0;
    for (Eigen::Index t = 0; t < d; ++t) dot += static_cast<long double>(A(i, t)) * B(j, t);
    return std::pow(dot / static_cast<long double>(d) + 1.0L, 3);
  };
  long double xx = 0, yy = 0, xy = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (i != j) xx += k(p.vectors, i, p.vectors, j);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) yy += k(q.vectors, i, q.vectors, j);
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) xy += k(p.vectors, i, q.vectors, j);
  }
  return static_cast<double>(100.0L * (xx / (m * (m - 1)) + yy / (n * (n - 1)) - 2 * xy / (m * n)));
}

TEST(Kid, MatchesDoubleSumOnSmallSets) {
  SplitMix64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 2 + static_cast<int>(rng.uniform_index(9)), n = 2 + static_cast<int>(rng.uniform_index(9));
    const int d = 1 + static_cast<int>(rng.uniform_index(6));
    auto p = random_set(rng, m, d), q = random_set(rng, n, d);
    EXPECT_NEAR(kid(p, q), kid_oracle(p, q), 1e-12);
  }
}

TEST(Kid, ThreePointSetsInTwoDimensions) {
  auto p = FeatureSet::from_rows({{0, 0}, {1, 0}, {0, 1}});
  auto q = FeatureSet::from_rows({{1, 1}, {2, 0}, {-1, 1}});
  EXPECT_NEAR(kid(p, q), kid_oracle(p, q), 1e-12);
}

TEST(Kid, RowPermutationLeavesValueUnchanged) {
  SplitMix64 rng(9);
  auto p = random_set(rng, 9, 3), q = random_set(rng, 7, 3);
  auto shuffled = p;
  for (Eigen::Index i = p.n() - 1; i > 0; --i) {
    shuffled.vectors.row(i).swap(shuffled.vectors.row(static_cast<Eigen::Index>(rng.uniform_index(i + 1))));
  }
  EXPECT_NEAR(kid(p, q), kid(shuffled, q), 1e-12);
}

TEST(Kid, IdenticalSetsGiveTheDiagonalCorrection) {
  SplitMix64 rng(10);
  auto x = random_set(rng, 8, 3);
  const Eigen::MatrixXd k = ((x.vectors * x.vectors.transpose()).array() / 3.0 + 1.0).cube().matrix();
  const double n = 8;
  const double expected = 100.0 * (2 * (k.sum() - k.trace()) / (n * (n - 1)) - 2 * k.sum() / (n * n));
  EXPECT_NEAR(kid(x, x), expected, 1e-12);
}

TEST(Kid, SubsetAveragingIsDeterministic) {
  SplitMix64 rng(11);
  auto p = random_set(rng, 20, 3), q = random_set(rng, 20, 3);
  KidOptions opt;
  opt.subset_size = 10;
  opt.subsets = 5;
  opt.seed = 3;
  EXPECT_DOUBLE_EQ(kid(p, q, opt), kid(p, q, opt));
  opt.subset_size = 30;
  EXPECT_EQ(error_of([&] { kid(p, q, opt); }), Errc::invalid_argument);
  EXPECT_EQ(error_of([&] { kid(p, random_set(rng, 4, 2)); }), Errc::dimension_mismatch);
}

TEST(DinoI, CosineExamples) {
  EXPECT_DOUBLE_EQ(dino_i(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(dino_i(std::vector<double>{1, 0}, std::vector<double>{0, 5}), 0.0);
  EXPECT_EQ(error_of([] { dino_i(std::vector<double>{0, 0}, std::vector<double>{1, 1}); }), Errc::zero_vector);
  SplitMix64 rng(12);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(7), b(7);
    for (auto& v : a) v = rng.uniform01() - 0.5;
    for (auto& v : b) v = rng.uniform01() - 0.5;
    double dot = 0, na = 0, nb = 0;
    for (int k = 0; k < 7; ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
    EXPECT_NEAR(dino_i(a, b), dot / std::sqrt(na * nb), 1e-12);
  }
}

TEST(DinoI, BatchIsMeanOfPairs) {
  auto gen = FeatureSet::from_rows({{1, 0}, {1, 1}});
  auto gt = FeatureSet::from_rows({{1, 0}, {1, 0}});
  EXPECT_NEAR(dino_i(gen, gt), (1.0 + 1.0 / std::sqrt(2.0)) / 2.0, 1e-12);
}

TEST(Perceptual, MockProxyAndMissingService) {
  SplitMix64 rng(13);
  auto a = random_image(rng, 10, 10);
  MockPerceptual svc;
  EXPECT_DOUBLE_EQ(perceptual(&svc, {}, a, {}, a, PerceptualKind::lpips), 0.0);
  EXPECT_NEAR(perceptual(&svc, {}, a, {}, a, PerceptualKind::dists), 0.0, 1e-12);
  EXPECT_EQ(error_of([&] { perceptual(nullptr, {}, a, {}, a, PerceptualKind::lpips); }), Errc::service_unavailable);
}

}  // namespace
}  // namespace vtedit
