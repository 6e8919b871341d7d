// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Image and feature-distribution metrics: SSIM, FID, KID, DINO-I and the
/// perceptual-distance wrapper.

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vtedit/clients.hpp"
#include "vtedit/error.hpp"
#include "vtedit/image.hpp"
#include "vtedit/rng.hpp"

namespace vtedit {

// ---------------------------------------------------------------------------
// SSIM
// ---------------------------------------------------------------------------

struct SsimOptions {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Normalised 1-d Gaussian taps; the 2-d window is their outer product.
inline std::vector<double> gaussian_taps(int size, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double s = 0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-((i - c) * (i - c)) / (2 * sigma * sigma));
    s += g[i];
  }
  for (auto& v : g) v /= s;
  return g;
}

/// Window actually used for a w x h image: the configured size, shrunk to the
/// largest odd size that fits.
inline int effective_window(int w, int h, int configured) {
  int win = std::min({configured, w, h});
  if (win % 2 == 0) --win;
  return std::max(win, 1);
}

/// Mean SSIM over all fully-contained windows of the Rec.601 luma planes.
inline double ssim(const Image& a, const Image& b, const SsimOptions& opt = {}) {
  if (!a.same_size(b)) throw Error(Errc::resolution_mismatch, "ssim inputs differ in size");
  if (a.width <= 0 || a.height <= 0) throw Error(Errc::invalid_argument, "ssim of an empty image");
  if (opt.window < 1 || opt.sigma <= 0) throw Error(Errc::invalid_argument, "bad ssim window");
  const int w = a.width, h = a.height;
  const int win = effective_window(w, h, opt.window);
  const auto g = gaussian_taps(win, opt.sigma);
  const auto pa = luma(a), pb = luma(b);

  // Separable filtering of x, y, x^2, y^2, xy over valid positions.
  const int ow = w - win + 1, oh = h - win + 1;
  std::array<std::vector<double>, 5> rows;
  for (auto& r : rows) r.assign(static_cast<std::size_t>(ow) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s[5] = {0, 0, 0, 0, 0};
      for (int k = 0; k < win; ++k) {
        const auto i = static_cast<std::size_t>(y) * w + x + k;
        const double u = pa[i], v = pb[i];
        s[0] += g[k] * u;
        s[1] += g[k] * v;
        s[2] += g[k] * u * u;
        s[3] += g[k] * v * v;
        s[4] += g[k] * u * v;
      }
      for (int c = 0; c < 5; ++c) rows[c][static_cast<std::size_t>(y) * ow + x] = s[c];
    }
  }
  const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
  const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
  double total = 0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s[5] = {0, 0, 0, 0, 0};
      for (int k = 0; k < win; ++k) {
        const auto i = static_cast<std::size_t>(y + k) * ow + x;
        for (int c = 0; c < 5; ++c) s[c] += g[k] * rows[c][i];
      }
      const double mu_a = s[0], mu_b = s[1];
      const double var_a = s[2] - mu_a * mu_a, var_b = s[3] - mu_b * mu_b, cov = s[4] - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
    }
  }
  return total / (static_cast<double>(ow) * oh);
}

// ---------------------------------------------------------------------------
// Feature sets
// ---------------------------------------------------------------------------

struct FeatureSet {
  std::string extractor_id;
  Eigen::MatrixXd vectors;  // n x d

  Eigen::Index n() const { return vectors.rows(); }
  Eigen::Index d() const { return vectors.cols(); }

  static FeatureSet from_rows(const std::vector<std::vector<double>>& rows, std::string extractor_id = {}) {
    FeatureSet fs;
    fs.extractor_id = std::move(extractor_id);
    const auto d = rows.empty() ? 0 : rows.front().size();
    fs.vectors.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != d) throw Error(Errc::dimension_mismatch, "ragged feature rows");
      for (std::size_t j = 0; j < d; ++j) {
        if (!std::isfinite(rows[i][j])) throw Error(Errc::invalid_argument, "non-finite feature value");
        fs.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
    return fs;
  }
};

namespace detail {

inline void check_pair(const FeatureSet& p, const FeatureSet& q, const char* what) {
  if (p.d() != q.d()) {
    throw Error(Errc::dimension_mismatch, std::string(what) + ": dimensions " + std::to_string(p.d()) + " and " +
                                              std::to_string(q.d()));
  }
  if (!p.extractor_id.empty() && !q.extractor_id.empty() && p.extractor_id != q.extractor_id) {
    throw Error(Errc::dimension_mismatch, std::string(what) + ": features from different extractors");
  }
  if (p.n() < 2 || q.n() < 2) throw Error(Errc::invalid_argument, std::string(what) + " needs at least two vectors per set");
}

/// Eigenvalues of a symmetric PSD-in-theory matrix, with small negatives
/// (within 1e-8 of the spectrum scale) clamped to zero.
inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psd_eigen(const Eigen::MatrixXd& m, Eigen::VectorXd& values) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw Error(Errc::degenerate_covariance, "eigendecomposition failed");
  values = es.eigenvalues();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw Error(Errc::degenerate_covariance, "non-finite eigenvalue");
    if (values[i] < 0) {
      if (values[i] < -1e-8 * scale) throw Error(Errc::degenerate_covariance, "covariance is not positive semidefinite");
      values[i] = 0;
    }
  }
  return es;
}

inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& x, Eigen::RowVectorXd& mean) {
  mean = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - mean;
  return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

}  // namespace detail

/// Fréchet distance between Gaussian fits (sample mean, n-1 covariance).
inline double fid(const FeatureSet& p, const FeatureSet& q) {
  detail::check_pair(p, q, "fid");
  Eigen::RowVectorXd mp, mq;
  const Eigen::MatrixXd sp = detail::covariance(p.vectors, mp);
  const Eigen::MatrixXd sq = detail::covariance(q.vectors, mq);

  Eigen::VectorXd lp;
  const auto esp = detail::psd_eigen(sp, lp);
  const Eigen::MatrixXd root_p = esp.eigenvectors() * lp.cwiseSqrt().asDiagonal() * esp.eigenvectors().transpose();
  Eigen::MatrixXd m = root_p * sq * root_p;
  m = 0.5 * (m + m.transpose());
  Eigen::VectorXd lm;
  detail::psd_eigen(m, lm);
  const double tr_root = lm.cwiseSqrt().sum();

  const double value = (mp - mq).squaredNorm() + sp.trace() + sq.trace() - 2.0 * tr_root;
  if (!std::isfinite(value)) throw Error(Errc::degenerate_covariance, "fid is not finite");
  return std::max(0.0, value);
}

struct KidOptions {
  /// 0 uses every vector; otherwise rows drawn without replacement per subset.
  std::size_t subset_size = 0;
  std::size_t subsets = 1;
  std::uint64_t seed = 0;
  double scale = 100.0;
};

namespace detail {

/// Kernel sums accumulate in long double so small-set results are exact to
/// the last few bits of a double.
inline long double kernel_sum(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, bool skip_diagonal) {
  const double d = static_cast<double>(x.cols());
  long double total = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      if (skip_diagonal && i == j) continue;
      long double dot = 0;
      for (Eigen::Index t = 0; t < x.cols(); ++t) dot += static_cast<long double>(x(i, t)) * y(j, t);
      const long double v = dot / d + 1.0L;
      total += v * v * v;
    }
  }
  return total;
}

inline double mmd2_unbiased(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const long double m = static_cast<long double>(x.rows()), n = static_cast<long double>(y.rows());
  const long double v = kernel_sum(x, x, true) / (m * (m - 1)) + kernel_sum(y, y, true) / (n * (n - 1)) -
                        2.0L * kernel_sum(x, y, false) / (m * n);
  return static_cast<double>(v);
}

inline Eigen::MatrixXd sample_rows(const Eigen::MatrixXd& x, std::size_t k, SplitMix64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(x.rows()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_index(idx.size() - i)]);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(k), x.cols());
  for (std::size_t i = 0; i < k; ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

}  // namespace detail

/// Unbiased squared MMD with k(x, y) = (x.y / d + 1)^3, times `opt.scale`.
inline double kid(const FeatureSet& p, const FeatureSet& q, const KidOptions& opt = {}) {
  detail::check_pair(p, q, "kid");
  if (opt.subset_size == 0) return opt.scale * detail::mmd2_unbiased(p.vectors, q.vectors);
  if (opt.subset_size < 2 || opt.subsets == 0) throw Error(Errc::invalid_argument, "kid subsets need >= 2 rows");
  const auto k = opt.subset_size;
  if (static_cast<Eigen::Index>(k) > p.n() || static_cast<Eigen::Index>(k) > q.n()) {
    throw Error(Errc::invalid_argument, "kid subset larger than a feature set");
  }
  SplitMix64 rng(opt.seed);
  double total = 0;
  for (std::size_t s = 0; s < opt.subsets; ++s) {
    total += detail::mmd2_unbiased(detail::sample_rows(p.vectors, k, rng), detail::sample_rows(q.vectors, k, rng));
  }
  return opt.scale * total / static_cast<double>(opt.subsets);
}

// ---------------------------------------------------------------------------
// DINO-I and perceptual distances
// ---------------------------------------------------------------------------

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error(Errc::dimension_mismatch, "cosine of vectors with different dimensions");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) throw Error(Errc::zero_vector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double dino_i(const std::vector<double>& gen, const std::vector<double>& gt) { return cosine_similarity(gen, gt); }

/// Mean per-row cosine between paired rows.
inline double dino_i(const FeatureSet& gen, const FeatureSet& gt) {
  if (gen.d() != gt.d() || gen.n() != gt.n()) throw Error(Errc::dimension_mismatch, "dino_i needs paired rows");
  if (!gen.extractor_id.empty() && !gt.extractor_id.empty() && gen.extractor_id != gt.extractor_id) {
    throw Error(Errc::dimension_mismatch, "dino_i features from different extractors");
  }
  if (gen.n() == 0) throw Error(Errc::invalid_argument, "dino_i of empty sets");
  double s = 0;
  for (Eigen::Index i = 0; i < gen.n(); ++i) {
    const Eigen::RowVectorXd a = gen.vectors.row(i), b = gt.vectors.row(i);
    s += cosine_similarity(std::vector<double>(a.data(), a.data() + a.size()),
                           std::vector<double>(b.data(), b.data() + b.size()));
  }
  return s / static_cast<double>(gen.n());
}

inline double perceptual(PerceptualService* service, const ImageRef& ra, const Image& a, const ImageRef& rb,
                         const Image& b, PerceptualKind kind) {
  if (!service) throw Error(Errc::service_unavailable, "no perceptual service configured");
  if (!a.same_size(b)) throw Error(Errc::resolution_mismatch, "perceptual inputs differ in size");
  return service->distance(ra, a, rb, b, kind);
}

}  // namespace vtedit
