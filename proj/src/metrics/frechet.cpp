#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "pixcurate/errors.hpp"
#include "pixcurate/metrics.hpp"
#include "pixcurate/rng.hpp"

namespace pixcurate {

namespace {

using Matrix = Eigen::MatrixXd;
using MatrixMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

constexpr double kEigenTolerance = 1e-10;

Matrix symmetric_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw ValidationError("eigendecomposition failed");
  Eigen::VectorXd roots = solver.eigenvalues();
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    roots[i] = roots[i] > kEigenTolerance ? std::sqrt(roots[i]) : 0.0;
  }
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().transpose();
}

double trace_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw ValidationError("eigendecomposition failed");
  double t = 0.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    t += std::sqrt(std::max(solver.eigenvalues()[i], 0.0));
  }
  return t;
}

void check_stats(const GaussianStats& s) {
  if (s.mean.empty() || s.covariance.size() != s.mean.size() * s.mean.size()) {
    throw ValidationError("Gaussian stats have inconsistent dimensions");
  }
  for (const double v : s.mean) {
    if (!std::isfinite(v)) throw ValidationError("non-finite mean in Gaussian stats");
  }
  for (const double v : s.covariance) {
    if (!std::isfinite(v)) throw ValidationError("non-finite covariance in Gaussian stats");
  }
}

}  // namespace

GaussianStats gaussian_stats(const std::vector<std::vector<double>>& embeddings) {
  if (embeddings.size() < 2) throw ValidationError("Gaussian stats need at least two samples");
  const std::size_t dim = embeddings.front().size();
  if (dim == 0) throw ValidationError("embeddings must be non-empty");
  for (const auto& e : embeddings) {
    if (e.size() != dim) throw ValidationError("ragged embedding vectors");
  }
  const std::size_t n = embeddings.size();
  GaussianStats s;
  s.n = n;
  s.mean.assign(dim, 0.0);
  for (const auto& e : embeddings) {
    for (std::size_t i = 0; i < dim; ++i) s.mean[i] += e[i];
  }
  for (auto& m : s.mean) m /= static_cast<double>(n);
  s.covariance.assign(dim * dim, 0.0);
  for (const auto& e : embeddings) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double di = e[i] - s.mean[i];
      for (std::size_t j = i; j < dim; ++j) s.covariance[i * dim + j] += di * (e[j] - s.mean[j]);
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i; j < dim; ++j) {
      const double c = s.covariance[i * dim + j] / static_cast<double>(n - 1);
      s.covariance[i * dim + j] = c;
      s.covariance[j * dim + i] = c;
    }
  }
  return s;
}

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  check_stats(a);
  check_stats(b);
  if (a.dim() != b.dim()) {
    throw ValidationError("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
  }
  const auto d = static_cast<Eigen::Index>(a.dim());
  const Eigen::Map<const Eigen::VectorXd> mu_a(a.mean.data(), d);
  const Eigen::Map<const Eigen::VectorXd> mu_b(b.mean.data(), d);
  const Matrix cov_a = MatrixMap(a.covariance.data(), d, d);
  const Matrix cov_b = MatrixMap(b.covariance.data(), d, d);

  const Matrix root_a = symmetric_sqrt(cov_a);
  Matrix inner = root_a * cov_b * root_a;
  inner = 0.5 * (inner + inner.transpose());
  const double value = (mu_a - mu_b).squaredNorm() + cov_a.trace() + cov_b.trace() -
                       2.0 * trace_sqrt(inner);
  return std::max(value, 0.0);
}

std::vector<std::vector<PatchSpec>> patch_fid_prepare(const std::vector<ImageSize>& images,
                                                      int patch, int per_image,
                                                      std::uint64_t seed) {
  if (per_image < 0) throw ValidationError("per-image patch count must be non-negative");
  if (patch < 1) throw ValidationError("patch size must be positive");
  std::vector<std::vector<PatchSpec>> plan(images.size());
  if (per_image == 0) return plan;
  Xoshiro256 rng(seed);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto [w, h] = images[i];
    if (w < patch || h < patch) {
      throw ValidationError("image " + std::to_string(i) + " (" + std::to_string(w) + "x" +
                            std::to_string(h) + ") is smaller than the " + std::to_string(patch) +
                            "px FID patch");
    }
    for (int k = 0; k < per_image; ++k) {
      const auto x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(w - patch + 1)));
      const auto y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(h - patch + 1)));
      plan[i].push_back(PatchSpec{x0, y0, patch, patch, k});
    }
  }
  return plan;
}

double cosine_alignment_score(std::span<const double> u, std::span<const double> v, double scale) {
  if (u.size() != v.size() || u.empty()) throw ValidationError("alignment vectors must match in length");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw ValidationError("alignment vector has zero norm");
  const double cos = dot / (std::sqrt(nu) * std::sqrt(nv));
  return scale * std::max(std::min(cos, 1.0), 0.0);
}

}  // namespace pixcurate
