#ifndef IMKPL_KERNEL_HPP
#define IMKPL_KERNEL_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "imkpl/types.hpp"

namespace imkpl {

/// A bundle of base Gram matrices with their combination weights.
/// Weights live on the probability simplex: alpha >= 0, sum(alpha) = 1.
struct KernelSet {
  std::vector<Matrix> kernels;
  Vector weights;

  Index count() const { return static_cast<Index>(kernels.size()); }
  Index points() const { return kernels.empty() ? 0 : kernels.front().rows(); }

  void validate() const {
    if (kernels.empty()) throw DataError("KernelSet: no kernels");
    const Index n = kernels.front().rows();
    for (std::size_t l = 0; l < kernels.size(); ++l) {
      if (kernels[l].rows() != n || kernels[l].cols() != n)
        throw DataError("KernelSet: kernel " + std::to_string(l) + " has mismatched dimensions");
    }
    if (weights.size() != count()) throw DataError("KernelSet: weight count does not match kernel count");
    if ((weights.array() < 0).any()) throw DataError("KernelSet: negative weight");
    if (std::abs(weights.sum() - 1.0) > 1e-10) throw DataError("KernelSet: weights must sum to 1");
  }
};

/// Class-aware neighbor lists in the feature space, fixed at initialization.
/// clipped marks samples whose class was too small to supply k neighbors.
struct NeighborSets {
  std::vector<std::vector<Index>> same_label;
  std::vector<std::vector<Index>> diff_label;
  std::vector<bool> clipped;
};

struct GaussianKernelResult {
  std::vector<Matrix> kernels;
  std::vector<double> deltas;           // per-feature mean squared distance
  std::vector<Index> constant_features; // features with delta == 0 (all-ones kernel)
};

/// Row ranges of the data matrix that form one feature each. A plain vectorial
/// dataset uses one row per feature; a per-feature time series uses L rows.
using FeatureGroups = std::vector<std::pair<Index, Index>>;  // (start row, row count)

inline FeatureGroups scalar_feature_groups(Index d) {
  FeatureGroups groups;
  groups.reserve(static_cast<std::size_t>(d));
  for (Index i = 0; i < d; ++i) groups.emplace_back(i, 1);
  return groups;
}

/// One Gaussian kernel per feature group: exp(-D(s,t)^2 / delta) with D the
/// Euclidean distance restricted to the group's rows and delta the mean of
/// D^2 over all ordered sample pairs. delta == 0 (constant feature) yields the
/// all-ones matrix and is reported in constant_features.
inline GaussianKernelResult gaussian_base_kernels(const Matrix& data, const FeatureGroups& groups) {
  const Index n = data.cols();
  if (n < 2) throw DataError("gaussian_base_kernels: need at least two samples");
  GaussianKernelResult out;
  out.kernels.reserve(groups.size());
  out.deltas.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto [start, len] = groups[g];
    if (start < 0 || len < 1 || start + len > data.rows())
      throw DataError("gaussian_base_kernels: feature group " + std::to_string(g) + " out of range");
    const auto block = data.middleRows(start, len);
    Matrix d2(n, n);
    for (Index s = 0; s < n; ++s) {
      d2(s, s) = 0.0;
      for (Index t = s + 1; t < n; ++t) {
        const double d = (block.col(s) - block.col(t)).squaredNorm();
        d2(s, t) = d;
        d2(t, s) = d;
      }
    }
    const double delta = d2.sum() / static_cast<double>(n) / static_cast<double>(n);
    out.deltas.push_back(delta);
    if (delta == 0.0) {
      out.kernels.push_back(Matrix::Ones(n, n));
      out.constant_features.push_back(static_cast<Index>(g));
      continue;
    }
    Matrix k = (-d2 / delta).array().exp();
    k.diagonal().setOnes();
    out.kernels.push_back(std::move(k));
  }
  return out;
}

inline GaussianKernelResult gaussian_base_kernels(const Matrix& data) {
  return gaussian_base_kernels(data, scalar_feature_groups(data.rows()));
}

/// Gaussian kernel rows K_g(y_test, Y) for each feature group, using the
/// deltas fixed at training time. Returns one (n_test x n_train) block per group.
inline std::vector<Matrix> gaussian_kernel_rows(const Matrix& test_data, const Matrix& train_data,
                                                const FeatureGroups& groups,
                                                const std::vector<double>& deltas) {
  if (test_data.rows() != train_data.rows())
    throw DataError("gaussian_kernel_rows: test/train feature dimensions differ");
  if (deltas.size() != groups.size())
    throw DataError("gaussian_kernel_rows: delta count does not match group count");
  std::vector<Matrix> rows;
  rows.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto [start, len] = groups[g];
    const auto test_block = test_data.middleRows(start, len);
    const auto train_block = train_data.middleRows(start, len);
    Matrix k(test_data.cols(), train_data.cols());
    if (deltas[g] == 0.0) {
      k.setOnes();
    } else {
      for (Index s = 0; s < test_data.cols(); ++s)
        for (Index t = 0; t < train_data.cols(); ++t)
          k(s, t) = std::exp(-(test_block.col(s) - train_block.col(t)).squaredNorm() / deltas[g]);
    }
    rows.push_back(std::move(k));
  }
  return rows;
}

/// Cosine normalization K'(s,t) = K(s,t) / sqrt(K(s,s) K(t,t)); unit diagonal.
inline Matrix normalize_kernel(const Matrix& K) {
  if (K.rows() != K.cols()) throw DataError("normalize_kernel: matrix is not square");
  const Index n = K.rows();
  Vector inv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    const double d = K(i, i);
    if (d <= 0.0) throw DataError("normalize_kernel: non-positive diagonal entry at index " + std::to_string(i));
    inv_sqrt(i) = 1.0 / std::sqrt(d);
  }
  Matrix out = inv_sqrt.asDiagonal() * K * inv_sqrt.asDiagonal();
  out.diagonal().setOnes();
  return out;
}

/// Weighted combination sum_l alpha_l K_l.
inline Matrix combine(const KernelSet& ks) {
  ks.validate();
  Matrix out = Matrix::Zero(ks.points(), ks.points());
  for (Index l = 0; l < ks.count(); ++l) out += ks.weights(l) * ks.kernels[static_cast<std::size_t>(l)];
  return out;
}

/// K~ = 1 - (H^T H) .* K: per entry 1 for cross-class pairs, 1 - K(i,s) for
/// same-class pairs.
inline Matrix discrimination_kernel(const Matrix& K, const LabelMatrix& H) {
  if (K.rows() != K.cols() || K.rows() != H.size())
    throw DataError("discrimination_kernel: dimension mismatch");
  const Index n = K.rows();
  Matrix out = Matrix::Ones(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index s = 0; s < n; ++s)
      if (H.same_class(i, s)) out(i, s) -= K(i, s);
  return out;
}

/// Same-label and different-label k-nearest neighbor lists under the feature
/// space metric. For unit-diagonal kernels the ranking by distance equals the
/// ranking by descending kernel value; ties break toward the lower index.
/// A class with fewer than k+1 members gets a clipped same-label list.
inline NeighborSets neighbor_sets(const Matrix& K, const LabelMatrix& H, Index k) {
  if (K.rows() != K.cols() || K.rows() != H.size()) throw DataError("neighbor_sets: dimension mismatch");
  if (k < 1) throw std::invalid_argument("neighbor_sets: k must be positive");
  const Index n = K.rows();
  NeighborSets out;
  out.same_label.resize(static_cast<std::size_t>(n));
  out.diff_label.resize(static_cast<std::size_t>(n));
  out.clipped.assign(static_cast<std::size_t>(n), false);

  auto nearest = [&](Index i, bool same) {
    std::vector<Index> cand;
    for (Index s = 0; s < n; ++s) {
      if (s == i) continue;
      if (H.same_class(i, s) == same) cand.push_back(s);
    }
    const std::size_t take = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(k));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(),
                      [&](Index a, Index b) {
                        const double da = K(i, i) + K(a, a) - 2.0 * K(i, a);
                        const double db = K(i, i) + K(b, b) - 2.0 * K(i, b);
                        if (da != db) return da < db;
                        return a < b;
                      });
    cand.resize(take);
    return cand;
  };

  for (Index i = 0; i < n; ++i) {
    auto same = nearest(i, true);
    auto diff = nearest(i, false);
    if (same.size() < static_cast<std::size_t>(k) || diff.size() < static_cast<std::size_t>(k))
      out.clipped[static_cast<std::size_t>(i)] = true;
    out.same_label[static_cast<std::size_t>(i)] = std::move(same);
    out.diff_label[static_cast<std::size_t>(i)] = std::move(diff);
  }
  return out;
}

}  // namespace imkpl

#endif
