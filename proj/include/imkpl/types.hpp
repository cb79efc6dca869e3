#ifndef IMKPL_TYPES_HPP
#define IMKPL_TYPES_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace imkpl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Thrown for malformed or inconsistent input data (bad files, dimension
/// mismatches, invalid labels). The CLI maps it to exit code 2.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when the training loop observes an increase of the total loss
/// across a sweep beyond numerical slack. The CLI maps it to exit code 3.
class DescentViolation : public std::runtime_error {
public:
  explicit DescentViolation(const std::string& what) : std::runtime_error(what) {}
};

/// One-hot label matrix H (c x N), stored compactly as per-sample class ids.
class LabelMatrix {
public:
  LabelMatrix() = default;

  /// Build from 0-based class ids. Every class in [0, num_classes) must appear
  /// at least once elsewhere in the pipeline, but that is not enforced here.
  LabelMatrix(std::vector<int> labels, int num_classes)
      : labels_(std::move(labels)), num_classes_(num_classes) {
    if (num_classes_ <= 0) throw DataError("LabelMatrix: num_classes must be positive");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] < 0 || labels_[i] >= num_classes_)
        throw DataError("LabelMatrix: label out of range at sample " + std::to_string(i));
    }
  }

  /// Build from an explicit c x N binary matrix; each column must be one-hot.
  static LabelMatrix from_matrix(const Matrix& H) {
    std::vector<int> labels(static_cast<std::size_t>(H.cols()), -1);
    for (Index j = 0; j < H.cols(); ++j) {
      int hot = -1;
      for (Index q = 0; q < H.rows(); ++q) {
        const double v = H(q, j);
        if (v == 1.0) {
          if (hot >= 0) throw DataError("LabelMatrix: column " + std::to_string(j) + " has multiple ones");
          hot = static_cast<int>(q);
        } else if (v != 0.0) {
          throw DataError("LabelMatrix: column " + std::to_string(j) + " is not binary");
        }
      }
      if (hot < 0) throw DataError("LabelMatrix: column " + std::to_string(j) + " has no one");
      labels[static_cast<std::size_t>(j)] = hot;
    }
    return LabelMatrix(std::move(labels), static_cast<int>(H.rows()));
  }

  int num_classes() const { return num_classes_; }
  Index size() const { return static_cast<Index>(labels_.size()); }
  int class_of(Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  bool same_class(Index i, Index j) const { return class_of(i) == class_of(j); }
  const std::vector<int>& labels() const { return labels_; }

  /// Dense c x N one-hot matrix.
  Matrix matrix() const {
    Matrix H = Matrix::Zero(num_classes_, size());
    for (Index j = 0; j < size(); ++j) H(class_of(j), j) = 1.0;
    return H;
  }

  /// Number of samples in each class.
  std::vector<Index> class_counts() const {
    std::vector<Index> counts(static_cast<std::size_t>(num_classes_), 0);
    for (int c : labels_) ++counts[static_cast<std::size_t>(c)];
    return counts;
  }

private:
  std::vector<int> labels_;
  int num_classes_ = 0;
};

/// Trade-off weights and counts controlling a training run.
/// m defaults to c*T and k defaults to T when left unset (<= 0).
struct HyperParams {
  double lambda = 0.2;   // discriminative loss weight
  double mu = 0.2;       // local-separation loss weight
  double tau = 0.2;      // interpretability loss weight
  Index T = 5;           // column sparsity budget (prototypes <= T, codes < T)
  Index k = -1;          // neighborhood size; -1 -> T
  Index m = -1;          // number of prototypes; -1 -> c*T
  double eta = 0.3;      // kernel-weight damping in (0, 1]
  Index max_iters = 100; // sweep cap
  double tol = 1e-5;     // relative convergence tolerance on the total loss

  Index effective_k() const { return k > 0 ? k : T; }
  Index effective_m(int num_classes) const { return m > 0 ? m : static_cast<Index>(num_classes) * T; }

  void validate() const {
    if (lambda < 0 || mu < 0 || tau < 0) throw std::invalid_argument("HyperParams: trade-off weights must be non-negative");
    if (T < 2) throw std::invalid_argument("HyperParams: T must be at least 2");
    if (eta <= 0 || eta > 1) throw std::invalid_argument("HyperParams: eta must lie in (0, 1]");
    if (max_iters < 1) throw std::invalid_argument("HyperParams: max_iters must be positive");
    if (tol <= 0) throw std::invalid_argument("HyperParams: tol must be positive");
  }
};

/// Per-term loss values for one sweep; total = rec + lambda*dis + mu*ls + tau*ip.
struct LossBreakdown {
  double rec = 0;
  double dis = 0;
  double ls = 0;
  double ip = 0;
  double total = 0;
};

}  // namespace imkpl

#endif
