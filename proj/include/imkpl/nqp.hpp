#ifndef IMKPL_NQP_HPP
#define IMKPL_NQP_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "imkpl/types.hpp"

namespace imkpl {

/// Cardinality-constrained non-negative quadratic program:
///   minimize f(x) = 1/2 x^T Q x + c^T x   s.t.  x >= 0, ||x||_0 <= T.
/// Q must be symmetric positive semidefinite.
struct NqpProblem {
  Matrix Q;
  Vector c;
  Index T = 0;
  double eps = 1e-10;  // minimum objective decrease per iteration before stopping

  void validate() const {
    if (Q.rows() != Q.cols()) throw std::invalid_argument("NqpProblem: Q is not square");
    if (c.size() != Q.rows()) throw std::invalid_argument("NqpProblem: c size does not match Q");
    if (T < 1 || T > Q.rows()) throw std::invalid_argument("NqpProblem: T must lie in [1, n]");
    const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
      throw std::invalid_argument("NqpProblem: Q is not symmetric");
  }
};

struct NqpSolution {
  Vector x;
  std::vector<Index> support;  // nonzero indices, ascending
  double objective = 0.0;
  Index iterations = 0;                 // completed updates that changed x
  std::vector<double> objective_trace;  // objective after each completed update
};

/// Incremental Cholesky factor of the principal submatrix of Q indexed by the
/// active set, rows/columns in insertion order.
class CholeskyState {
public:
  Index size() const { return n_; }
  const Matrix& factor() const { return L_; }
  double last_pivot() const { return last_pivot_; }

  /// Append index j to the factored set. Returns false (singular flag) when
  /// the pivot q_jj - v^T v falls at or below the 1e-12 floor; the caller then
  /// drops j from the candidate set and reselects.
  bool extend(const Matrix& Q, const std::vector<Index>& active, Index j) {
    Vector v(n_);
    if (n_ > 0) {
      Vector rhs(n_);
      for (Index r = 0; r < n_; ++r) rhs(r) = Q(active[static_cast<std::size_t>(r)], j);
      v = L_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solve(rhs);
    }
    const double pivot = Q(j, j) - v.squaredNorm();
    last_pivot_ = pivot;
    if (pivot <= kPivotFloor) return false;
    grow_to(n_ + 1);
    L_.row(n_).head(n_) = v.transpose();
    L_(n_, n_) = std::sqrt(pivot);
    ++n_;
    return true;
  }

  /// Unconstrained minimizer on the active set: x = -Q_II^{-1} c_I, via two
  /// triangular back-substitutions with the stored factor.
  Vector solve_neg(const Vector& c_active) const {
    Vector z = L_.topLeftCorner(n_, n_).triangularView<Eigen::Lower>().solve(-c_active);
    return L_.topLeftCorner(n_, n_).transpose().triangularView<Eigen::Upper>().solve(z);
  }

  /// Refactor from scratch after the active set shrank. The reduced principal
  /// submatrix of a positive definite matrix stays positive definite.
  void rebuild(const Matrix& Q, const std::vector<Index>& active) {
    n_ = 0;
    for (Index j : active) {
      if (!extend(Q, {active.begin(), active.begin() + n_}, j))
        throw std::runtime_error("CholeskyState: rebuild hit a singular pivot");
    }
  }

  static constexpr double kPivotFloor = 1e-12;

private:
  void grow_to(Index n) {
    if (L_.rows() < n) {
      Matrix bigger = Matrix::Zero(std::max<Index>(2 * n, 8), std::max<Index>(2 * n, 8));
      bigger.topLeftCorner(L_.rows(), L_.cols()) = L_;
      L_ = std::move(bigger);
    }
  }

  Matrix L_;
  Index n_ = 0;
  double last_pivot_ = std::numeric_limits<double>::quiet_NaN();
};

/// Gauss-Southwell style pick: the candidate with the smallest (most negative)
/// gradient entry q_j^T x + c_j, requiring it to be negative. Ties break to
/// the lower index. Returns nullopt when no candidate offers descent.
inline std::optional<Index> select_dimension(const Matrix& Q, const Vector& c, const Vector& x,
                                             const std::vector<Index>& candidates) {
  std::vector<Index> nonzeros;
  for (Index i = 0; i < x.size(); ++i)
    if (x(i) != 0.0) nonzeros.push_back(i);
  std::optional<Index> best;
  double best_val = 0.0;
  for (Index j : candidates) {
    double g = c(j);
    for (Index i : nonzeros) g += Q(j, i) * x(i);
    if (g < 0.0 && (!best || g < best_val)) {
      best = j;
      best_val = g;
    }
  }
  return best;
}

/// Clamp a step to the non-negative orthant: when x_new has negative entries,
/// back off to the nearest zero-crossing on the segment from x_prev to x_new.
/// Returns the clamped point and the coordinates driven to zero.
inline std::pair<Vector, std::vector<Index>> line_search_clamp(const Vector& x_prev, const Vector& x_new) {
  if ((x_new.array() >= 0.0).all()) return {x_new, {}};
  double theta = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < x_new.size(); ++i) {
    if (x_new(i) < 0.0) theta = std::min(theta, x_prev(i) / (x_prev(i) - x_new(i)));
  }
  Vector out = x_prev + theta * (x_new - x_prev);
  std::vector<Index> zeroed;
  for (Index i = 0; i < x_new.size(); ++i) {
    if (x_new(i) < x_prev(i) && x_prev(i) / (x_prev(i) - x_new(i)) <= theta) {
      out(i) = 0.0;
      zeroed.push_back(i);
    }
  }
  return {out, zeroed};
}

namespace detail {

inline double active_objective(const Matrix& Q, const Vector& c, const std::vector<Index>& active,
                               const Vector& x_active) {
  double quad = 0.0, lin = 0.0;
  for (std::size_t a = 0; a < active.size(); ++a) {
    lin += c(active[a]) * x_active(static_cast<Index>(a));
    for (std::size_t b = 0; b < active.size(); ++b)
      quad += x_active(static_cast<Index>(a)) * Q(active[a], active[b]) * x_active(static_cast<Index>(b));
  }
  return 0.5 * quad + lin;
}

}  // namespace detail

/// Greedy pursuit for NqpProblem. Grows the support one coordinate at a time
/// along negative gradient entries, solves the active-set system in closed
/// form through an incrementally extended Cholesky factor, and clamps any
/// step that leaves the non-negative orthant at its nearest zero-crossing,
/// retiring the zeroed coordinates for good. The objective never increases;
/// it strictly decreases on every update that moves x.
inline NqpSolution nqp_solve(const NqpProblem& p) {
  p.validate();
  const Index n = p.Q.rows();
  const double psd_floor = -1e-8 * std::max(1.0, p.Q.diagonal().cwiseAbs().maxCoeff());

  std::vector<char> in_candidates(static_cast<std::size_t>(n), 1);
  std::vector<Index> candidates(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) candidates[static_cast<std::size_t>(i)] = i;

  std::vector<Index> active;
  Vector x_active(0);
  Vector x = Vector::Zero(n);
  CholeskyState chol;
  NqpSolution sol;
  sol.x = x;

  double f_prev = 0.0;
  bool support_dirty = false;  // true when x is not the minimizer over its support
  bool non_psd_evidence = false;

  auto refresh_candidates = [&]() {
    candidates.clear();
    for (Index i = 0; i < n; ++i)
      if (in_candidates[static_cast<std::size_t>(i)]) candidates.push_back(i);
  };

  auto scatter = [&]() {
    x.setZero();
    for (std::size_t a = 0; a < active.size(); ++a) x(active[a]) = x_active(static_cast<Index>(a));
  };

  // Closed-form solve on the current support, clamping until feasible. All
  // support entries are strictly positive on entry, so every clamp here uses
  // theta > 0 and strictly decreases f while shrinking the support.
  auto settle_support = [&]() {
    while (!active.empty()) {
      Vector cand = chol.solve_neg([&] {
        Vector ca(static_cast<Index>(active.size()));
        for (std::size_t a = 0; a < active.size(); ++a) ca(static_cast<Index>(a)) = p.c(active[a]);
        return ca;
      }());
      auto [clamped, zeroed] = line_search_clamp(x_active, cand);
      x_active = clamped;
      if (zeroed.empty()) break;
      std::vector<Index> keep_active;
      Vector keep_x(static_cast<Index>(active.size()) - static_cast<Index>(zeroed.size()));
      Index w = 0;
      for (std::size_t a = 0; a < active.size(); ++a) {
        const bool gone = std::find(zeroed.begin(), zeroed.end(), static_cast<Index>(a)) != zeroed.end();
        if (gone) {
          in_candidates[static_cast<std::size_t>(active[a])] = 0;
        } else {
          keep_active.push_back(active[a]);
          keep_x(w++) = x_active(static_cast<Index>(a));
        }
      }
      active = std::move(keep_active);
      x_active = std::move(keep_x);
      chol.rebuild(p.Q, active);
    }
    support_dirty = false;
  };

  while (true) {
    if (static_cast<Index>(active.size()) >= p.T) break;

    refresh_candidates();
    std::optional<Index> j;
    while (true) {
      scatter();
      j = select_dimension(p.Q, p.c, x, candidates);
      if (!j) break;
      if (chol.extend(p.Q, active, *j)) break;
      if (chol.last_pivot() < psd_floor) non_psd_evidence = true;
      in_candidates[static_cast<std::size_t>(*j)] = 0;
      candidates.erase(std::find(candidates.begin(), candidates.end(), *j));
    }
    if (!j) {
      if (non_psd_evidence)
        throw std::runtime_error("nqp_solve: Q is not positive semidefinite (negative Cholesky pivot)");
      break;
    }

    active.push_back(*j);
    Vector prev = x_active;
    prev.conservativeResize(static_cast<Index>(active.size()));
    prev(static_cast<Index>(active.size()) - 1) = 0.0;

    Vector c_active(static_cast<Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) c_active(static_cast<Index>(a)) = p.c(active[a]);
    Vector cand = chol.solve_neg(c_active);

    bool moved = true;
    if ((cand.array() >= 0.0).all()) {
      x_active = cand;
      // Drop exact zeros so the support stays the set of nonzero entries.
      std::vector<Index> zero_pos;
      for (Index a = 0; a < x_active.size(); ++a)
        if (x_active(a) == 0.0) zero_pos.push_back(a);
      if (!zero_pos.empty()) {
        std::vector<Index> keep_active;
        Vector keep_x(x_active.size() - static_cast<Index>(zero_pos.size()));
        Index w = 0;
        for (Index a = 0; a < static_cast<Index>(active.size()); ++a) {
          if (std::find(zero_pos.begin(), zero_pos.end(), a) != zero_pos.end()) {
            in_candidates[static_cast<std::size_t>(active[static_cast<std::size_t>(a)])] = 0;
          } else {
            keep_active.push_back(active[static_cast<std::size_t>(a)]);
            keep_x(w++) = x_active(a);
          }
        }
        active = std::move(keep_active);
        x_active = std::move(keep_x);
        chol.rebuild(p.Q, active);
      }
    } else {
      auto [clamped, zeroed] = line_search_clamp(prev, cand);
      moved = (clamped - prev).cwiseAbs().maxCoeff() > 0.0;
      x_active = clamped;
      std::vector<Index> keep_active;
      std::vector<double> keep_vals;
      for (Index a = 0; a < static_cast<Index>(active.size()); ++a) {
        if (std::find(zeroed.begin(), zeroed.end(), a) != zeroed.end()) {
          in_candidates[static_cast<std::size_t>(active[static_cast<std::size_t>(a)])] = 0;
        } else {
          keep_active.push_back(active[static_cast<std::size_t>(a)]);
          keep_vals.push_back(x_active(a));
        }
      }
      active = std::move(keep_active);
      x_active = Eigen::Map<Vector>(keep_vals.data(), static_cast<Index>(keep_vals.size()));
      chol.rebuild(p.Q, active);
      support_dirty = moved;  // a partial step leaves the support non-optimal
    }
    in_candidates[static_cast<std::size_t>(*j)] = 0;

    if (!moved) continue;  // rejected at the origin: x unchanged, candidate retired

    const double f = detail::active_objective(p.Q, p.c, active, x_active);
    ++sol.iterations;
    sol.objective_trace.push_back(f);
    const double progress = f_prev - f;
    f_prev = f;
    if (progress < p.eps) break;

    bool any_candidate = false;
    for (Index i = 0; i < n; ++i)
      if (in_candidates[static_cast<std::size_t>(i)]) { any_candidate = true; break; }
    if (!any_candidate) break;
  }

  if (support_dirty) {
    settle_support();
    const double f = detail::active_objective(p.Q, p.c, active, x_active);
    if (f < f_prev) {
      ++sol.iterations;
      sol.objective_trace.push_back(f);
      f_prev = f;
    }
  }

  scatter();
  sol.x = x;
  sol.objective = f_prev;
  for (Index i = 0; i < n; ++i)
    if (x(i) != 0.0) sol.support.push_back(i);
  return sol;
}

}  // namespace imkpl

#endif
