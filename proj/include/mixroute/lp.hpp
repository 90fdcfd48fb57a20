#pragma once

// Small dense linear programs: two-phase tableau simplex with Bland's rule.
// Intended for the few-dozen-variable programs of the equilibrium solvers.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mixroute/ctm.hpp"

namespace mixroute {

enum class Sense { less_equal, equal, greater_equal };
enum class LpStatus { optimal, infeasible, unbounded };

/// min c'x  s.t.  rows (sense) rhs,  lower <= x <= upper.
/// Lower bounds must be finite; upper bounds may be +infinity.
template <typename Scalar>
class LinearProgram {
 public:
  using Term = std::pair<Eigen::Index, Scalar>;

  Eigen::Index add_variable(Scalar cost, Scalar lower = 0,
                            Scalar upper = std::numeric_limits<Scalar>::infinity()) {
    if (!std::isfinite(double(lower))) throw std::invalid_argument("lower bounds must be finite");
    if (upper < lower) throw std::invalid_argument("upper bound below lower bound");
    cost_.push_back(cost);
    lower_.push_back(lower);
    upper_.push_back(upper);
    return Eigen::Index(cost_.size()) - 1;
  }

  void add_constraint(std::vector<Term> terms, Sense sense, Scalar rhs) {
    for (const auto& [j, a] : terms)
      if (j < 0 || j >= variables()) throw std::out_of_range("constraint references unknown variable");
    rows_.push_back({std::move(terms), sense, rhs});
  }

  struct Row {
    std::vector<Term> terms;
    Sense sense;
    Scalar rhs;
  };

  Eigen::Index variables() const { return Eigen::Index(cost_.size()); }
  std::size_t constraints() const { return rows_.size(); }
  Scalar cost(Eigen::Index j) const { return cost_[std::size_t(j)]; }
  Scalar lower(Eigen::Index j) const { return lower_[std::size_t(j)]; }
  Scalar upper(Eigen::Index j) const { return upper_[std::size_t(j)]; }
  const std::vector<Row>& rows() const { return rows_; }

 private:
  std::vector<Scalar> cost_, lower_, upper_;
  std::vector<Row> rows_;
};

template <typename Scalar>
struct LpResult {
  LpStatus status{LpStatus::infeasible};
  Vector<Scalar> x;
  Scalar objective{0};

  bool optimal() const { return status == LpStatus::optimal; }
};

template <typename Scalar>
class SimplexTableau {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  SimplexTableau(Matrix tableau, std::vector<Eigen::Index> basis, Scalar tol)
      : t_(std::move(tableau)), basis_(std::move(basis)), tol_(tol) {}

  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index rhs_col() const { return t_.cols() - 1; }

  // Loads objective `c` (one entry per structural column) into the bottom row
  // as reduced costs with respect to the current basis.
  void set_objective(const Vector<Scalar>& c) {
    t_.row(rows()).setZero();
    t_.row(rows()).head(c.size()) = c.transpose();
    for (Eigen::Index r = 0; r < rows(); ++r) {
      const Scalar cb = t_(rows(), basis_[std::size_t(r)]);
      if (cb != 0) t_.row(rows()) -= cb * t_.row(r);
    }
  }

  // Runs Bland-rule pivots over columns [0, allowed). Returns false on
  // unboundedness.
  bool optimize(Eigen::Index allowed) {
    for (;;) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j)
        if (t_(rows(), j) < -tol_) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      Scalar best = 0;
      for (Eigen::Index r = 0; r < rows(); ++r) {
        const Scalar a = t_(r, enter);
        if (a <= tol_) continue;
        const Scalar ratio = t_(r, rhs_col()) / a;
        if (leave < 0 || ratio < best - tol_ ||
            (std::abs(ratio - best) <= tol_ && basis_[std::size_t(r)] < basis_[std::size_t(leave)])) {
          leave = r;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i)
      if (i != r && t_(i, c) != 0) t_.row(i) -= t_(i, c) * t_.row(r);
    basis_[std::size_t(r)] = c;
  }

  void drop_row(Eigen::Index r) {
    Matrix reduced(t_.rows() - 1, t_.cols());
    reduced << t_.topRows(r), t_.bottomRows(t_.rows() - r - 1);
    t_ = std::move(reduced);
    basis_.erase(basis_.begin() + r);
  }

  Scalar objective_value() const { return -t_(rows(), rhs_col()); }
  const Matrix& tableau() const { return t_; }
  const std::vector<Eigen::Index>& basis() const { return basis_; }

 private:
  Matrix t_;
  std::vector<Eigen::Index> basis_;
  Scalar tol_;
};

template <typename Scalar>
LpResult<Scalar> solve_lp(const LinearProgram<Scalar>& lp, Scalar tol = Scalar(1e-9)) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = lp.variables();

  // Shift x = lower + y, turn finite upper bounds into rows.
  struct StdRow {
    Vector<Scalar> a;
    Sense sense;
    Scalar rhs;
  };
  std::vector<StdRow> rows;
  for (const auto& row : lp.rows()) {
    StdRow s{Vector<Scalar>::Zero(n), row.sense, row.rhs};
    for (const auto& [j, a] : row.terms) {
      s.a(j) += a;
      s.rhs -= a * lp.lower(j);
    }
    rows.push_back(std::move(s));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar width = lp.upper(j) - lp.lower(j);
    if (std::isinf(double(width))) continue;
    StdRow s{Vector<Scalar>::Zero(n), Sense::less_equal, width};
    s.a(j) = 1;
    rows.push_back(std::move(s));
  }

  const Eigen::Index m = Eigen::Index(rows.size());
  Eigen::Index slacks = 0;
  for (const auto& r : rows) slacks += r.sense == Sense::equal ? 0 : 1;
  const Eigen::Index structural = n + slacks;
  const Eigen::Index cols = structural + m + 1;

  Matrix t = Matrix::Zero(m + 1, cols);
  std::vector<Eigen::Index> basis(std::size_t(m), 0);
  Eigen::Index slack = n;
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto& row = rows[std::size_t(r)];
    t.row(r).head(n) = row.a.transpose();
    if (row.sense == Sense::less_equal) t(r, slack++) = 1;
    if (row.sense == Sense::greater_equal) t(r, slack++) = -1;
    t(r, cols - 1) = row.rhs;
    if (row.rhs < 0) t.row(r) *= -1;
    t(r, structural + r) = 1;
    basis[std::size_t(r)] = structural + r;
  }

  LpResult<Scalar> result;
  SimplexTableau<Scalar> tab(std::move(t), std::move(basis), tol);

  // Phase 1: minimise the sum of artificials.
  Vector<Scalar> phase1 = Vector<Scalar>::Zero(cols - 1);
  phase1.tail(m).setOnes();
  tab.set_objective(phase1);
  tab.optimize(cols - 1);
  Scalar rhs_scale = 1;
  for (const auto& r : rows) rhs_scale = std::max(rhs_scale, Scalar(std::abs(r.rhs)));
  if (tab.objective_value() > tol * rhs_scale * Scalar(std::max<Eigen::Index>(m, 1))) {
    result.status = LpStatus::infeasible;
    return result;
  }

  // Drive artificials out of the basis; rows where that is impossible are
  // linearly dependent and get dropped.
  for (Eigen::Index r = tab.rows() - 1; r >= 0; --r) {
    if (tab.basis()[std::size_t(r)] < structural) continue;
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < structural; ++j)
      if (std::abs(tab.tableau()(r, j)) > tol) {
        col = j;
        break;
      }
    if (col >= 0)
      tab.pivot(r, col);
    else
      tab.drop_row(r);
  }

  Vector<Scalar> phase2 = Vector<Scalar>::Zero(cols - 1);
  for (Eigen::Index j = 0; j < n; ++j) phase2(j) = lp.cost(j);
  tab.set_objective(phase2);
  if (!tab.optimize(structural)) {
    result.status = LpStatus::unbounded;
    return result;
  }

  result.status = LpStatus::optimal;
  result.x = Vector<Scalar>::Zero(n);
  for (Eigen::Index r = 0; r < tab.rows(); ++r) {
    const Eigen::Index b = tab.basis()[std::size_t(r)];
    if (b < n) result.x(b) = tab.tableau()(r, tab.rhs_col());
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    result.x(j) = std::max(result.x(j), Scalar(0)) + lp.lower(j);
    result.objective += lp.cost(j) * result.x(j);
  }
  return result;
}

}  // namespace mixroute
