#pragma once

// Per-index convex program and the impact computation built on it.
//
//   maximize    c' d
//   subject to  ||Q_box d||_inf <= 1,  ||M_quad d||_2^2 <= eps',  F_eq d = 0
//
// The equalities are eliminated with an orthonormal null-space basis and the
// remaining variable is restricted to the row space of [Q_box; M_quad], where
// the feasible set is compact. A primal log-barrier Newton method then solves
// the box + second-order-cone problem from the strictly feasible origin.

#include <vector>

#include "cpsimpact/attacks.hpp"
#include "cpsimpact/distrib.hpp"

namespace cpsimpact {

inline constexpr double kKktTolerance = 1e-6;
inline constexpr double kConstraintSlack = 1e-7;

struct ConvexProblem {
  Vector c;
  Matrix Q_box;
  double eps_prime = 0.0;
  Matrix M_quad;
  Matrix F_eq;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

struct SolveResult {
  Vector d_star;
  double mu = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  double kkt_residual = 0.0;
  int newton_iterations = 0;
};

/// d = Z xi parametrizes {d : F_eq d = 0}; Z has orthonormal columns.
struct EqualityReduction {
  Matrix Z;
  [[nodiscard]] Vector reconstruct(const Vector& xi) const { return Z * xi; }
  [[nodiscard]] Index reduced_dim() const { return Z.cols(); }
};

[[nodiscard]] EqualityReduction eliminate_equalities(const Matrix& F_eq, Index dim);

/// Feasible set prepared once, reused for many objectives.
class QclpSolver {
 public:
  QclpSolver(const Matrix& Q_box, const Matrix& M_quad, const Matrix& F_eq, double eps_prime);

  /// Throws NumericalFailure when the barrier method cannot certify a solution.
  [[nodiscard]] SolveResult maximize(const Vector& c) const;

  [[nodiscard]] bool infeasible() const { return infeasible_; }
  [[nodiscard]] Index dim() const { return dim_; }

 private:
  Index dim_ = 0;
  double eps_ = 0.0;
  bool infeasible_ = false;
  bool quad_active_ = false;
  Matrix Z_;       // null-space basis of F_eq (dim x p)
  Matrix basis_;   // dim x q, orthonormal columns, Z_ times row-space basis
  Matrix A_box_;   // m x q
  Matrix P_;       // q x q
  Matrix Q_box_, M_quad_, F_eq_;
};

[[nodiscard]] SolveResult solve_qclp(const ConvexProblem& problem);

struct IndexImpact {
  double mu = 0.0;
  double sigma = 0.0;
  double P = 0.0;
  Vector d;
  double kkt_residual = 0.0;
};

struct ImpactReport {
  std::vector<IndexImpact> per_index;
  double I1_prime = 0.0;
  double I2_prime = 0.0;
  Index argmax_index = 0;     // maximizer of P_i (0-based), smallest index on ties
  Index argmax_I2_index = 0;  // maximizer of mu_i
  bool feasible = false;
  bool unbounded = false;
  double epsilon_prime = 0.0;
  double max_kkt_residual = 0.0;

  /// Decision vector attaining I1' (empty if none exists).
  [[nodiscard]] const Vector* best_d() const {
    return per_index.empty() ? nullptr : &per_index[static_cast<std::size_t>(argmax_index)].d;
  }
};

/// Runs the per-index solves (optionally on `jobs` threads) and reduces them
/// to I1' = max_i P_i and I2' = max_i mu_i. Infeasible summaries report zero
/// impact; unbounded ones report I1' = 1 and I2' = +inf.
[[nodiscard]] ImpactReport algorithm1(const GaussianSummary& summary, const DecisionLayout& layout,
                                      int jobs = 1);

/// Lower bound on max E||z_{1:N}||_inf; zero when infeasible.
[[nodiscard]] double lower_bound_I2(const ImpactReport& report);

}  // namespace cpsimpact
