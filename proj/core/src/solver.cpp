#include "cpsimpact/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "cpsimpact/error.hpp"

namespace cpsimpact {
namespace {

constexpr double kBarrierGrowth = 20.0;
constexpr double kGapTolerance = 1e-8;
constexpr int kMaxNewtonSteps = 4000;
constexpr double kUnboundedTolerance = 1e-6;

}  // namespace

EqualityReduction eliminate_equalities(const Matrix& F_eq, Index dim) {
  if (F_eq.rows() > 0 && F_eq.cols() != dim) {
    throw Error(ErrorKind::DimensionMismatch, "F_eq column count differs from dim_d");
  }
  return {numcore::null_space_basis(F_eq.rows() == 0 ? Matrix(0, dim) : F_eq)};
}

QclpSolver::QclpSolver(const Matrix& Q_box, const Matrix& M_quad, const Matrix& F_eq,
                       double eps_prime)
    : dim_(Q_box.cols()), eps_(eps_prime), Q_box_(Q_box), M_quad_(M_quad), F_eq_(F_eq) {
  if (M_quad.cols() != dim_ || (F_eq.rows() > 0 && F_eq.cols() != dim_)) {
    throw Error(ErrorKind::DimensionMismatch, "QclpSolver: constraint maps disagree on dim_d");
  }
  if (!(eps_prime >= 0.0)) {
    infeasible_ = true;
    return;
  }
  Z_ = eliminate_equalities(F_eq, dim_).Z;
  if (Z_.cols() == 0) {
    basis_ = Matrix(dim_, 0);
  } else if (eps_prime == 0.0) {
    // the quadratic degenerates to the subspace M_quad d = 0
    Z_ = (Z_ * numcore::null_space_basis(M_quad * Z_)).eval();
    basis_ = Z_.cols() == 0 ? Matrix(dim_, 0) : Matrix(Z_ * numcore::row_space_basis(Q_box * Z_));
  } else {
    Matrix stacked(Q_box.rows() + M_quad.rows(), Z_.cols());
    stacked << Q_box * Z_, M_quad * Z_;
    basis_ = Z_ * numcore::row_space_basis(stacked);
    quad_active_ = true;
  }
  A_box_ = Q_box * basis_;
  if (quad_active_) {
    const Matrix MB = M_quad * basis_;
    P_ = numcore::symmetrize(MB.transpose() * MB);
  } else {
    P_ = Matrix::Zero(basis_.cols(), basis_.cols());
  }
}

SolveResult QclpSolver::maximize(const Vector& c) const {
  if (c.size() != dim_) throw Error(ErrorKind::DimensionMismatch, "objective has wrong length");
  SolveResult res;
  res.d_star = Vector::Zero(dim_);
  if (infeasible_) {
    res.status = SolveStatus::Infeasible;
    return res;
  }
  const double c_norm = c.norm();
  const Index q = basis_.cols();
  if (c_norm == 0.0 || Z_.cols() == 0) {
    res.status = SolveStatus::Optimal;
    return res;
  }
  const Vector cz = Z_.transpose() * c;
  const Vector cb = basis_.transpose() * c;
  const Vector leftover = cz - Z_.transpose() * (basis_ * cb);
  if (leftover.norm() > kUnboundedTolerance * c_norm) {
    res.status = SolveStatus::Unbounded;
    res.mu = std::numeric_limits<double>::infinity();
    return res;
  }
  if (q == 0 || cb.norm() == 0.0) {
    res.status = SolveStatus::Optimal;
    return res;
  }

  const Vector g0 = cb / cb.norm();  // normalized objective
  const Index m_box = A_box_.rows();
  const double n_constraints = 2.0 * static_cast<double>(m_box) + (quad_active_ ? 1.0 : 0.0);

  auto feasible = [&](const Vector& eta) {
    const Vector s = A_box_ * eta;
    for (Index j = 0; j < m_box; ++j) {
      if (!(1.0 - s(j) > 0.0) || !(1.0 + s(j) > 0.0)) return false;
    }
    return !quad_active_ || eps_ - eta.dot(P_ * eta) > 0.0;
  };
  auto gradient = [&](const Vector& eta, double t, Matrix* hess) {
    const Vector s = A_box_ * eta;
    Vector g = -t * g0;
    if (hess) hess->setZero();
    for (Index j = 0; j < m_box; ++j) {
      const double iu = 1.0 / (1.0 - s(j)), il = 1.0 / (1.0 + s(j));
      const auto a = A_box_.row(j).transpose();
      g += (iu - il) * a;
      if (hess) hess->noalias() += (iu * iu + il * il) * (a * a.transpose());
    }
    if (quad_active_) {
      const Vector Pe = P_ * eta;
      const double sq = eps_ - eta.dot(Pe);
      g += (2.0 / sq) * Pe;
      if (hess) *hess += (2.0 / sq) * P_ + (4.0 / (sq * sq)) * (Pe * Pe.transpose());
    }
    return g;
  };

  // KKT residual at eta: stationarity of g0 against the constraint normals
  // plus complementarity, scaled by the objective. The barrier multipliers
  // 1/(t s) are one candidate; a least-squares refit on the near-active
  // normals is the other, since at large t the barrier gradient carries
  // rounding from an ill-conditioned Hessian.
  auto certificate = [&](const Vector& eta, double t, double barrier_stationarity) {
    const Vector s = A_box_ * eta;
    const Index n_c = 2 * m_box + (quad_active_ ? 1 : 0);
    Matrix normals(q, n_c);
    Vector slack(n_c);
    for (Index j = 0; j < m_box; ++j) {
      normals.col(2 * j) = A_box_.row(j).transpose();
      normals.col(2 * j + 1) = -A_box_.row(j).transpose();
      slack(2 * j) = 1.0 - s(j);
      slack(2 * j + 1) = 1.0 + s(j);
    }
    if (quad_active_) {
      normals.col(n_c - 1) = 2.0 * (P_ * eta);
      slack(n_c - 1) = eps_ - eta.dot(P_ * eta);
    }
    const double scale = std::max(1.0, std::abs(g0.dot(eta)));
    const Vector lambda_barrier = (t * slack.array()).inverse().matrix();
    const double barrier =
        std::max(barrier_stationarity, lambda_barrier.dot(slack) / scale);

    std::vector<Index> active;
    const double lmax = lambda_barrier.size() ? lambda_barrier.maxCoeff() : 0.0;
    for (Index k = 0; k < n_c; ++k)
      if (lambda_barrier(k) >= 1e-6 * lmax) active.push_back(k);
    if (active.empty()) return barrier;
    Matrix G(q, static_cast<Index>(active.size()));
    Vector act_slack(G.cols());
    for (Index k = 0; k < G.cols(); ++k) {
      G.col(k) = normals.col(active[static_cast<std::size_t>(k)]);
      act_slack(k) = slack(active[static_cast<std::size_t>(k)]);
    }
    const Vector lambda = G.colPivHouseholderQr().solve(g0);
    if (!lambda.allFinite() || lambda.minCoeff() < 0.0) return barrier;
    const double refit = std::max((G * lambda - g0).norm(), lambda.dot(act_slack) / scale);
    return std::min(barrier, refit);
  };

  Vector eta = Vector::Zero(q);
  double t = 1.0;
  int steps = 0;
  Vector grad(q);
  Matrix hess(q, q);
  double last_grad_norm = 0.0;

  for (;;) {
    // centering; the line search works on the directional derivative since
    // barrier values lose precision once t is large
    for (int inner = 0;; ++inner) {
      if (++steps > kMaxNewtonSteps) {
        throw Error(ErrorKind::NumericalFailure, "barrier method exceeded the Newton step budget");
      }
      grad = gradient(eta, t, &hess);
      last_grad_norm = grad.norm();
      Eigen::LDLT<Matrix> ldlt(hess);
      const Vector step = -ldlt.solve(grad);
      if (!step.allFinite()) {
        throw Error(ErrorKind::NumericalFailure, "singular Newton system in barrier method");
      }
      const double decrement = -grad.dot(step);
      if (decrement <= 1e-20 || inner > 100) break;

      double hi = 1.0;
      while (!feasible(eta + hi * step)) hi *= 0.5;
      double alpha = hi;
      if (gradient(eta + hi * step, t, nullptr).dot(step) > 0.0) {
        double lo = 0.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (gradient(eta + mid * step, t, nullptr).dot(step) > 0.0) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        alpha = lo > 0.0 ? lo : hi;
      }
      eta += alpha * step;
      if (decrement < 1e-16) break;
    }
    last_grad_norm = gradient(eta, t, nullptr).norm();
    const double objective = g0.dot(eta);
    if (n_constraints / t <= kGapTolerance * std::max(1.0, std::abs(objective))) {
      res.kkt_residual = certificate(eta, t, last_grad_norm / t);
      break;
    }
    t *= kBarrierGrowth;
  }

  res.d_star = basis_ * eta;
  res.mu = c.dot(res.d_star);
  res.newton_iterations = steps;
  res.status = SolveStatus::Optimal;

  if (res.kkt_residual > kKktTolerance) {
    throw Error(ErrorKind::NumericalFailure,
                "KKT residual " + std::to_string(res.kkt_residual) + " above tolerance");
  }
  const double box_viol =
      Q_box_.rows() > 0 ? (Q_box_ * res.d_star).cwiseAbs().maxCoeff() - 1.0 : -1.0;
  const double quad_viol =
      (M_quad_ * res.d_star).squaredNorm() - eps_;
  if (box_viol > kConstraintSlack || quad_viol > kConstraintSlack * std::max(1.0, eps_)) {
    throw Error(ErrorKind::NumericalFailure, "solution violates constraints beyond slack");
  }
  return res;
}

SolveResult solve_qclp(const ConvexProblem& problem) {
  return QclpSolver(problem.Q_box, problem.M_quad, problem.F_eq, problem.eps_prime)
      .maximize(problem.c);
}

ImpactReport algorithm1(const GaussianSummary& summary, const DecisionLayout& layout, int jobs) {
  ImpactReport report;
  report.epsilon_prime = summary.epsilon_prime;
  if (summary.infeasible()) return report;
  report.feasible = true;
  if (summary.unbounded()) {
    report.unbounded = true;
    report.I1_prime = 1.0;
    report.I2_prime = std::numeric_limits<double>::infinity();
    return report;
  }

  const QclpSolver solver(layout.Q, summary.T_R, layout.F, summary.epsilon_prime);
  const Index n = summary.T_Z.rows();
  report.per_index.resize(static_cast<std::size_t>(n));
  std::vector<std::string> failures(static_cast<std::size_t>(n));

  auto work = [&](Index first, Index stride) {
    for (Index i = first; i < n; i += stride) {
      auto& out = report.per_index[static_cast<std::size_t>(i)];
      try {
        const Vector c = summary.T_Z.row(i).transpose();
        const SolveResult r = solver.maximize(c);
        if (r.status != SolveStatus::Optimal) {
          failures[static_cast<std::size_t>(i)] = "solver did not return an optimum";
          continue;
        }
        out.d = r.d_star;
        out.mu = c.dot(r.d_star);
        out.sigma = std::sqrt(summary.Sigma_Z(i, i));
        out.P = numcore::gaussian_exceed(out.mu, out.sigma);
        out.kkt_residual = r.kkt_residual;
      } catch (const Error& e) {
        failures[static_cast<std::size_t>(i)] = e.what();
      }
    }
  };

  const int workers = std::clamp<int>(jobs, 1, static_cast<int>(std::max<Index>(n, 1)));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& th : pool) th.join();
  }
  for (Index i = 0; i < n; ++i) {
    if (!failures[static_cast<std::size_t>(i)].empty()) {
      throw Error(ErrorKind::NumericalFailure,
                  "index " + std::to_string(i + 1) + ": " + failures[static_cast<std::size_t>(i)]);
    }
  }

  report.I1_prime = -1.0;
  report.I2_prime = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < n; ++i) {
    const auto& r = report.per_index[static_cast<std::size_t>(i)];
    if (r.P > report.I1_prime) {
      report.I1_prime = r.P;
      report.argmax_index = i;
    }
    if (r.mu > report.I2_prime) {
      report.I2_prime = r.mu;
      report.argmax_I2_index = i;
    }
    report.max_kkt_residual = std::max(report.max_kkt_residual, r.kkt_residual);
  }
  return report;
}

double lower_bound_I2(const ImpactReport& report) {
  return report.feasible ? report.I2_prime : 0.0;
}

}  // namespace cpsimpact
