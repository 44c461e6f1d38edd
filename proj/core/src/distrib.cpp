#include "cpsimpact/distrib.hpp"

#include <limits>
#include <string>

#include "cpsimpact/error.hpp"

namespace cpsimpact {
namespace {

// Sum over window blocks of P_b Sigma_f P_b' for a block-diagonal Sigma_F.
Matrix blockdiag_congruence(const Matrix& P, const Matrix& Sigma_f) {
  const Index nf = Sigma_f.rows();
  Matrix out = Matrix::Zero(P.rows(), P.rows());
  for (Index b = 0; b * nf < P.cols(); ++b) {
    const auto block = P.middleCols(b * nf, nf);
    out.noalias() += block * Sigma_f * block.transpose();
  }
  return out;
}

}  // namespace

StationaryLaw stationary_law(const NominalLoop& nominal) {
  const Index n = nominal.A_e.rows();
  StationaryLaw law;
  law.Sigma_0 = numcore::solve_lyapunov(
      nominal.A_e, numcore::symmetrize(nominal.B_e * nominal.Sigma_f * nominal.B_e.transpose()));
  law.T_0 = (Matrix::Identity(n, n) - nominal.A_e).partialPivLu().solve(nominal.E_e);
  return law;
}

StackedMaps stack_dynamics(const ExtendedSystem& ext, const AttackMatrices& attack,
                           const NominalLoop& nominal, const Matrix& Q_z, Index N) {
  if (N < 1) throw Error(ErrorKind::DimensionMismatch, "horizon must be >= 1");
  if (attack.horizon != N) {
    throw Error(ErrorKind::DimensionMismatch, "attack matrices were built for another horizon");
  }
  const Index nxe = 2 * ext.n_x, nf = ext.n_f, nyr = ext.n_yr, ny = ext.n_y;
  const Index na = ext.n_a, nay = ext.n_ay;
  if (na != attack.n_a() || nay != attack.n_ay() || Q_z.cols() != nxe) {
    throw Error(ErrorKind::DimensionMismatch, "extended system does not match attack/Q_z");
  }
  const Index Ns = attack.N_s;
  const Index blocks = N - Ns + 1;

  const Index ox = 0;
  const Index of = ox + nxe;
  const Index orr = of + blocks * nf;
  const Index oa = orr + nyr;
  const Index os = oa + (N + 1) * na;
  const Index total = os + (N + 1) * nay;

  const Index nz = Q_z.rows();
  Matrix Z = Matrix::Zero(N * nz, total);
  Matrix R = Matrix::Zero((N + 1) * ny, total);

  Matrix X = Matrix::Zero(nxe, total);
  X.middleCols(ox, nxe).setIdentity();

  for (Index k = Ns; k < 0; ++k) {
    const Index b = k - Ns;
    X = (nominal.A_e * X).eval();
    X.middleCols(of + b * nf, nf) += nominal.B_e;
    X.middleCols(orr, nyr) += nominal.E_e;
  }
  for (Index k = 0; k <= N; ++k) {
    const Index b = k - Ns;
    auto r = R.middleRows(k * ny, ny);
    r.noalias() = ext.Ctil * X;
    r.middleCols(of + b * nf, nf) += ext.Dtil;
    r.middleCols(orr, nyr) += ext.Ftil;
    r.middleCols(oa + k * na, na) += ext.Htil;
    r.middleCols(os + k * nay, nay) += ext.Ktil;
    if (k == N) break;
    X = (ext.Atil * X).eval();
    X.middleCols(of + b * nf, nf) += ext.Btil;
    X.middleCols(orr, nyr) += ext.Etil;
    X.middleCols(oa + k * na, na) += ext.Gtil;
    X.middleCols(os + k * nay, nay) += ext.Jtil;
    Z.middleRows(k * nz, nz).noalias() = Q_z * X;
  }

  StackedMaps m;
  m.N = N;
  m.N_s = Ns;
  m.n_f = nf;
  m.n_z = nz;
  m.n_y = ny;
  auto split = [&](const Matrix& M, Matrix& x, Matrix& f, Matrix& yr, Matrix& a, Matrix& s) {
    x = M.middleCols(ox, nxe);
    f = M.middleCols(of, blocks * nf);
    yr = M.middleCols(orr, nyr);
    a = M.middleCols(oa, (N + 1) * na);
    s = M.middleCols(os, (N + 1) * nay);
  };
  split(Z, m.P_x, m.P_f, m.P_r, m.P_a, m.P_s);
  split(R, m.R_x, m.R_f, m.R_r, m.R_a, m.R_s);

  // a_s = T_sx x_e(N_s) + T_sr y_r + T_sf f_{N_s:-1}; the f-law covers only the
  // recorded prefix of the window
  Matrix Tsf_padded = Matrix::Zero((N + 1) * nay, blocks * nf);
  if (attack.T_sf.cols() > 0) Tsf_padded.leftCols(attack.T_sf.cols()) = attack.T_sf;
  auto fold = [&](const Matrix& x, const Matrix& f, const Matrix& yr, const Matrix& s, Matrix& xo,
                  Matrix& fo, Matrix& ro) {
    xo = x + s * attack.T_sx;
    fo = f + s * Tsf_padded;
    ro = yr + s * attack.T_sr;
  };
  fold(m.P_x, m.P_f, m.P_r, m.P_s, m.Pp_x, m.Pp_f, m.Pp_r);
  fold(m.R_x, m.R_f, m.R_r, m.R_s, m.Rp_x, m.Rp_f, m.Rp_r);
  return m;
}

double epsilon_prime(const Matrix& Sigma_R, Index N, Index n_y, double epsilon) {
  if (!numcore::check_spd(Sigma_R).is_positive_definite) {
    throw Error(ErrorKind::NotPositiveDefinite, "Sigma_R is not positive definite");
  }
  return static_cast<double>(N + 1) * (2.0 * epsilon + static_cast<double>(n_y)) - Sigma_R.trace() +
         numcore::log_det_spd(Sigma_R);
}

double kl_divergence_gaussian(const Vector& mu1, const Matrix& Sigma1, const Vector& mu2,
                              const Matrix& Sigma2) {
  const Index n = mu1.size();
  if (mu2.size() != n || Sigma1.rows() != n || Sigma2.rows() != n) {
    throw Error(ErrorKind::DimensionMismatch, "kl_divergence_gaussian: dimension mismatch");
  }
  Eigen::LLT<Matrix> llt2(numcore::symmetrize(Sigma2));
  if (llt2.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "second covariance is not positive definite");
  }
  const Vector diff = mu2 - mu1;
  const double trace_term = llt2.solve(Sigma1).trace();
  const double mahalanobis = diff.dot(llt2.solve(diff));
  const double log_ratio = numcore::log_det_spd(Sigma2) - numcore::log_det_spd(Sigma1);
  return 0.5 * (trace_term + mahalanobis + log_ratio - static_cast<double>(n));
}

GaussianSummary summarize(const StackedMaps& maps, const StationaryLaw& law, const Matrix& Sigma_f,
                          const DecisionLayout& layout, double epsilon) {
  if (maps.P_a.cols() != layout.n_attack || law.T_0.cols() != layout.n_yr) {
    throw Error(ErrorKind::DimensionMismatch, "decision layout does not match the stacked maps");
  }
  GaussianSummary s;
  s.T_0 = law.T_0;
  s.Sigma_0 = law.Sigma_0;
  s.N = maps.N;
  s.n_y = maps.n_y;
  s.epsilon = epsilon;

  s.T_Z.resize(maps.P_a.rows(), layout.dim_d);
  s.T_Z << maps.P_a, maps.Pp_x * law.T_0 + maps.Pp_r;
  s.Sigma_Z = numcore::symmetrize(maps.Pp_x * law.Sigma_0 * maps.Pp_x.transpose() +
                                  blockdiag_congruence(maps.Pp_f, Sigma_f));

  s.T_R.resize(maps.R_a.rows(), layout.dim_d);
  s.T_R << maps.R_a, maps.Rp_x * law.T_0 + maps.Rp_r;
  s.Sigma_R = numcore::symmetrize(maps.Rp_x * law.Sigma_0 * maps.Rp_x.transpose() +
                                  blockdiag_congruence(maps.Rp_f, Sigma_f));

  const auto z_check = numcore::check_spd(s.Sigma_Z);
  s.sigma_z_min_eigenvalue = z_check.min_eigenvalue;
  if (!z_check.is_positive_definite) {
    throw Error(ErrorKind::SigmaZNotPd,
                "Sigma_Z min eigenvalue " + std::to_string(z_check.min_eigenvalue));
  }

  s.assumption2_ok = numcore::check_spd(s.Sigma_R).is_positive_definite;
  if (s.assumption2_ok) {
    s.epsilon_prime = epsilon_prime(s.Sigma_R, maps.N, maps.n_y, epsilon);
  } else {
    s.epsilon_prime = -std::numeric_limits<double>::infinity();
  }

  Matrix constraints(layout.Q.rows() + s.T_R.rows() + layout.F.rows(), layout.dim_d);
  constraints << layout.Q, s.T_R, layout.F;
  s.assumption3_ok = numcore::null_space_contained(constraints, s.T_Z);
  return s;
}

GaussianSummary analyze(const SystemModel& sys, const NominalLoop& nominal,
                        const StationaryLaw& law, const AttackMatrices& attack,
                        const DecisionLayout& layout, double epsilon) {
  const auto ext = assemble_extended(sys, attack.channels);
  const auto maps = stack_dynamics(ext, attack, nominal, sys.Q_z, attack.horizon);
  return summarize(maps, law, nominal.Sigma_f, layout, epsilon);
}

}  // namespace cpsimpact
