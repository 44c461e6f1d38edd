#pragma once

// Gaussian propagation over the attack window. Under any attack in the
// catalog, z_{1:N} ~ N(T_Z d, Sigma_Z) and r~_{0:N} ~ N(T_R d, Sigma_R), where
// only the means depend on the decision vector d = [a_{0:N}; y_r].

#include "cpsimpact/attacks.hpp"
#include "cpsimpact/sysmodel.hpp"

namespace cpsimpact {

struct StationaryLaw {
  Matrix T_0;      // 2n_x x n_yr, E[x_e] = T_0 y_r
  Matrix Sigma_0;  // 2n_x x 2n_x
};

/// Linear maps from the window sources
///   (x_e(N_s), f_{N_s:N}, y_r, a_{0:N}, a_s{0:N})
/// to z_{1:N} (P_*) and r~_{0:N} (R_*). The primed maps have the affine law of
/// a_s substituted in, so they act on (x_e(N_s), f_{N_s:N}, y_r) directly.
struct StackedMaps {
  Matrix P_x, P_f, P_r, P_a, P_s;
  Matrix R_x, R_f, R_r, R_a, R_s;
  Matrix Pp_x, Pp_f, Pp_r;
  Matrix Rp_x, Rp_f, Rp_r;
  Index N = 0;
  Index N_s = 0;
  Index n_f = 0;
  Index n_z = 0;
  Index n_y = 0;

  [[nodiscard]] Index window_blocks() const { return N - N_s + 1; }
};

struct GaussianSummary {
  Matrix T_0, Sigma_0;
  Matrix T_Z, Sigma_Z;
  Matrix T_R, Sigma_R;
  double epsilon = 0.0;
  double epsilon_prime = 0.0;  // meaningful only when assumption2_ok
  bool assumption2_ok = false;
  bool assumption3_ok = false;
  double sigma_z_min_eigenvalue = 0.0;
  Index N = 0;
  Index n_y = 0;

  /// Stealthiness admits no attack: Sigma_R singular or epsilon' < 0.
  [[nodiscard]] bool infeasible() const { return !assumption2_ok || epsilon_prime < 0.0; }
  /// Feasible, yet some direction moves T_Z d without touching any constraint.
  [[nodiscard]] bool unbounded() const { return !infeasible() && !assumption3_ok; }
};

/// Mean map and covariance of x_e once the attack-free loop is stationary.
/// Throws UnstableMatrix.
[[nodiscard]] StationaryLaw stationary_law(const NominalLoop& nominal);

/// Unrolls the nominal loop on [N_s, -1] and the attacked loop on [0, N].
[[nodiscard]] StackedMaps stack_dynamics(const ExtendedSystem& ext, const AttackMatrices& attack,
                                         const NominalLoop& nominal, const Matrix& Q_z, Index N);

/// Assembles T_Z, Sigma_Z, T_R, Sigma_R and runs the feasibility audits.
/// Throws SigmaZNotPd if Sigma_Z fails the positive definiteness test.
[[nodiscard]] GaussianSummary summarize(const StackedMaps& maps, const StationaryLaw& law,
                                        const Matrix& Sigma_f, const DecisionLayout& layout,
                                        double epsilon);

/// (N+1)(2 eps + n_y) - tr(Sigma_R) + ln det(Sigma_R). Throws NotPositiveDefinite.
[[nodiscard]] double epsilon_prime(const Matrix& Sigma_R, Index N, Index n_y, double epsilon);

/// D(N(mu1, Sigma1) || N(mu2, Sigma2)). Throws NotPositiveDefinite.
[[nodiscard]] double kl_divergence_gaussian(const Vector& mu1, const Matrix& Sigma1,
                                            const Vector& mu2, const Matrix& Sigma2);

/// Convenience: stationary law, maps and summary for one attack.
[[nodiscard]] GaussianSummary analyze(const SystemModel& sys, const NominalLoop& nominal,
                                      const StationaryLaw& law, const AttackMatrices& attack,
                                      const DecisionLayout& layout, double epsilon);

}  // namespace cpsimpact
