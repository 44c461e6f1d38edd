#pragma once

// Plant, controller and Kalman estimator, plus the two closed loops built from
// them: the loop under attack and the attack-free nominal loop.

#include <Eigen/Dense>

#include "cpsimpact/numcore.hpp"

namespace cpsimpact {

using Index = Eigen::Index;

struct PlantModel {
  Matrix A;        // n_x x n_x
  Matrix B;        // n_x x n_u
  Matrix C;        // n_y x n_x
  Matrix Sigma_v;  // process noise covariance
  Matrix Sigma_w;  // measurement noise covariance

  [[nodiscard]] Index n_x() const { return A.rows(); }
  [[nodiscard]] Index n_u() const { return B.cols(); }
  [[nodiscard]] Index n_y() const { return C.rows(); }
  [[nodiscard]] Index n_f() const { return n_x() + n_y(); }

  /// Throws DimensionMismatch, NotPositiveDefinite, or SchemaError (rank tests).
  void validate() const;
};

/// u(k) = -L_xhat xhat(k) + L_yr y_r with ||Q_yr y_r||_inf <= 1.
struct ControllerModel {
  Matrix L_xhat;  // n_u x n_x
  Matrix L_yr;    // n_u x n_yr
  Matrix Q_yr;    // n_yr x n_yr, invertible

  [[nodiscard]] Index n_yr() const { return L_yr.cols(); }
  void validate(const PlantModel& plant) const;
};

struct EstimatorModel {
  Matrix K;
  Matrix Sigma_e;
  Matrix Sigma_r;
  Matrix Sigma_r_invsqrt;  // symmetric
};

/// Everything fixed by the defender: plant, controller, estimator and the
/// criticality map. Q_z acts on the extended state [x; xhat] (n_z x 2 n_x).
struct SystemModel {
  PlantModel plant;
  ControllerModel controller;
  EstimatorModel estimator;
  Matrix Q_z;

  [[nodiscard]] Index n_z() const { return Q_z.rows(); }
};

/// Multiplicative and additive channel maps of one attack:
/// y~ = Lambda_y y + Gamma_y (a_y + a_s),  u~ = Lambda_u u + Gamma_u a_u.
struct ChannelMaps {
  Matrix Lambda_y;  // n_y x n_y
  Matrix Lambda_u;  // n_u x n_u
  Matrix Gamma_y;   // n_y x n_ay
  Matrix Gamma_u;   // n_u x n_au

  [[nodiscard]] Index n_ay() const { return Gamma_y.cols(); }
  [[nodiscard]] Index n_au() const { return Gamma_u.cols(); }
  [[nodiscard]] Index n_a() const { return n_ay() + n_au(); }

  [[nodiscard]] static ChannelMaps identity(Index n_y, Index n_u);
};

/// x_e(k+1) = Atil x_e + Btil f + Etil y_r + Gtil a + Jtil a_s
/// r~(k)    = Ctil x_e + Dtil f + Ftil y_r + Htil a + Ktil a_s
/// with x_e = [x; xhat], f = [v; w], a = [a_u; a_y].
struct ExtendedSystem {
  Matrix Atil, Btil, Ctil, Dtil, Etil, Ftil, Gtil, Htil, Jtil, Ktil;
  Index n_x = 0, n_y = 0, n_u = 0, n_yr = 0;
  Index n_a = 0, n_ay = 0, n_au = 0, n_f = 0;
};

struct NominalLoop {
  Matrix A_e;      // 2n_x x 2n_x
  Matrix B_e;      // 2n_x x n_f
  Matrix E_e;      // 2n_x x n_yr
  Matrix Sigma_f;  // blockdiag(Sigma_v, Sigma_w)
};

/// Steady-state Kalman filter for the plant. Propagates NonConvergence and
/// UnstableClosedLoop.
[[nodiscard]] EstimatorModel build_estimator(const PlantModel& plant);

/// Validates plant and controller, builds the estimator, and lifts Q_z to the
/// extended state when it is given with n_x columns.
[[nodiscard]] SystemModel make_system(const PlantModel& plant, const ControllerModel& controller,
                                      const Matrix& Q_z);

[[nodiscard]] ExtendedSystem assemble_extended(const PlantModel& plant,
                                               const ControllerModel& controller,
                                               const EstimatorModel& estimator,
                                               const ChannelMaps& channels);

[[nodiscard]] inline ExtendedSystem assemble_extended(const SystemModel& sys,
                                                      const ChannelMaps& channels) {
  return assemble_extended(sys.plant, sys.controller, sys.estimator, channels);
}

/// Throws UnstableMatrix if rho(A_e) >= 1.
[[nodiscard]] NominalLoop assemble_nominal(const PlantModel& plant,
                                           const ControllerModel& controller,
                                           const EstimatorModel& estimator);

[[nodiscard]] inline NominalLoop assemble_nominal(const SystemModel& sys) {
  return assemble_nominal(sys.plant, sys.controller, sys.estimator);
}

}  // namespace cpsimpact
