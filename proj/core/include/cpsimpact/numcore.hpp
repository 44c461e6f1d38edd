#pragma once

// Control-theoretic numerical primitives shared by the rest of the pipeline.

#include <Eigen/Dense>

namespace cpsimpact {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numcore {

inline constexpr int kDareMaxIterations = 100000;
inline constexpr double kDareTolerance = 1e-10;
inline constexpr double kPdTolerance = 1e-10;
inline constexpr double kRankTolerance = 1e-9;
inline constexpr int kKroneckerLyapunovMaxDim = 20;

struct SpdCheck {
  bool is_positive_definite = false;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
};

struct KalmanGain {
  Matrix K;
  Matrix Sigma_r;
};

/// Steady-state prediction error covariance of the Kalman filter, obtained by
/// iterating the Riccati map from Sigma_v until the relative residual drops
/// below kDareTolerance. Throws NonConvergence otherwise.
[[nodiscard]] Matrix solve_dare(const Matrix& A, const Matrix& C, const Matrix& Sigma_v,
                                const Matrix& Sigma_w);

/// Relative Frobenius residual of the filtering Riccati equation at Sigma_e.
[[nodiscard]] double dare_residual(const Matrix& A, const Matrix& C, const Matrix& Sigma_v,
                                   const Matrix& Sigma_w, const Matrix& Sigma_e);

/// K = A Sigma_e C' (C Sigma_e C' + Sigma_w)^-1. Throws UnstableClosedLoop when
/// A - K C is not Schur stable.
[[nodiscard]] KalmanGain kalman_gain(const Matrix& A, const Matrix& C, const Matrix& Sigma_e,
                                     const Matrix& Sigma_w);

/// Solves X = A X A' + Q. Kronecker system up to kKroneckerLyapunovMaxDim,
/// squaring iteration above. Throws UnstableMatrix if rho(A) >= 1.
[[nodiscard]] Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

[[nodiscard]] double lyapunov_residual(const Matrix& A, const Matrix& Q, const Matrix& X);

/// P(|Z| > 1) for Z ~ N(mu, sigma^2). Throws DegenerateVariance if sigma <= 0.
[[nodiscard]] double gaussian_exceed(double mu, double sigma);

/// null(A) inside null(B), decided by rank([A; B]) == rank(A).
[[nodiscard]] bool null_space_contained(const Matrix& A, const Matrix& B);

[[nodiscard]] double spectral_radius(const Matrix& A);

[[nodiscard]] SpdCheck check_spd(const Matrix& S);

/// Numerical rank with singular values >= kRankTolerance * sigma_max counted.
[[nodiscard]] Eigen::Index rank(const Matrix& A);

/// Orthonormal basis (columns) of null(A). A with zero rows gives identity.
[[nodiscard]] Matrix null_space_basis(const Matrix& A);

/// Orthonormal basis (columns) of the row space of A.
[[nodiscard]] Matrix row_space_basis(const Matrix& A);

/// Symmetric square root of a symmetric PSD matrix; tiny negative eigenvalues
/// from round-off are clamped to zero.
[[nodiscard]] Matrix symmetric_sqrt(const Matrix& S);

/// Symmetric inverse square root of a symmetric positive definite matrix.
[[nodiscard]] Matrix symmetric_inverse_sqrt(const Matrix& S);

/// log det via Cholesky. Throws NotPositiveDefinite when the factorization fails.
[[nodiscard]] double log_det_spd(const Matrix& S);

[[nodiscard]] Matrix observability_matrix(const Matrix& A, const Matrix& C);
[[nodiscard]] Matrix controllability_matrix(const Matrix& A, const Matrix& B);

[[nodiscard]] inline Matrix symmetrize(const Matrix& S) { return 0.5 * (S + S.transpose()); }

}  // namespace numcore
}  // namespace cpsimpact
