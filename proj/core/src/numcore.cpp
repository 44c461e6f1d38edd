#include "cpsimpact/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cpsimpact/error.hpp"

namespace cpsimpact {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::UnstableClosedLoop: return "UnstableClosedLoop";
    case ErrorKind::UnstableMatrix: return "UnstableMatrix";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidPermutation: return "InvalidPermutation";
    case ErrorKind::EmptyResources: return "EmptyResources";
    case ErrorKind::OverlappingSets: return "OverlappingSets";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SigmaZNotPd: return "SigmaZNotPd";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

namespace numcore {
namespace {

Matrix riccati_map(const Matrix& A, const Matrix& C, const Matrix& Sigma_v, const Matrix& Sigma_w,
                   const Matrix& P) {
  const Matrix S = C * P * C.transpose() + Sigma_w;
  const Matrix APCt = A * P * C.transpose();
  return A * P * A.transpose() + Sigma_v - APCt * S.ldlt().solve(APCt.transpose());
}

void require_square(const Matrix& M, const char* name) {
  if (M.rows() != M.cols()) {
    throw Error(ErrorKind::DimensionMismatch, std::string(name) + " must be square");
  }
}

std::pair<Eigen::Index, Matrix> svd_rank_and_v(const Matrix& A) {
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Eigen::Index r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cut = kRankTolerance * s(0);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) >= cut) ++r;
    }
  }
  return {r, svd.matrixV()};
}

}  // namespace

double dare_residual(const Matrix& A, const Matrix& C, const Matrix& Sigma_v,
                     const Matrix& Sigma_w, const Matrix& Sigma_e) {
  const Matrix next = riccati_map(A, C, Sigma_v, Sigma_w, Sigma_e);
  const double scale = std::max(Sigma_e.norm(), std::numeric_limits<double>::min());
  return (next - Sigma_e).norm() / scale;
}

Matrix solve_dare(const Matrix& A, const Matrix& C, const Matrix& Sigma_v, const Matrix& Sigma_w) {
  require_square(A, "A");
  if (C.cols() != A.rows() || Sigma_v.rows() != A.rows() || Sigma_v.cols() != A.rows() ||
      Sigma_w.rows() != C.rows() || Sigma_w.cols() != C.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "solve_dare: inconsistent dimensions");
  }
  Matrix P = symmetrize(Sigma_v);
  for (int it = 0; it < kDareMaxIterations; ++it) {
    Matrix next = symmetrize(riccati_map(A, C, Sigma_v, Sigma_w, P));
    const double change = (next - P).norm() / std::max(next.norm(), std::numeric_limits<double>::min());
    P = std::move(next);
    if (!P.allFinite()) break;
    if (change <= kDareTolerance) return P;
  }
  throw Error(ErrorKind::NonConvergence, "Riccati iteration did not reach tolerance");
}

KalmanGain kalman_gain(const Matrix& A, const Matrix& C, const Matrix& Sigma_e,
                       const Matrix& Sigma_w) {
  KalmanGain out;
  out.Sigma_r = symmetrize(C * Sigma_e * C.transpose() + Sigma_w);
  const Matrix APCt = A * Sigma_e * C.transpose();
  out.K = out.Sigma_r.ldlt().solve(APCt.transpose()).transpose();
  const double rho = spectral_radius(A - out.K * C);
  if (!(rho < 1.0)) {
    throw Error(ErrorKind::UnstableClosedLoop,
                "spectral radius of A - K C is " + std::to_string(rho));
  }
  return out;
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  require_square(A, "A");
  if (Q.rows() != A.rows() || Q.cols() != A.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "solve_lyapunov: Q must match A");
  }
  const double rho = spectral_radius(A);
  if (!(rho < 1.0)) {
    throw Error(ErrorKind::UnstableMatrix, "spectral radius " + std::to_string(rho) + " >= 1");
  }
  const Eigen::Index n = A.rows();
  if (n == 0) return Matrix(0, 0);

  if (n <= kKroneckerLyapunovMaxDim) {
    const Eigen::Index nn = n * n;
    Matrix lhs = Matrix::Identity(nn, nn);
    // (A kron A) vec(X) = vec(A X A'), column-major vec
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index l = 0; l < n; ++l) {
        lhs.block(j * n, l * n, n, n) -= A(j, l) * A;
      }
    }
    const Vector rhs = Eigen::Map<const Vector>(Q.data(), nn);
    Vector x = lhs.partialPivLu().solve(rhs);
    return symmetrize(Eigen::Map<Matrix>(x.data(), n, n));
  }

  Matrix X = Q;
  Matrix Ak = A;
  for (int it = 0; it < 128; ++it) {
    Matrix increment = Ak * X * Ak.transpose();
    X += increment;
    Ak = (Ak * Ak).eval();
    if (increment.norm() <= 1e-17 * X.norm() || Ak.norm() < 1e-300) break;
  }
  return symmetrize(X);
}

double lyapunov_residual(const Matrix& A, const Matrix& Q, const Matrix& X) {
  const Matrix r = A * X * A.transpose() + Q - X;
  return r.norm() / std::max(X.norm(), std::numeric_limits<double>::min());
}

double gaussian_exceed(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::DegenerateVariance, "sigma must be positive and finite");
  }
  const double scale = 1.0 / (sigma * std::sqrt(2.0));
  const double p = 0.5 * std::erfc((1.0 - mu) * scale) + 0.5 * std::erfc((1.0 + mu) * scale);
  return std::clamp(p, 0.0, 1.0);
}

double spectral_radius(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

SpdCheck check_spd(const Matrix& S) {
  SpdCheck out;
  if (S.rows() == 0) {
    out.is_positive_definite = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S), Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.max_eigenvalue = es.eigenvalues().maxCoeff();
  out.is_positive_definite =
      out.min_eigenvalue > kPdTolerance * std::max(1.0, out.max_eigenvalue);
  return out;
}

Eigen::Index rank(const Matrix& A) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(A);
  const auto& s = svd.singularValues();
  if (s(0) <= 0.0) return 0;
  return (s.array() >= kRankTolerance * s(0)).count();
}

bool null_space_contained(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "null_space_contained: column counts differ");
  }
  if (B.rows() == 0 || B.norm() == 0.0) return true;
  const double a_norm = A.rows() > 0 ? A.norm() : 0.0;
  if (a_norm == 0.0) return false;
  // row scaling of B leaves null(B) unchanged and keeps both blocks comparable
  Matrix stacked(A.rows() + B.rows(), A.cols());
  stacked << A, B * (a_norm / B.norm());
  return rank(stacked) == rank(A);
}

Matrix null_space_basis(const Matrix& A) {
  const Eigen::Index n = A.cols();
  if (A.rows() == 0 || A.norm() == 0.0) return Matrix::Identity(n, n);
  auto [r, V] = svd_rank_and_v(A);
  return V.rightCols(n - r);
}

Matrix row_space_basis(const Matrix& A) {
  const Eigen::Index n = A.cols();
  if (A.rows() == 0 || A.norm() == 0.0) return Matrix(n, 0);
  auto [r, V] = svd_rank_and_v(A);
  return V.leftCols(r);
}

Matrix symmetric_sqrt(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix symmetric_inverse_sqrt(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S));
  const Vector& ev = es.eigenvalues();
  if (ev.size() > 0 && !(ev.minCoeff() > kPdTolerance * std::max(1.0, ev.maxCoeff()))) {
    throw Error(ErrorKind::NotPositiveDefinite, "inverse square root of a singular matrix");
  }
  const Vector inv_root = ev.cwiseSqrt().cwiseInverse();
  return symmetrize(es.eigenvectors() * inv_root.asDiagonal() * es.eigenvectors().transpose());
}

double log_det_spd(const Matrix& S) {
  if (S.rows() == 0) return 0.0;
  Eigen::LLT<Matrix> llt(symmetrize(S));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
  }
  const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < diag.size(); ++i) {
    if (!(diag(i) > 0.0)) throw Error(ErrorKind::NotPositiveDefinite, "zero pivot in Cholesky");
    acc += 2.0 * std::log(diag(i));
  }
  return acc;
}

Matrix observability_matrix(const Matrix& A, const Matrix& C) {
  const Eigen::Index n = A.rows();
  Matrix O(C.rows() * n, n);
  Matrix block = C;
  for (Eigen::Index k = 0; k < n; ++k) {
    O.middleRows(k * C.rows(), C.rows()) = block;
    block = (block * A).eval();
  }
  return O;
}

Matrix controllability_matrix(const Matrix& A, const Matrix& B) {
  const Eigen::Index n = A.rows();
  Matrix W(n, B.cols() * n);
  Matrix block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    W.middleCols(k * B.cols(), B.cols()) = block;
    block = (A * block).eval();
  }
  return W;
}

}  // namespace numcore
}  // namespace cpsimpact
