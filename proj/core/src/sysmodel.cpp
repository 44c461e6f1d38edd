#include "cpsimpact/sysmodel.hpp"

#include <algorithm>
#include <string>

#include "cpsimpact/error.hpp"

namespace cpsimpact {
namespace {

void expect_dims(const Matrix& M, Index rows, Index cols, const char* name) {
  if (M.rows() != rows || M.cols() != cols) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(name) + " is " + std::to_string(M.rows()) + "x" +
                    std::to_string(M.cols()) + ", expected " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }
}

void expect_spd(const Matrix& M, const char* name) {
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::NotPositiveDefinite, std::string(name) + " is not symmetric");
  }
  if (!numcore::check_spd(M).is_positive_definite) {
    throw Error(ErrorKind::NotPositiveDefinite, std::string(name) + " is not positive definite");
  }
}

}  // namespace

void PlantModel::validate() const {
  const Index nx = n_x();
  if (nx == 0) throw Error(ErrorKind::DimensionMismatch, "plant has no states");
  expect_dims(A, nx, nx, "A");
  expect_dims(B, nx, B.cols(), "B");
  expect_dims(C, C.rows(), nx, "C");
  expect_dims(Sigma_v, nx, nx, "Sigma_v");
  expect_dims(Sigma_w, n_y(), n_y(), "Sigma_w");
  expect_spd(Sigma_v, "Sigma_v");
  expect_spd(Sigma_w, "Sigma_w");
  if (numcore::rank(numcore::observability_matrix(A, C)) != nx) {
    throw Error(ErrorKind::SchemaError, "(C, A) is not observable");
  }
  if (numcore::rank(numcore::controllability_matrix(A, B)) != nx) {
    throw Error(ErrorKind::SchemaError, "(B, A) is not controllable");
  }
}

void ControllerModel::validate(const PlantModel& plant) const {
  expect_dims(L_xhat, plant.n_u(), plant.n_x(), "L_xhat");
  expect_dims(L_yr, plant.n_u(), n_yr(), "L_yr");
  expect_dims(Q_yr, n_yr(), n_yr(), "Q_yr");
  if (numcore::rank(Q_yr) != n_yr()) {
    throw Error(ErrorKind::SchemaError, "Q_yr is not full rank");
  }
}

ChannelMaps ChannelMaps::identity(Index n_y, Index n_u) {
  return {Matrix::Identity(n_y, n_y), Matrix::Identity(n_u, n_u), Matrix(n_y, 0), Matrix(n_u, 0)};
}

EstimatorModel build_estimator(const PlantModel& plant) {
  EstimatorModel est;
  est.Sigma_e = numcore::solve_dare(plant.A, plant.C, plant.Sigma_v, plant.Sigma_w);
  auto gain = numcore::kalman_gain(plant.A, plant.C, est.Sigma_e, plant.Sigma_w);
  est.K = std::move(gain.K);
  est.Sigma_r = std::move(gain.Sigma_r);
  est.Sigma_r_invsqrt = numcore::symmetric_inverse_sqrt(est.Sigma_r);
  return est;
}

SystemModel make_system(const PlantModel& plant, const ControllerModel& controller,
                        const Matrix& Q_z) {
  plant.validate();
  controller.validate(plant);
  const Index nx = plant.n_x();
  if (Q_z.rows() == 0 || (Q_z.cols() != nx && Q_z.cols() != 2 * nx)) {
    throw Error(ErrorKind::DimensionMismatch, "Q_z must have n_x or 2 n_x columns");
  }
  SystemModel sys{plant, controller, build_estimator(plant), Matrix::Zero(Q_z.rows(), 2 * nx)};
  sys.Q_z.leftCols(Q_z.cols()) = Q_z;
  // Q_z has to read the plant state; xhat columns are allowed but x must be full row rank
  if (numcore::rank(sys.Q_z.leftCols(nx)) != Q_z.rows()) {
    throw Error(ErrorKind::SchemaError, "Q_z restricted to the plant state is not full row rank");
  }
  return sys;
}

ExtendedSystem assemble_extended(const PlantModel& plant, const ControllerModel& controller,
                                 const EstimatorModel& est, const ChannelMaps& ch) {
  const Index nx = plant.n_x(), ny = plant.n_y(), nu = plant.n_u(), nyr = controller.n_yr();
  expect_dims(ch.Lambda_y, ny, ny, "Lambda_y");
  expect_dims(ch.Lambda_u, nu, nu, "Lambda_u");
  expect_dims(ch.Gamma_y, ny, ch.Gamma_y.cols(), "Gamma_y");
  expect_dims(ch.Gamma_u, nu, ch.Gamma_u.cols(), "Gamma_u");
  expect_dims(est.K, nx, ny, "K");

  const Matrix& A = plant.A;
  const Matrix& B = plant.B;
  const Matrix& C = plant.C;
  const Matrix& K = est.K;
  const Matrix& L = controller.L_xhat;
  const Matrix& S = est.Sigma_r_invsqrt;
  const Index nay = ch.n_ay(), nau = ch.n_au();

  ExtendedSystem ext;
  ext.n_x = nx;
  ext.n_y = ny;
  ext.n_u = nu;
  ext.n_yr = nyr;
  ext.n_ay = nay;
  ext.n_au = nau;
  ext.n_a = nay + nau;
  ext.n_f = nx + ny;

  ext.Atil.resize(2 * nx, 2 * nx);
  ext.Atil << A, -B * ch.Lambda_u * L, K * ch.Lambda_y * C, A - K * C - B * L;

  ext.Btil = Matrix::Zero(2 * nx, nx + ny);
  ext.Btil.topLeftCorner(nx, nx).setIdentity();
  ext.Btil.bottomRightCorner(nx, ny) = K * ch.Lambda_y;

  ext.Ctil.resize(ny, 2 * nx);
  ext.Ctil << S * ch.Lambda_y * C, -S * C;

  ext.Dtil = Matrix::Zero(ny, nx + ny);
  ext.Dtil.rightCols(ny) = S * ch.Lambda_y;

  ext.Etil.resize(2 * nx, nyr);
  ext.Etil << B * ch.Lambda_u * controller.L_yr, B * controller.L_yr;

  ext.Ftil = Matrix::Zero(ny, nyr);

  ext.Gtil = Matrix::Zero(2 * nx, nau + nay);
  ext.Gtil.topLeftCorner(nx, nau) = B * ch.Gamma_u;
  ext.Gtil.bottomRightCorner(nx, nay) = K * ch.Gamma_y;

  ext.Htil = Matrix::Zero(ny, nau + nay);
  ext.Htil.rightCols(nay) = S * ch.Gamma_y;

  ext.Jtil = Matrix::Zero(2 * nx, nay);
  ext.Jtil.bottomRows(nx) = K * ch.Gamma_y;

  ext.Ktil = S * ch.Gamma_y;
  return ext;
}

NominalLoop assemble_nominal(const PlantModel& plant, const ControllerModel& controller,
                             const EstimatorModel& est) {
  const auto ext =
      assemble_extended(plant, controller, est, ChannelMaps::identity(plant.n_y(), plant.n_u()));
  NominalLoop loop{ext.Atil, ext.Btil, ext.Etil, Matrix::Zero(plant.n_f(), plant.n_f())};
  loop.Sigma_f.topLeftCorner(plant.n_x(), plant.n_x()) = plant.Sigma_v;
  loop.Sigma_f.bottomRightCorner(plant.n_y(), plant.n_y()) = plant.Sigma_w;
  const double rho = numcore::spectral_radius(loop.A_e);
  if (!(rho < 1.0)) {
    throw Error(ErrorKind::UnstableMatrix,
                "nominal closed loop has spectral radius " + std::to_string(rho));
  }
  return loop;
}

}  // namespace cpsimpact
