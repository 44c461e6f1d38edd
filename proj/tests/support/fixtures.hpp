#pragma once

// Shared models for the tests: the chemical-process example built directly in
// code, plus generators of random stable closed loops.

#include <random>

#include "cpsimpact/attacks.hpp"
#include "cpsimpact/distrib.hpp"
#include "cpsimpact/sysmodel.hpp"

namespace cpsimpact::fixtures {

inline PlantModel chemical_plant() {
  PlantModel p;
  p.A.resize(3, 3);
  p.A << 0.96, 0, 0, 0.04, 0.97, 0, -0.04, 0, 0.90;
  p.B.resize(3, 4);
  p.B << 8.8, -2.3, 0, 0, 0.20, 2.2, 4.9, 0, -0.21, -2.2, 1.9, 21;
  p.C = Matrix::Identity(3, 3);
  p.Sigma_v = 0.05 * Matrix::Identity(3, 3);
  p.Sigma_w = 0.01 * Matrix::Identity(3, 3);
  return p;
}

inline ControllerModel chemical_controller() {
  ControllerModel c;
  c.L_xhat.resize(4, 3);
  c.L_xhat << 10, 1.8, -0.1, -2.0, 7.1, -0.5, 1.4, 16, 0.2, -0.4, -0.7, 4.2;
  c.L_xhat *= 0.01;
  c.L_yr.resize(4, 3);
  c.L_yr << 11, 11, 0, -1, 44, 0, 0, 0, 0, 0, 4.7, 4.7;
  c.L_yr *= 0.01;
  c.Q_yr = 0.4 * Matrix::Identity(3, 3);
  return c;
}

inline Matrix chemical_Qz() {
  Matrix Q(1, 6);
  Q << 0, 0, 1.0 / 3.0, 0, 0, 0;
  return Q;
}

inline SystemModel chemical_system() {
  return make_system(chemical_plant(), chemical_controller(), chemical_Qz());
}

inline const ResourceSet kVuln1{{2, 3}, {3, 4}};
inline const ResourceSet kVuln2{{1}, {1, 2}};

struct Pipeline {
  SystemModel sys;
  NominalLoop nominal;
  StationaryLaw law;
};

inline Pipeline make_pipeline(const SystemModel& sys) {
  Pipeline p{sys, assemble_nominal(sys), {}};
  p.law = stationary_law(p.nominal);
  return p;
}

struct Analysis {
  AttackMatrices attack;
  DecisionLayout layout;
  GaussianSummary summary;
};

inline Analysis analyze_strategy(const Pipeline& p, const StrategySpec& spec, Index N,
                                 double epsilon) {
  Analysis a;
  a.attack = build_attack(spec, p.sys, p.nominal, N);
  a.layout = decision_layout(a.attack, N, p.sys.controller.Q_yr);
  a.summary = analyze(p.sys, p.nominal, p.law, a.attack, a.layout, epsilon);
  return a;
}

inline StrategySpec spec_of(StrategyKind kind, const ResourceSet& res) {
  StrategySpec s;
  s.kind = kind;
  s.resources = res;
  return s;
}

inline Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

inline Matrix random_spd(std::mt19937_64& rng, Index n, double floor = 0.05) {
  const Matrix R = random_matrix(rng, n, n, 0.3);
  return R * R.transpose() + floor * Matrix::Identity(n, n);
}

inline Matrix random_stable(std::mt19937_64& rng, Index n, double radius = 0.9) {
  Matrix A = random_matrix(rng, n, n);
  const double rho = numcore::spectral_radius(A);
  return A * (radius / std::max(rho, 1e-12));
}

/// Random observable/controllable plant with a stabilizing small-gain
/// controller; retries until the nominal loop is Schur stable.
inline SystemModel random_system(std::mt19937_64& rng, Index nx, Index ny, Index nu, Index nyr,
                                 Index nz = 1) {
  std::uniform_real_distribution<double> radius(0.3, 0.95);
  for (;;) {
    PlantModel p;
    p.A = random_stable(rng, nx, radius(rng));
    p.B = random_matrix(rng, nx, nu);
    p.C = random_matrix(rng, ny, nx);
    p.Sigma_v = random_spd(rng, nx);
    p.Sigma_w = random_spd(rng, ny);
    ControllerModel c;
    c.L_xhat = random_matrix(rng, nu, nx, 0.1);
    c.L_yr = random_matrix(rng, nu, nyr, 0.3);
    c.Q_yr = Matrix::Identity(nyr, nyr) * 0.5;
    const Matrix Qz = random_matrix(rng, nz, nx, 0.5);
    try {
      auto sys = make_system(p, c, Qz);
      (void)assemble_nominal(sys);
      return sys;
    } catch (const std::exception&) {
    }
  }
}

}  // namespace cpsimpact::fixtures
