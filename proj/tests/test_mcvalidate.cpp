#include <gtest/gtest.h>

#include <cmath>

#include "cpsimpact/error.hpp"
#include "cpsimpact/mcvalidate.hpp"
#include "cpsimpact/solver.hpp"
#include "support/fixtures.hpp"

using namespace cpsimpact;
using namespace cpsimpact::fixtures;

namespace {

SimulationConfig config(std::size_t samples, std::uint64_t seed = 7, int jobs = 1) {
  SimulationConfig cfg;
  cfg.samples = samples;
  cfg.seed = seed;
  cfg.jobs = jobs;
  return cfg;
}

struct Solved {
  Analysis an;
  ImpactReport rep;
  Vector d;
};

Solved solve(const Pipeline& p, StrategyKind kind, const ResourceSet& res, Index N = 10,
             double eps = 0.3) {
  Solved s{analyze_strategy(p, spec_of(kind, res), N, eps), {}, {}};
  s.rep = algorithm1(s.an.summary, s.an.layout);
  s.d = *s.rep.best_d();
  return s;
}

}  // namespace

TEST(Simulate, NoAttackResidualIsWhite) {
  const auto p = make_pipeline(chemical_system());
  const auto an = analyze_strategy(p, spec_of(StrategyKind::DoS, {}), 5, 0.3);
  const Vector d = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const std::size_t n = 40000;
  const auto emp = simulate(p.sys, p.law, an.attack, d, config(n));
  const double bound = 4.0 / std::sqrt(static_cast<double>(n));
  for (Index i = 0; i < emp.r_mean.size(); ++i) EXPECT_LE(std::abs(emp.r_mean(i)), bound) << i;
  // unit covariance: each entry's sampling error is about sqrt(2/n) on the diagonal
  const Index m = emp.r_cov.rows();
  EXPECT_LT((emp.r_cov - Matrix::Identity(m, m)).cwiseAbs().maxCoeff(), 6.0 * std::sqrt(2.0 / n));
}

TEST(Simulate, FdiExceedanceMatchesAnalyticProbability) {
  const auto p = make_pipeline(chemical_system());
  const auto s = solve(p, StrategyKind::FDI, kVuln2);
  const std::size_t n = 40000;
  const auto emp = simulate(p.sys, p.law, s.an.attack, s.d, config(n));
  const auto i = static_cast<std::size_t>(s.rep.argmax_index);
  const double P = s.rep.per_index[i].P;
  const double se = std::sqrt(P * (1.0 - P) / static_cast<double>(n));
  EXPECT_LE(std::abs(emp.exceed_freq(s.rep.argmax_index) - P), 3.0 * se);
  for (Index k = 0; k < emp.exceed_freq.size(); ++k) {
    EXPECT_GE(emp.exceed_freq(k), 0.0);
    EXPECT_LE(emp.exceed_freq(k), 1.0);
  }
}

TEST(Simulate, ReplayMeanAndCovarianceMatchStackedMaps) {
  const auto p = make_pipeline(chemical_system());
  const auto s = solve(p, StrategyKind::ReplayDos, kVuln2);
  const std::size_t n = 40000;
  const auto emp = simulate(p.sys, p.law, s.an.attack, s.d, config(n));
  const Vector mean = s.an.summary.T_Z * s.d;
  const Matrix& S = s.an.summary.Sigma_Z;
  for (Index k = 0; k < mean.size(); ++k) {
    const double se = std::sqrt(S(k, k) / static_cast<double>(n));
    EXPECT_LE(std::abs(emp.z_mean(k) - mean(k)), 4.0 * se) << "z index " << k + 1;
    for (Index j = 0; j <= k; ++j) {
      const double cse = std::sqrt((S(k, k) * S(j, j) + S(k, j) * S(k, j)) / static_cast<double>(n));
      EXPECT_LE(std::abs(emp.z_cov(k, j) - S(k, j)), 4.0 * cse) << k << "," << j;
    }
  }
  EXPECT_LT((emp.z_cov - emp.z_cov.transpose()).norm(), 1e-12);
}

TEST(Simulate, JensenLowerBound) {
  const auto p = make_pipeline(chemical_system());
  const auto s = solve(p, StrategyKind::FDI, kVuln2);
  // the maximizer of mu gives the I2 lower bound
  const Vector d = s.rep.per_index[static_cast<std::size_t>(s.rep.argmax_I2_index)].d;
  const auto emp = simulate(p.sys, p.law, s.an.attack, d, config(20000));
  const double bound = (s.an.summary.T_Z * d).cwiseAbs().maxCoeff();
  EXPECT_NEAR(bound, lower_bound_I2(s.rep), 1e-9 * bound);
  EXPECT_GE(emp.E_inf_norm, bound - 3.0 * emp.inf_norm_se);
}

TEST(Simulate, ReproducibleAndIndependentOfJobs) {
  const auto p = make_pipeline(chemical_system());
  const auto s = solve(p, StrategyKind::BiasInjection, kVuln2);
  const auto a = simulate(p.sys, p.law, s.an.attack, s.d, config(3000, 11, 1));
  const auto b = simulate(p.sys, p.law, s.an.attack, s.d, config(3000, 11, 1));
  const auto c = simulate(p.sys, p.law, s.an.attack, s.d, config(3000, 11, 3));
  const auto other = simulate(p.sys, p.law, s.an.attack, s.d, config(3000, 12, 1));
  EXPECT_EQ(a.z_mean, b.z_mean);
  EXPECT_EQ(a.z_cov, b.z_cov);
  EXPECT_EQ(a.r_cov, b.r_cov);
  EXPECT_EQ(a.z_mean, c.z_mean);
  EXPECT_EQ(a.z_cov, c.z_cov);
  EXPECT_EQ(a.exceed_freq, c.exceed_freq);
  EXPECT_EQ(a.E_inf_norm, c.E_inf_norm);
  EXPECT_NE(a.z_mean, other.z_mean);
  EXPECT_NE(trajectory_seed(1, 0), trajectory_seed(1, 1));
  EXPECT_NE(trajectory_seed(1, 0), trajectory_seed(2, 0));
}

TEST(Simulate, RejectsWrongDecisionLength) {
  const auto p = make_pipeline(chemical_system());
  const auto an = analyze_strategy(p, spec_of(StrategyKind::FDI, kVuln2), 4, 0.3);
  try {
    (void)simulate(p.sys, p.law, an.attack, Vector::Zero(3), config(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(SimulateStationary, MatchesStationaryLaw) {
  const auto p = make_pipeline(chemical_system());
  const Vector y_r = (Vector(3) << 0.7, 1.1, -1.6).finished();
  SimulationConfig cfg = config(20000, 5);
  cfg.burn_in = 500;
  const auto emp = simulate_stationary(p.sys, y_r, cfg);
  const Vector mean = p.law.T_0 * y_r;
  const Matrix& S = p.law.Sigma_0;
  const double n = static_cast<double>(cfg.samples);
  for (Index i = 0; i < mean.size(); ++i) {
    EXPECT_LE(std::abs(emp.mean(i) - mean(i)), 3.0 * std::sqrt(S(i, i) / n)) << i;
    for (Index j = 0; j <= i; ++j) {
      const double se = std::sqrt((S(i, i) * S(j, j) + S(i, j) * S(i, j)) / n);
      EXPECT_LE(std::abs(emp.cov(i, j) - S(i, j)), 3.0 * se) << i << "," << j;
    }
  }
}

TEST(EmpiricalKl, ZeroAttackIsStealthy) {
  const auto p = make_pipeline(chemical_system());
  const auto an = analyze_strategy(p, spec_of(StrategyKind::FDI, kVuln2), 10, 0.3);
  const Vector d = Vector::Zero(an.layout.dim_d);
  const auto kl = empirical_kl_check(p.sys, p.law, an.attack, an.summary, d, config(20000));
  EXPECT_EQ(kl.quad_form, 0.0);
  EXPECT_TRUE(kl.analytic_ok);
  EXPECT_TRUE(kl.empirical_ok);
  EXPECT_TRUE(kl.agree);
  EXPECT_LT(kl.empirical_rate, 0.05);
}

TEST(EmpiricalKl, BoundaryAndBeyond) {
  const auto p = make_pipeline(chemical_system());
  const auto s = solve(p, StrategyKind::FDI, kVuln2);
  Vector d = s.d;
  const double q = (s.an.summary.T_R * d).squaredNorm();
  d *= std::sqrt(s.an.summary.epsilon_prime / q);  // exactly on the boundary
  const auto on = empirical_kl_check(p.sys, p.law, s.an.attack, s.an.summary, d, config(20000));
  EXPECT_NEAR(on.quad_form, s.an.summary.epsilon_prime, 1e-9 * s.an.summary.epsilon_prime);
  EXPECT_LE(std::abs(on.empirical_rate - 0.3), on.slack);
  EXPECT_TRUE(on.agree);

  const auto off = empirical_kl_check(p.sys, p.law, s.an.attack, s.an.summary, 2.0 * d,
                                      config(20000));
  EXPECT_FALSE(off.analytic_ok);
  EXPECT_FALSE(off.empirical_ok);
  EXPECT_TRUE(off.agree);
}

TEST(EmpiricalKl, RequiresPositiveDefiniteResidualCovariance) {
  const auto p = make_pipeline(chemical_system());
  auto an = analyze_strategy(p, spec_of(StrategyKind::FDI, kVuln2), 4, 0.3);
  an.summary.assumption2_ok = false;
  try {
    (void)empirical_kl_check(p.sys, p.law, an.attack, an.summary, Vector::Zero(an.layout.dim_d),
                             config(10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotPositiveDefinite);
  }
}
