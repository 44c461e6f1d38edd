#include "cpsimpact/mcvalidate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include "cpsimpact/error.hpp"

namespace cpsimpact {
namespace {

constexpr std::size_t kBlockSize = 1024;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Matrix cholesky_factor(const Matrix& S) {
  Eigen::LLT<Matrix> llt(numcore::symmetrize(S));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NotPositiveDefinite, "noise covariance is not positive definite");
  }
  return llt.matrixL();
}

class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : gen_(seed) {}
  Vector draw(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = dist_(gen_);
    return v;
  }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> dist_;
};

// Running sums for one block; merged in block order for determinism.
struct Moments {
  Vector sum;
  Matrix sum_sq;
  void init(Index n) {
    sum = Vector::Zero(n);
    sum_sq = Matrix::Zero(n, n);
  }
  void add(const Vector& x) {
    sum += x;
    sum_sq.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  void merge(const Moments& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  void finish(std::size_t n, Vector& mean, Matrix& cov) const {
    const double dn = static_cast<double>(n);
    mean = sum / dn;
    Matrix full = sum_sq.selfadjointView<Eigen::Lower>();
    cov = n > 1 ? Matrix((full - dn * mean * mean.transpose()) / (dn - 1.0))
                : Matrix::Zero(mean.size(), mean.size());
  }
};

template <typename BlockFn>
void run_blocks(std::size_t samples, int jobs, BlockFn&& fn) {
  const std::size_t blocks = (samples + kBlockSize - 1) / kBlockSize;
  const int workers = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(blocks, 1)));
  auto worker = [&](std::size_t first) {
    for (std::size_t b = first; b < blocks; b += static_cast<std::size_t>(workers)) {
      const std::size_t begin = b * kBlockSize;
      fn(b, begin, std::min(samples, begin + kBlockSize));
    }
  };
  if (workers == 1) {
    worker(0);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker, static_cast<std::size_t>(w));
  for (auto& t : pool) t.join();
}

// Literal closed loop: plant, one-step-ahead Kalman predictor, controller.
struct LoopKernel {
  const SystemModel& sys;
  Matrix A_KC;
  Matrix Lv, Lw;

  explicit LoopKernel(const SystemModel& s)
      : sys(s),
        A_KC(s.plant.A - s.estimator.K * s.plant.C),
        Lv(cholesky_factor(s.plant.Sigma_v)),
        Lw(cholesky_factor(s.plant.Sigma_w)) {}

  Vector command(const Vector& xhat, const Vector& y_r) const {
    return -sys.controller.L_xhat * xhat + sys.controller.L_yr * y_r;
  }
};

}  // namespace

std::uint64_t trajectory_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(index + 0x5851F42D4C957F2DULL));
}

EmpiricalSummary simulate(const SystemModel& sys, const StationaryLaw& law,
                          const AttackMatrices& attack, const Vector& d,
                          const SimulationConfig& cfg) {
  const Index N = attack.horizon;
  const Index nx = sys.plant.n_x(), ny = sys.plant.n_y(), nz = sys.n_z();
  const Index na = attack.n_a(), nau = attack.n_au(), nay = attack.n_ay();
  const Index nyr = sys.controller.n_yr();
  if (d.size() != (N + 1) * na + nyr) {
    throw Error(ErrorKind::DimensionMismatch, "decision vector does not match the attack layout");
  }
  if (cfg.samples < 1) throw Error(ErrorKind::SchemaError, "samples must be >= 1");

  const LoopKernel loop(sys);
  const Vector y_r = d.tail(nyr);
  const Vector mean0 = law.T_0 * y_r;
  const Matrix root0 = numcore::symmetric_sqrt(law.Sigma_0);
  const auto& ch = attack.channels;
  const auto& P = sys.plant;
  const Matrix& K = sys.estimator.K;
  const Matrix& Sr = sys.estimator.Sigma_r_invsqrt;
  const Index pre_steps = -attack.N_s;

  const std::size_t blocks = (cfg.samples + kBlockSize - 1) / kBlockSize;
  std::vector<Moments> zm(blocks), rm(blocks);
  std::vector<Vector> exceed(blocks);
  std::vector<double> inf_sum(blocks, 0.0), inf_sq(blocks, 0.0);

  run_blocks(cfg.samples, cfg.jobs, [&](std::size_t b, std::size_t begin, std::size_t end) {
    zm[b].init(N * nz);
    rm[b].init((N + 1) * ny);
    exceed[b] = Vector::Zero(N * nz);
    Vector z(N * nz), r((N + 1) * ny);
    Matrix recorded(nay, std::max<Index>(pre_steps, 0));
    for (std::size_t traj = begin; traj < end; ++traj) {
      Gaussian rng(trajectory_seed(cfg.seed, traj));
      Vector xe = mean0 + root0 * rng.draw(2 * nx);
      Vector x = xe.head(nx), xhat = xe.tail(nx);

      for (Index j = 0; j < pre_steps; ++j) {
        const Vector v = loop.Lv * rng.draw(nx);
        const Vector w = loop.Lw * rng.draw(ny);
        const Vector y = P.C * x + w;
        const Vector u = loop.command(xhat, y_r);
        recorded.col(j) = attack.C_Ybar * y;
        xhat = (loop.A_KC * xhat + P.B * u + K * y).eval();
        x = (P.A * x + P.B * u + v).eval();
      }

      for (Index k = 0; k <= N; ++k) {
        const Vector v = loop.Lv * rng.draw(nx);
        const Vector w = loop.Lw * rng.draw(ny);
        const Vector y = P.C * x + w;
        const Vector a_u = d.segment(k * na, nau);
        Vector a_y = d.segment(k * na + nau, nay);
        if (pre_steps > 0) a_y += recorded.col(k);
        const Vector y_recv = ch.Lambda_y * y + ch.Gamma_y * a_y;
        r.segment(k * ny, ny) = Sr * (y_recv - P.C * xhat);
        if (k == N) break;
        const Vector u = loop.command(xhat, y_r);
        const Vector u_applied = ch.Lambda_u * u + ch.Gamma_u * a_u;
        xhat = (loop.A_KC * xhat + P.B * u + K * y_recv).eval();
        x = (P.A * x + P.B * u_applied + v).eval();
        xe << x, xhat;
        z.segment(k * nz, nz) = sys.Q_z * xe;
      }
      zm[b].add(z);
      rm[b].add(r);
      exceed[b] += (z.array().abs() > 1.0).cast<double>().matrix();
      const double inf = z.cwiseAbs().maxCoeff();
      inf_sum[b] += inf;
      inf_sq[b] += inf * inf;
    }
  });

  Moments zt, rt;
  zt.init(N * nz);
  rt.init((N + 1) * ny);
  Vector exceed_total = Vector::Zero(N * nz);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    zt.merge(zm[b]);
    rt.merge(rm[b]);
    exceed_total += exceed[b];
    s1 += inf_sum[b];
    s2 += inf_sq[b];
  }
  EmpiricalSummary out;
  const double n = static_cast<double>(cfg.samples);
  out.samples = cfg.samples;
  zt.finish(cfg.samples, out.z_mean, out.z_cov);
  rt.finish(cfg.samples, out.r_mean, out.r_cov);
  out.z_mean_se = (out.z_cov.diagonal() / n).cwiseSqrt();
  out.exceed_freq = exceed_total / n;
  out.E_inf_norm = s1 / n;
  const double var = cfg.samples > 1 ? (s2 - n * out.E_inf_norm * out.E_inf_norm) / (n - 1.0) : 0.0;
  out.inf_norm_se = std::sqrt(std::max(var, 0.0) / n);
  return out;
}

StationarySample simulate_stationary(const SystemModel& sys, const Vector& y_r,
                                     const SimulationConfig& cfg) {
  const Index nx = sys.plant.n_x(), ny = sys.plant.n_y();
  const LoopKernel loop(sys);
  const auto& P = sys.plant;
  const Matrix& K = sys.estimator.K;
  const std::size_t blocks = (cfg.samples + kBlockSize - 1) / kBlockSize;
  std::vector<Moments> m(blocks);

  run_blocks(cfg.samples, cfg.jobs, [&](std::size_t b, std::size_t begin, std::size_t end) {
    m[b].init(2 * nx);
    Vector xe(2 * nx);
    for (std::size_t traj = begin; traj < end; ++traj) {
      Gaussian rng(trajectory_seed(cfg.seed, traj));
      Vector x = Vector::Zero(nx), xhat = Vector::Zero(nx);
      for (std::size_t k = 0; k < cfg.burn_in; ++k) {
        const Vector v = loop.Lv * rng.draw(nx);
        const Vector w = loop.Lw * rng.draw(ny);
        const Vector y = P.C * x + w;
        const Vector u = loop.command(xhat, y_r);
        xhat = (loop.A_KC * xhat + P.B * u + K * y).eval();
        x = (P.A * x + P.B * u + v).eval();
      }
      xe << x, xhat;
      m[b].add(xe);
    }
  });
  Moments total;
  total.init(2 * nx);
  for (const auto& bm : m) total.merge(bm);
  StationarySample out;
  total.finish(cfg.samples, out.mean, out.cov);
  out.mean_se = (out.cov.diagonal() / static_cast<double>(cfg.samples)).cwiseSqrt();
  return out;
}

KlCheck empirical_kl_check(const SystemModel& sys, const StationaryLaw& law,
                           const AttackMatrices& attack, const GaussianSummary& summary,
                           const Vector& d, const SimulationConfig& cfg) {
  if (!summary.assumption2_ok) {
    throw Error(ErrorKind::NotPositiveDefinite, "Sigma_R must be positive definite");
  }
  KlCheck out;
  const Vector mu = summary.T_R * d;
  out.quad_form = mu.squaredNorm();
  out.epsilon_prime = summary.epsilon_prime;
  out.analytic_ok = out.quad_form <= out.epsilon_prime;

  const auto emp = simulate(sys, law, attack, d, cfg);
  const Index n = emp.r_mean.size();
  const double steps = static_cast<double>(summary.N + 1);
  out.empirical_rate =
      kl_divergence_gaussian(emp.r_mean, emp.r_cov, Vector::Zero(n), Matrix::Identity(n, n)) / steps;

  // sampling error of the plug-in estimate: mean term (4 sd) plus the
  // second-order bias of the covariance term
  const double S = static_cast<double>(emp.samples);
  const double mean_sd = 2.0 * std::sqrt(std::max(mu.dot(summary.Sigma_R * mu), 0.0) / S);
  const double bias = (summary.Sigma_R.trace() + static_cast<double>(n * (n + 1))) / S;
  out.slack = (4.0 * mean_sd + bias) / (2.0 * steps);
  out.empirical_ok = out.empirical_rate <= summary.epsilon;
  out.agree = out.analytic_ok == out.empirical_ok ||
              std::abs(out.empirical_rate - summary.epsilon) <= out.slack;
  return out;
}

}  // namespace cpsimpact
