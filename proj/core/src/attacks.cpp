#include "cpsimpact/attacks.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

#include "cpsimpact/error.hpp"

namespace cpsimpact {
namespace {

// n x n diagonal with `on_set` at the listed (1-based) indices and 1 elsewhere.
Matrix diagonal_lambda(const std::vector<int>& set, Index n, double on_set) {
  Matrix L = Matrix::Identity(n, n);
  for (int idx : set) L(idx - 1, idx - 1) = on_set;
  return L;
}

// n x |set| column selector: ones at (j_k, k).
Matrix selector(const std::vector<int>& set, Index n) {
  Matrix G = Matrix::Zero(n, static_cast<Index>(set.size()));
  for (std::size_t k = 0; k < set.size(); ++k) G(set[k] - 1, static_cast<Index>(k)) = 1.0;
  return G;
}

void set_deterministic_window(AttackMatrices& att, const Dims& dims, Index N) {
  const Index rows = (N + 1) * att.n_ay();
  att.horizon = N;
  att.N_s = 0;
  att.T_sx = Matrix::Zero(rows, 2 * dims.n_x);
  att.T_sr = Matrix::Zero(rows, dims.n_yr);
  att.T_sf = Matrix::Zero(rows, 0);
  att.C_Ybar = Matrix(0, dims.n_y);
}

void require_horizon(Index N) {
  if (N < 1) throw Error(ErrorKind::SchemaError, "horizon N must be >= 1");
}

// Rows enforcing a^{(j)}(k) = a^{(j)}(0), k = 1..N, for each j in `components`
// (offsets within a(k), whose width is n_a).
Matrix constancy_rows(const std::vector<Index>& components, Index n_a, Index N) {
  Matrix F = Matrix::Zero(N * static_cast<Index>(components.size()), (N + 1) * n_a);
  Index row = 0;
  for (Index k = 1; k <= N; ++k) {
    for (Index j : components) {
      F(row, j) = -1.0;
      F(row, k * n_a + j) = 1.0;
      ++row;
    }
  }
  return F;
}

// Rows enforcing a^{(j)}(k) = 0, k = 0..N.
Matrix zero_rows(const std::vector<Index>& components, Index n_a, Index N) {
  Matrix F = Matrix::Zero((N + 1) * static_cast<Index>(components.size()), (N + 1) * n_a);
  Index row = 0;
  for (Index k = 0; k <= N; ++k) {
    for (Index j : components) F(row++, k * n_a + j) = 1.0;
  }
  return F;
}

std::vector<int> identity_images(Index n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 1);
  return p;
}

void validate_permutation(const std::vector<int>& perm, const std::vector<int>& compromised,
                          Index n, const char* what) {
  if (perm.empty()) return;
  if (static_cast<Index>(perm.size()) != n) {
    throw Error(ErrorKind::InvalidPermutation,
                std::string(what) + " permutation must list all " + std::to_string(n) + " channels");
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (int img : perm) {
    if (img < 1 || img > n || seen[static_cast<std::size_t>(img - 1)]) {
      throw Error(ErrorKind::InvalidPermutation, std::string(what) + " permutation is not a bijection");
    }
    seen[static_cast<std::size_t>(img - 1)] = true;
  }
  const std::set<int> comp(compromised.begin(), compromised.end());
  for (Index i = 0; i < n; ++i) {
    const int label = static_cast<int>(i + 1);
    if (!comp.count(label) && perm[static_cast<std::size_t>(i)] != label) {
      throw Error(ErrorKind::InvalidPermutation,
                  std::string(what) + " permutation moves uncompromised channel " +
                      std::to_string(label));
    }
  }
}

}  // namespace

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::DoS: return "dos";
    case StrategyKind::Rerouting: return "rerouting";
    case StrategyKind::SignAlternation: return "sign_alternation";
    case StrategyKind::FDI: return "fdi";
    case StrategyKind::BiasInjection: return "bias";
    case StrategyKind::FdiPlusDos: return "fdi_plus_dos";
    case StrategyKind::ReplayBias: return "replay_bias";
    case StrategyKind::ReplayDos: return "replay_dos";
  }
  return "unknown";
}

std::optional<StrategyKind> parse_strategy_kind(std::string_view name) noexcept {
  for (auto k : {StrategyKind::DoS, StrategyKind::Rerouting, StrategyKind::SignAlternation,
                 StrategyKind::FDI, StrategyKind::BiasInjection, StrategyKind::FdiPlusDos,
                 StrategyKind::ReplayBias, StrategyKind::ReplayDos}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

void ResourceSet::validate(Index n_y, Index n_u) const {
  auto check = [](const std::vector<int>& v, Index n, const char* what) {
    std::set<int> seen;
    for (int i : v) {
      if (i < 1 || i > n) {
        throw Error(ErrorKind::SchemaError, std::string(what) + " index " + std::to_string(i) +
                                                " out of range 1.." + std::to_string(n));
      }
      if (!seen.insert(i).second) {
        throw Error(ErrorKind::SchemaError, std::string(what) + " index " + std::to_string(i) +
                                                " listed twice");
      }
    }
  };
  check(sensors, n_y, "sensor");
  check(actuators, n_u, "actuator");
}

Dims Dims::of(const SystemModel& sys) {
  return {sys.plant.n_x(), sys.plant.n_y(), sys.plant.n_u(), sys.controller.n_yr()};
}

AttackMatrices build_dos(const ResourceSet& res, const Dims& dims, Index N) {
  require_horizon(N);
  res.validate(dims.n_y, dims.n_u);
  AttackMatrices att;
  att.kind = StrategyKind::DoS;
  att.channels = {diagonal_lambda(res.sensors, dims.n_y, 0.0),
                  diagonal_lambda(res.actuators, dims.n_u, 0.0), Matrix(dims.n_y, 0),
                  Matrix(dims.n_u, 0)};
  att.F_a = Matrix(0, 0);
  set_deterministic_window(att, dims, N);
  return att;
}

AttackMatrices build_rerouting(const StrategySpec& spec, const Dims& dims, Index N) {
  require_horizon(N);
  spec.resources.validate(dims.n_y, dims.n_u);
  validate_permutation(spec.sensor_permutation, spec.resources.sensors, dims.n_y, "sensor");
  validate_permutation(spec.actuator_permutation, spec.resources.actuators, dims.n_u, "actuator");
  AttackMatrices att;
  att.kind = StrategyKind::Rerouting;
  const auto py = spec.sensor_permutation.empty() ? identity_images(dims.n_y) : spec.sensor_permutation;
  const auto pu =
      spec.actuator_permutation.empty() ? identity_images(dims.n_u) : spec.actuator_permutation;
  att.channels = {permutation_matrix(py, dims.n_y), permutation_matrix(pu, dims.n_u),
                  Matrix(dims.n_y, 0), Matrix(dims.n_u, 0)};
  att.F_a = Matrix(0, 0);
  set_deterministic_window(att, dims, N);
  return att;
}

AttackMatrices build_sign_alternation(const ResourceSet& res, const Dims& dims, Index N) {
  require_horizon(N);
  res.validate(dims.n_y, dims.n_u);
  AttackMatrices att;
  att.kind = StrategyKind::SignAlternation;
  att.channels = {diagonal_lambda(res.sensors, dims.n_y, -1.0),
                  diagonal_lambda(res.actuators, dims.n_u, -1.0), Matrix(dims.n_y, 0),
                  Matrix(dims.n_u, 0)};
  att.F_a = Matrix(0, 0);
  set_deterministic_window(att, dims, N);
  return att;
}

AttackMatrices build_fdi(const ResourceSet& res, const Dims& dims, Index N) {
  require_horizon(N);
  res.validate(dims.n_y, dims.n_u);
  if (res.empty()) throw Error(ErrorKind::EmptyResources, "injection attack without channels");
  AttackMatrices att;
  att.kind = StrategyKind::FDI;
  att.channels = {Matrix::Identity(dims.n_y, dims.n_y), Matrix::Identity(dims.n_u, dims.n_u),
                  selector(res.sensors, dims.n_y), selector(res.actuators, dims.n_u)};
  // unconstrained sequence: the zero constraint matrix, kept with zero rows
  att.F_a = Matrix(0, (N + 1) * att.n_a());
  set_deterministic_window(att, dims, N);
  return att;
}

AttackMatrices build_bias(const ResourceSet& res, const Dims& dims, Index N) {
  AttackMatrices att = build_fdi(res, dims, N);
  att.kind = StrategyKind::BiasInjection;
  std::vector<Index> all(static_cast<std::size_t>(att.n_a()));
  std::iota(all.begin(), all.end(), Index{0});
  att.F_a = constancy_rows(all, att.n_a(), N);
  return att;
}

AttackMatrices build_fdi_plus_dos(const ResourceSet& injection, const ResourceSet& denial,
                                  const Dims& dims, Index N) {
  require_horizon(N);
  injection.validate(dims.n_y, dims.n_u);
  denial.validate(dims.n_y, dims.n_u);
  auto overlaps = [](const std::vector<int>& a, const std::vector<int>& b) {
    return std::any_of(a.begin(), a.end(),
                       [&](int i) { return std::find(b.begin(), b.end(), i) != b.end(); });
  };
  if (overlaps(injection.sensors, denial.sensors) ||
      overlaps(injection.actuators, denial.actuators)) {
    throw Error(ErrorKind::OverlappingSets, "a channel cannot be both injected and denied");
  }
  AttackMatrices att;
  att.kind = StrategyKind::FdiPlusDos;
  att.channels = {diagonal_lambda(denial.sensors, dims.n_y, 0.0),
                  diagonal_lambda(denial.actuators, dims.n_u, 0.0),
                  selector(injection.sensors, dims.n_y), selector(injection.actuators, dims.n_u)};
  att.F_a = Matrix(0, (N + 1) * att.n_a());
  set_deterministic_window(att, dims, N);
  return att;
}

AttackMatrices build_replay(const ResourceSet& res, const PlantModel& plant,
                            const NominalLoop& nominal, Index n_yr, Index N,
                            ReplayActuatorMode mode) {
  require_horizon(N);
  const Index nx = plant.n_x(), ny = plant.n_y(), nu = plant.n_u(), nf = plant.n_f();
  res.validate(ny, nu);
  if (res.sensors.empty()) {
    throw Error(ErrorKind::EmptyResources, "replay attack needs at least one sensor");
  }
  if (!(numcore::spectral_radius(nominal.A_e) < 1.0)) {
    throw Error(ErrorKind::UnstableMatrix, "replay recording requires a stable nominal loop");
  }

  AttackMatrices att;
  att.kind = mode == ReplayActuatorMode::Bias ? StrategyKind::ReplayBias : StrategyKind::ReplayDos;
  const Matrix Gamma_y = selector(res.sensors, ny);
  if (mode == ReplayActuatorMode::Bias) {
    att.channels = {diagonal_lambda(res.sensors, ny, 0.0), Matrix::Identity(nu, nu), Gamma_y,
                    selector(res.actuators, nu)};
  } else {
    att.channels = {diagonal_lambda(res.sensors, ny, 0.0), diagonal_lambda(res.actuators, nu, 0.0),
                    Gamma_y, Matrix(nu, 0)};
  }
  const Index nay = att.n_ay(), nau = att.n_au(), na = att.n_a();

  // a(k) = [a_u(k); a_y(k)]: a_y is pinned to zero, a_u (bias mode) is constant
  std::vector<Index> u_parts(static_cast<std::size_t>(nau)), y_parts(static_cast<std::size_t>(nay));
  std::iota(u_parts.begin(), u_parts.end(), Index{0});
  std::iota(y_parts.begin(), y_parts.end(), nau);
  const Matrix F_const = constancy_rows(u_parts, na, N);
  const Matrix F_zero = zero_rows(y_parts, na, N);
  att.F_a.resize(F_const.rows() + F_zero.rows(), (N + 1) * na);
  att.F_a << F_const, F_zero;

  att.horizon = N;
  att.N_s = -N - 1;
  att.C_Ybar = Gamma_y.transpose();

  // Propagate x_e(k) for k = N_s..-1 as an affine map of (x_e(N_s), y_r, f_{N_s:-1}).
  const Index steps = N + 1;
  Matrix Xx = Matrix::Identity(2 * nx, 2 * nx);
  Matrix Xr = Matrix::Zero(2 * nx, n_yr);
  Matrix Xf = Matrix::Zero(2 * nx, steps * nf);
  Matrix meas(ny, 2 * nx);  // y = [C 0] x_e + w
  meas << plant.C, Matrix::Zero(ny, nx);
  const Matrix CYm = att.C_Ybar * meas;

  att.T_sx.resize(steps * nay, 2 * nx);
  att.T_sr.resize(steps * nay, n_yr);
  att.T_sf = Matrix::Zero(steps * nay, steps * nf);
  for (Index j = 0; j < steps; ++j) {
    att.T_sx.middleRows(j * nay, nay) = CYm * Xx;
    att.T_sr.middleRows(j * nay, nay) = CYm * Xr;
    att.T_sf.middleRows(j * nay, nay) = CYm * Xf;
    att.T_sf.block(j * nay, j * nf + nx, nay, ny) += att.C_Ybar;

    Xx = (nominal.A_e * Xx).eval();
    Xr = (nominal.A_e * Xr + nominal.E_e).eval();
    Xf = (nominal.A_e * Xf).eval();
    Xf.middleCols(j * nf, nf) += nominal.B_e;
  }
  return att;
}

AttackMatrices build_attack(const StrategySpec& spec, const SystemModel& sys,
                            const NominalLoop& nominal, Index N) {
  const Dims dims = Dims::of(sys);
  switch (spec.kind) {
    case StrategyKind::DoS: return build_dos(spec.resources, dims, N);
    case StrategyKind::Rerouting: return build_rerouting(spec, dims, N);
    case StrategyKind::SignAlternation: return build_sign_alternation(spec.resources, dims, N);
    case StrategyKind::FDI: return build_fdi(spec.resources, dims, N);
    case StrategyKind::BiasInjection: return build_bias(spec.resources, dims, N);
    case StrategyKind::FdiPlusDos: return build_fdi_plus_dos(spec.resources, spec.denial, dims, N);
    case StrategyKind::ReplayBias:
      return build_replay(spec.resources, sys.plant, nominal, dims.n_yr, N, ReplayActuatorMode::Bias);
    case StrategyKind::ReplayDos:
      return build_replay(spec.resources, sys.plant, nominal, dims.n_yr, N, ReplayActuatorMode::DoS);
  }
  throw Error(ErrorKind::SchemaError, "unknown strategy kind");
}

DecisionLayout decision_layout(const AttackMatrices& attack, Index N, const Matrix& Q_yr) {
  DecisionLayout layout;
  layout.n_attack = (N + 1) * attack.n_a();
  layout.n_yr = Q_yr.rows();
  layout.dim_d = layout.n_attack + layout.n_yr;
  layout.Q = Matrix::Zero(layout.n_yr, layout.dim_d);
  layout.Q.rightCols(layout.n_yr) = Q_yr;
  const Index n_fa = attack.F_a.rows();
  if (n_fa > 0 && attack.F_a.cols() != layout.n_attack) {
    throw Error(ErrorKind::DimensionMismatch, "F_a column count does not match (N+1) n_a");
  }
  layout.F = Matrix::Zero(n_fa, layout.dim_d);
  if (n_fa > 0) layout.F.leftCols(layout.n_attack) = attack.F_a;
  return layout;
}

Matrix permutation_matrix(const std::vector<int>& perm, Index n) {
  Matrix P = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) P(i, perm[static_cast<std::size_t>(i)] - 1) = 1.0;
  return P;
}

std::vector<ResourceSet> nonempty_subsets(const ResourceSet& res) {
  const std::size_t n = res.size();
  if (n >= 63 || ((std::size_t{1} << n) - 1) > kMaxEnumeration) {
    throw Error(ErrorKind::SchemaError, "resource subset enumeration exceeds " +
                                            std::to_string(kMaxEnumeration) + " combinations");
  }
  std::vector<ResourceSet> out;
  const std::size_t ns = res.sensors.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    ResourceSet s;
    for (std::size_t b = 0; b < n; ++b) {
      if (!(mask & (std::size_t{1} << b))) continue;
      if (b < ns) {
        s.sensors.push_back(res.sensors[b]);
      } else {
        s.actuators.push_back(res.actuators[b - ns]);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<StrategySpec> rerouting_candidates(const ResourceSet& res, Index n_y, Index n_u) {
  auto arrangements = [](const std::vector<int>& comp, Index n) {
    std::vector<int> sorted = comp;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::vector<int>> out;
    std::vector<int> images = sorted;
    do {
      auto perm = identity_images(n);
      for (std::size_t k = 0; k < sorted.size(); ++k) {
        perm[static_cast<std::size_t>(sorted[k] - 1)] = images[k];
      }
      out.push_back(std::move(perm));
      if (out.size() > kMaxEnumeration) break;
    } while (std::next_permutation(images.begin(), images.end()));
    return out;
  };
  res.validate(n_y, n_u);
  const auto ys = arrangements(res.sensors, n_y);
  const auto us = arrangements(res.actuators, n_u);
  if (ys.size() * us.size() > kMaxEnumeration + 1) {
    throw Error(ErrorKind::SchemaError, "rerouting enumeration exceeds " +
                                            std::to_string(kMaxEnumeration) + " combinations");
  }
  std::vector<StrategySpec> out;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    for (std::size_t j = 0; j < us.size(); ++j) {
      if (i == 0 && j == 0) continue;  // first arrangement is the identity
      StrategySpec s;
      s.kind = StrategyKind::Rerouting;
      s.resources = res;
      s.sensor_permutation = ys[i];
      s.actuator_permutation = us[j];
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace cpsimpact
