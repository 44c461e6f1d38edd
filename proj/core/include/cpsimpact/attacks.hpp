#pragma once

// Attack strategy catalog. Every strategy is expressed through the same
// unified model: channel maps (Lambda, Gamma), a linear equality F_a a_{0:N} = 0
// on the deterministic attack sequence, and an affine law
// a_s{0:N} = T_sx x_e(N_s) + T_sr y_r + T_sf f_{N_s:-1} for the stochastic part.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpsimpact/sysmodel.hpp"

namespace cpsimpact {

enum class StrategyKind {
  DoS,
  Rerouting,
  SignAlternation,
  FDI,
  BiasInjection,
  FdiPlusDos,
  ReplayBias,
  ReplayDos,
};

[[nodiscard]] std::string_view to_string(StrategyKind kind) noexcept;
[[nodiscard]] std::optional<StrategyKind> parse_strategy_kind(std::string_view name) noexcept;

/// Compromised channels, 1-based like the sensor/actuator labels y_1, u_1, ...
struct ResourceSet {
  std::vector<int> sensors;
  std::vector<int> actuators;

  [[nodiscard]] bool empty() const { return sensors.empty() && actuators.empty(); }
  [[nodiscard]] std::size_t size() const { return sensors.size() + actuators.size(); }
  /// Throws SchemaError on out-of-range or duplicate indices.
  void validate(Index n_y, Index n_u) const;

  friend bool operator==(const ResourceSet&, const ResourceSet&) = default;
};

struct Dims {
  Index n_x = 0, n_y = 0, n_u = 0, n_yr = 0;
  [[nodiscard]] Index n_f() const { return n_x + n_y; }
  [[nodiscard]] static Dims of(const SystemModel& sys);
};

struct StrategySpec {
  StrategyKind kind = StrategyKind::DoS;
  ResourceSet resources;  // injection set for FdiPlusDos
  ResourceSet denial;     // FdiPlusDos only
  // Rerouting: full-length 1-based image lists, y~_i = y_{pi(i)}. Empty = identity.
  std::vector<int> sensor_permutation;
  std::vector<int> actuator_permutation;
};

struct AttackMatrices {
  StrategyKind kind = StrategyKind::DoS;
  ChannelMaps channels;
  Matrix F_a;     // n_Fa x (N+1) n_a
  Matrix T_sx;    // (N+1) n_ay x 2 n_x
  Matrix T_sr;    // (N+1) n_ay x n_yr
  Matrix T_sf;    // (N+1) n_ay x (-N_s) n_f
  Matrix C_Ybar;  // n_ay x n_y, replay only (empty otherwise)
  Index horizon = 0;
  // Start of the modelled window. 0 for strategies without a stochastic part,
  // -N-1 for replay.
  Index N_s = 0;

  [[nodiscard]] Index n_ay() const { return channels.n_ay(); }
  [[nodiscard]] Index n_au() const { return channels.n_au(); }
  [[nodiscard]] Index n_a() const { return channels.n_a(); }
  [[nodiscard]] bool has_stochastic_part() const { return N_s < 0; }
};

/// Decision vector d = [a_{0:N}; y_r] and the constraint maps on it.
struct DecisionLayout {
  Index dim_d = 0;
  Index n_attack = 0;  // (N+1) n_a
  Index n_yr = 0;
  Matrix Q;  // [0 | Q_yr]
  Matrix F;  // [F_a | 0]
};

[[nodiscard]] AttackMatrices build_dos(const ResourceSet& res, const Dims& dims, Index N);
[[nodiscard]] AttackMatrices build_rerouting(const StrategySpec& spec, const Dims& dims, Index N);
[[nodiscard]] AttackMatrices build_sign_alternation(const ResourceSet& res, const Dims& dims,
                                                    Index N);
[[nodiscard]] AttackMatrices build_fdi(const ResourceSet& res, const Dims& dims, Index N);
[[nodiscard]] AttackMatrices build_bias(const ResourceSet& res, const Dims& dims, Index N);
[[nodiscard]] AttackMatrices build_fdi_plus_dos(const ResourceSet& injection,
                                                const ResourceSet& denial, const Dims& dims,
                                                Index N);

enum class ReplayActuatorMode { Bias, DoS };

/// Record-then-replay on res.sensors over [-N-1, -1]; actuators either receive
/// a constant bias or are denied. The recorded window is propagated through
/// the nominal loop to express a_s as an affine function of x_e(N_s), y_r and
/// f_{N_s:-1}.
[[nodiscard]] AttackMatrices build_replay(const ResourceSet& res, const PlantModel& plant,
                                          const NominalLoop& nominal, Index n_yr, Index N,
                                          ReplayActuatorMode mode);

/// Dispatches on spec.kind.
[[nodiscard]] AttackMatrices build_attack(const StrategySpec& spec, const SystemModel& sys,
                                          const NominalLoop& nominal, Index N);

[[nodiscard]] DecisionLayout decision_layout(const AttackMatrices& attack, Index N,
                                             const Matrix& Q_yr);

/// Lambda as a permutation matrix: row i has its one in column perm[i]-1.
[[nodiscard]] Matrix permutation_matrix(const std::vector<int>& perm, Index n);

inline constexpr std::size_t kMaxEnumeration = 4096;

/// All non-empty subsets of the joint sensor/actuator set, ordered by bitmask
/// (sensors occupy the low bits). Throws SchemaError beyond kMaxEnumeration.
[[nodiscard]] std::vector<ResourceSet> nonempty_subsets(const ResourceSet& res);

/// Every (pi_y, pi_u) that permutes only the compromised channels, excluding
/// the all-identity pair, in lexicographic order.
[[nodiscard]] std::vector<StrategySpec> rerouting_candidates(const ResourceSet& res, Index n_y,
                                                             Index n_u);

}  // namespace cpsimpact
