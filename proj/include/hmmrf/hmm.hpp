#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hmmrf/matrix.hpp"

namespace hmmrf {

using Symbol = std::uint32_t;
using State = std::uint32_t;

/// Discrete HMM: transition (N x N), emission (N x M), initial (N).
/// All rows are probability distributions.
struct HmmModel {
  std::size_t n_states = 0;
  std::size_t n_symbols = 0;
  Matrix transition;
  Matrix emission;
  std::vector<double> initial;

  /// Throws config_error if dimensions disagree, an entry leaves [0, 1],
  /// or a row sum is off by more than `tolerance`.
  void validate(double tolerance = 1e-9) const;

  friend bool operator==(const HmmModel&, const HmmModel&) = default;
};

struct TrainingConfig {
  std::size_t n_states = 20;
  std::size_t min_iterations = 10;
  double epsilon = 0.001;
  std::size_t max_iterations = 200;
  std::uint64_t seed = 42;
  double init_jitter = 0.01;

  void validate() const;
};

/// Approximately uniform model. Each entry is multiplied by a seeded factor
/// drawn from [1 - jitter, 1 + jitter] and rows are renormalized.
HmmModel init_model(std::size_t n_states, std::size_t n_symbols, std::uint64_t seed,
                    double jitter);

/// pi[x0] b[x0](o0) * prod_t a[x(t-1), x(t)] b[x(t)](o(t)).
double joint_path_probability(const HmmModel& model, std::span<const State> states,
                              std::span<const Symbol> obs);

struct ForwardResult {
  Matrix alpha;                      // T x N, each row normalized to sum 1
  std::vector<double> scale_factors; // scale_factors[t] = row sum before normalization
  double log_likelihood = 0.0;       // sum_t log scale_factors[t] = log P(O | model)
};

/// Scaled forward pass.
///
/// The unscaled alpha is recovered as alpha(t, i) * prod_{k <= t} scale_factors[k].
ForwardResult forward(const HmmModel& model, std::span<const Symbol> obs);

/// Scaled backward pass using the forward scale factors.
///
/// beta(T-1, i) = 1 and beta(t, i) = sum_j a_ij b_j(o(t+1)) beta(t+1, j) / scale_factors[t+1],
/// so that the unscaled beta is beta(t, i) * prod_{k > t} scale_factors[k] and
/// alpha(t, i) * beta(t, i) is the state posterior gamma_t(i).
Matrix backward(const HmmModel& model, std::span<const Symbol> obs,
                std::span<const double> scale_factors);

/// Per-position posteriors gamma_t(i), T x N.
Matrix state_posteriors(const HmmModel& model, std::span<const Symbol> obs);

/// Emission floor applied at decode time so that symbols a model never saw
/// during training do not zero out the forward pass.
inline constexpr double kDecodeEmissionFloor = 1e-10;

/// x_t = argmax_i gamma_t(i), ties to the lowest state. Emissions are floored
/// at kDecodeEmissionFloor first.
std::vector<State> posterior_decode(const HmmModel& model, std::span<const Symbol> obs);

struct ViterbiResult {
  std::vector<State> path;
  double log_prob = 0.0;
};

// Relative log-space tolerance under which two paths count as tied.
inline constexpr double kViterbiTieTolerance = 1e-12;

/// Most probable single path, computed in log space. Among tied paths the
/// lexicographically smallest state sequence is returned.

ViterbiResult viterbi(const HmmModel& model, std::span<const Symbol> obs);

struct BaumWelchResult {
  HmmModel model;
  /// history[0] scores the initial model; history[k] scores the model after
  /// k re-estimations. The last entry scores the returned model.
  std::vector<double> history;
  std::size_t iterations = 0;
};

/// Called after every re-estimation with (iteration, new model, its log-likelihood).
using IterationObserver = std::function<void(std::size_t, const HmmModel&, double)>;

/// Baum-Welch re-estimation from an init_model start. Runs at least
/// config.min_iterations re-estimations, then stops once the change in
/// log P(O | model) drops below config.epsilon, or at config.max_iterations.
BaumWelchResult baum_welch(std::span<const Symbol> obs, std::size_t n_symbols,
                           const TrainingConfig& config,
                           const IterationObserver& observer = {});

}  // namespace hmmrf
