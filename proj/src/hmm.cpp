#include "hmmrf/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hmmrf/errors.hpp"
#include "hmmrf/random.hpp"

namespace hmmrf {
namespace {

void check_row(std::span<const double> row, double tolerance, const char* what, std::size_t index) {
  double sum = 0.0;
  for (double p : row) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw config_error(std::string(what) + " row " + std::to_string(index) +
                         " has an entry outside [0, 1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tolerance) {
    throw config_error(std::string(what) + " row " + std::to_string(index) + " sums to " +
                       std::to_string(sum));
  }
}

void check_observations(const HmmModel& model, std::span<const Symbol> obs) {
  if (obs.empty()) throw argument_error("observation sequence is empty");
  for (std::size_t t = 0; t < obs.size(); ++t) {
    if (obs[t] >= model.n_symbols) {
      throw encoding_error("symbol " + std::to_string(obs[t]) + " at position " +
                           std::to_string(t) + " is outside the model alphabet of size " +
                           std::to_string(model.n_symbols));
    }
  }
}

void normalize(std::span<double> row) {
  double sum = 0.0;
  for (double v : row) sum += v;
  for (double& v : row) v /= sum;
}

// Returns false when the row has no mass, leaving it untouched.
bool normalize_into(std::span<const double> counts, std::span<double> row) {
  double sum = 0.0;
  for (double v : counts) sum += v;
  if (!(sum > 0.0)) return false;
  for (std::size_t k = 0; k < row.size(); ++k) row[k] = counts[k] / sum;
  return true;
}

struct ForwardBackward {
  ForwardResult fwd;
  Matrix beta;
};

ForwardBackward forward_backward(const HmmModel& model, std::span<const Symbol> obs) {
  ForwardBackward fb;
  fb.fwd = forward(model, obs);
  fb.beta = backward(model, obs, fb.fwd.scale_factors);
  return fb;
}

// One Baum-Welch update computed from the current model's forward/backward pass.
HmmModel reestimate(const HmmModel& model, std::span<const Symbol> obs, const ForwardBackward& fb) {
  const std::size_t n = model.n_states;
  const std::size_t m = model.n_symbols;
  const std::size_t length = obs.size();
  const Matrix& alpha = fb.fwd.alpha;
  const Matrix& beta = fb.beta;

  Matrix transition_counts(n, n);
  Matrix emission_counts(n, m);
  std::vector<double> initial_counts(n);
  std::vector<double> weight(n);

  for (std::size_t t = 0; t < length; ++t) {
    const auto a_row = alpha.row(t);
    const auto b_row = beta.row(t);
    for (std::size_t i = 0; i < n; ++i) {
      const double gamma = a_row[i] * b_row[i];
      emission_counts(i, obs[t]) += gamma;
      if (t == 0) initial_counts[i] = gamma;
    }
    if (t + 1 == length) break;

    const auto next_beta = beta.row(t + 1);
    const double scale = fb.fwd.scale_factors[t + 1];
    const Symbol next = obs[t + 1];
    for (std::size_t j = 0; j < n; ++j) {
      weight[j] = model.emission(j, next) * next_beta[j] / scale;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double a_ti = a_row[i];
      const auto trans_row = model.transition.row(i);
      auto counts_row = transition_counts.row(i);
      for (std::size_t j = 0; j < n; ++j) counts_row[j] += a_ti * trans_row[j] * weight[j];
    }
  }

  HmmModel updated = model;
  normalize_into(initial_counts, updated.initial);
  for (std::size_t i = 0; i < n; ++i) {
    normalize_into(transition_counts.row(i), updated.transition.row(i));
    normalize_into(emission_counts.row(i), updated.emission.row(i));
  }
  return updated;
}

}  // namespace

void HmmModel::validate(double tolerance) const {
  if (n_states == 0 || n_symbols == 0) throw config_error("model dimensions must be positive");
  if (transition.rows() != n_states || transition.cols() != n_states) {
    throw config_error("transition matrix must be n_states x n_states");
  }
  if (emission.rows() != n_states || emission.cols() != n_symbols) {
    throw config_error("emission matrix must be n_states x n_symbols");
  }
  if (initial.size() != n_states) throw config_error("initial vector must have n_states entries");
  check_row(initial, tolerance, "initial", 0);
  for (std::size_t i = 0; i < n_states; ++i) {
    check_row(transition.row(i), tolerance, "transition", i);
    check_row(emission.row(i), tolerance, "emission", i);
  }
}

void TrainingConfig::validate() const {
  if (n_states == 0) throw config_error("n_states must be positive");
  if (min_iterations == 0 || max_iterations == 0) {
    throw config_error("iteration counts must be positive");
  }
  if (min_iterations > max_iterations) {
    throw config_error("min_iterations must not exceed max_iterations");
  }
  if (!(epsilon > 0.0)) throw config_error("epsilon must be positive");
  if (!(init_jitter >= 0.0 && init_jitter <= 0.05)) {
    throw config_error("init_jitter must lie in [0, 0.05]");
  }
}

HmmModel init_model(std::size_t n_states, std::size_t n_symbols, std::uint64_t seed,
                    double jitter) {
  if (n_states == 0 || n_symbols == 0) {
    throw config_error("init_model: n_states and n_symbols must be positive");
  }
  if (!(jitter >= 0.0 && jitter <= 0.05)) {
    throw config_error("init_model: jitter must lie in [0, 0.05]");
  }

  Rng rng(seed);
  auto perturbed = [&](std::span<double> row) {
    for (double& v : row) v = 1.0 + jitter * (2.0 * rng.uniform() - 1.0);
    normalize(row);
  };

  HmmModel model;
  model.n_states = n_states;
  model.n_symbols = n_symbols;
  model.initial.assign(n_states, 0.0);
  model.transition = Matrix(n_states, n_states);
  model.emission = Matrix(n_states, n_symbols);

  perturbed(model.initial);
  for (std::size_t i = 0; i < n_states; ++i) perturbed(model.transition.row(i));
  for (std::size_t i = 0; i < n_states; ++i) perturbed(model.emission.row(i));
  return model;
}

double joint_path_probability(const HmmModel& model, std::span<const State> states,
                              std::span<const Symbol> obs) {
  if (states.size() != obs.size()) {
    throw argument_error("state and observation sequences differ in length");
  }
  check_observations(model, obs);
  for (State s : states) {
    if (s >= model.n_states) throw argument_error("state index out of range");
  }

  double p = model.initial[states[0]] * model.emission(states[0], obs[0]);
  for (std::size_t t = 1; t < obs.size(); ++t) {
    p *= model.transition(states[t - 1], states[t]) * model.emission(states[t], obs[t]);
  }
  return p;
}

ForwardResult forward(const HmmModel& model, std::span<const Symbol> obs) {
  check_observations(model, obs);
  const std::size_t n = model.n_states;
  const std::size_t length = obs.size();

  ForwardResult result;
  result.alpha = Matrix(length, n);
  result.scale_factors.resize(length);

  auto finish_row = [&](std::size_t t) {
    auto row = result.alpha.row(t);
    double sum = 0.0;
    for (double v : row) sum += v;
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      throw degenerate_observation_error("observation at position " + std::to_string(t) +
                                         " has zero probability under the model");
    }
    for (double& v : row) v /= sum;
    result.scale_factors[t] = sum;
    result.log_likelihood += std::log(sum);
  };

  for (std::size_t i = 0; i < n; ++i) {
    result.alpha(0, i) = model.initial[i] * model.emission(i, obs[0]);
  }
  finish_row(0);

  for (std::size_t t = 1; t < length; ++t) {
    const auto prev = result.alpha.row(t - 1);
    auto row = result.alpha.row(t);
    for (std::size_t j = 0; j < n; ++j) {
      const double a_prev = prev[j];
      const auto trans_row = model.transition.row(j);
      for (std::size_t i = 0; i < n; ++i) row[i] += a_prev * trans_row[i];
    }
    for (std::size_t i = 0; i < n; ++i) row[i] *= model.emission(i, obs[t]);
    finish_row(t);
  }
  return result;
}

Matrix backward(const HmmModel& model, std::span<const Symbol> obs,
                std::span<const double> scale_factors) {
  check_observations(model, obs);
  if (scale_factors.size() != obs.size()) {
    throw argument_error("backward: scale factor count does not match sequence length");
  }
  const std::size_t n = model.n_states;
  const std::size_t length = obs.size();

  Matrix beta(length, n);
  for (std::size_t i = 0; i < n; ++i) beta(length - 1, i) = 1.0;

  std::vector<double> weight(n);
  for (std::size_t t = length - 1; t-- > 0;) {
    const auto next = beta.row(t + 1);
    for (std::size_t j = 0; j < n; ++j) {
      weight[j] = model.emission(j, obs[t + 1]) * next[j] / scale_factors[t + 1];
    }
    auto row = beta.row(t);
    for (std::size_t i = 0; i < n; ++i) {
      const auto trans_row = model.transition.row(i);
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += trans_row[j] * weight[j];
      row[i] = sum;
    }
  }
  return beta;
}

Matrix state_posteriors(const HmmModel& model, std::span<const Symbol> obs) {
  const ForwardBackward fb = forward_backward(model, obs);
  Matrix gamma(obs.size(), model.n_states);
  for (std::size_t t = 0; t < obs.size(); ++t) {
    for (std::size_t i = 0; i < model.n_states; ++i) {
      gamma(t, i) = fb.fwd.alpha(t, i) * fb.beta(t, i);
    }
  }
  return gamma;
}

std::vector<State> posterior_decode(const HmmModel& model, std::span<const Symbol> obs) {
  HmmModel floored = model;
  for (std::size_t i = 0; i < floored.n_states; ++i) {
    for (double& b : floored.emission.row(i)) b = std::max(b, kDecodeEmissionFloor);
  }

  const Matrix gamma = state_posteriors(floored, obs);
  std::vector<State> states(obs.size());
  for (std::size_t t = 0; t < obs.size(); ++t) {
    const auto row = gamma.row(t);
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i] > row[best]) best = i;
    }
    states[t] = static_cast<State>(best);
  }
  return states;
}

ViterbiResult viterbi(const HmmModel& model, std::span<const Symbol> obs) {
  check_observations(model, obs);
  const std::size_t n = model.n_states;
  const std::size_t length = obs.size();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  auto safe_log = [](double p) { return p > 0.0 ? std::log(p) : kNegInf; };

  Matrix log_transition(n, n);
  Matrix log_emission(n, model.n_symbols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) log_transition(i, j) = safe_log(model.transition(i, j));
    for (std::size_t k = 0; k < model.n_symbols; ++k) log_emission(i, k) = safe_log(model.emission(i, k));
  }

  // suffix(t, i): best log-probability of o_{t+1..T-1} given x_t = i. Running
  // the max-product pass backwards lets the path be chosen front to back, so
  // equal-probability paths resolve to the lexicographically smallest one.
  Matrix suffix(length, n, 0.0);
  auto step = [&](std::size_t t, std::size_t i, std::size_t j) {
    return log_transition(i, j) + log_emission(j, obs[t + 1]) + suffix(t + 1, j);
  };
  for (std::size_t t = length - 1; t-- > 0;) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = kNegInf;
      for (std::size_t j = 0; j < n; ++j) best = std::max(best, step(t, i, j));
      suffix(t, i) = best;
    }
  }

  std::vector<double> start(n);
  double best = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    start[i] = safe_log(model.initial[i]) + log_emission(i, obs[0]) + suffix(0, i);
    best = std::max(best, start[i]);
  }
  if (best == kNegInf) {
    throw degenerate_observation_error("observation sequence has zero probability under the model");
  }
  // rounding in the log sums must not decide between tied paths
  const double tolerance = kViterbiTieTolerance * std::max(1.0, std::abs(best));
  auto first_within = [&](auto&& score, double target) {
    for (std::size_t j = 0; j < n; ++j) {
      if (score(j) >= target - tolerance) return static_cast<State>(j);
    }
    return static_cast<State>(0);  // unreachable: the maximiser is always within
  };

  ViterbiResult result;
  result.log_prob = best;
  result.path.resize(length);
  result.path[0] = first_within([&](std::size_t j) { return start[j]; }, best);
  for (std::size_t t = 0; t + 1 < length; ++t) {
    const std::size_t from = result.path[t];
    result.path[t + 1] = first_within([&](std::size_t j) { return step(t, from, j); }, suffix(t, from));
  }
  return result;
}

BaumWelchResult baum_welch(std::span<const Symbol> obs, std::size_t n_symbols,
                           const TrainingConfig& config, const IterationObserver& observer) {
  config.validate();
  if (obs.size() < 2) throw training_error("Baum-Welch needs at least 2 observations");

  BaumWelchResult result;
  result.model = init_model(config.n_states, n_symbols, config.seed, config.init_jitter);
  check_observations(result.model, obs);

  auto score = [&](const HmmModel& model, std::size_t iteration) {
    try {
      ForwardBackward fb = forward_backward(model, obs);
      if (!std::isfinite(fb.fwd.log_likelihood)) {
        throw numerical_error("non-finite log-likelihood at iteration " +
                              std::to_string(iteration));
      }
      return fb;
    } catch (const degenerate_observation_error& e) {
      throw numerical_error("Baum-Welch iteration " + std::to_string(iteration) + ": " + e.what());
    }
  };

  ForwardBackward fb = score(result.model, 0);
  result.history.push_back(fb.fwd.log_likelihood);

  for (std::size_t iteration = 1; iteration <= config.max_iterations; ++iteration) {
    result.model = reestimate(result.model, obs, fb);
    fb = score(result.model, iteration);
    result.history.push_back(fb.fwd.log_likelihood);
    result.iterations = iteration;
    if (observer) observer(iteration, result.model, fb.fwd.log_likelihood);

    const double change = result.history[iteration] - result.history[iteration - 1];
    if (iteration >= config.min_iterations && std::abs(change) < config.epsilon) break;
  }
  return result;
}

}  // namespace hmmrf
