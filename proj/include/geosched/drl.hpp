#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "geosched/errors.hpp"
#include "geosched/rng.hpp"

namespace geosched::drl {

// Dense feed-forward net, tanh hidden activations, linear output.
struct Mlp {
  std::vector<int> sizes;                // input, hidden..., output
  std::vector<std::vector<double>> w;    // per layer, row-major [out x in]
  std::vector<std::vector<double>> b;

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
  int layers() const { return static_cast<int>(w.size()); }
};

Mlp make_mlp(const std::vector<int>& sizes);         // zero-initialized
void randomize_mlp(Mlp& net, Rng& rng);              // Xavier-uniform weights

// Gaussian-in-logit-space policy: the net emits |D| logits, exploration adds
// diagonal Gaussian noise exp(log_std) per logit, softmax maps to fractions.
struct PolicyParams {
  Mlp net;
  std::vector<double> log_std;  // one per output logit
};

struct ValueParams {
  Mlp net;  // scalar output
};

inline constexpr double kLogStdFloor = -20.0;
inline constexpr int kHidden = 64;

PolicyParams make_policy(int n_state, int n_action);  // zeros, log_std 0
ValueParams make_value(int n_state);
void randomize_policy(PolicyParams& p, uint64_t seed);
void randomize_value(ValueParams& v, uint64_t seed);

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x);
std::vector<double> softmax(std::span<const double> logits);

// Mean logits with the parameter finiteness check (throws NonFiniteParams).
std::vector<double> policy_logits(const PolicyParams& p,
                                  std::span<const double> state);

// Deterministic head: softmax of the mean logits. Throws NonFiniteParams if
// any parameter is non-finite.
std::vector<double> forward_policy(const PolicyParams& p,
                                   std::span<const double> state);

struct ActionSample {
  std::vector<double> z;          // noisy logits (pre-softmax)
  std::vector<double> fractions;  // softmax(z)
  double log_prob = 0.0;          // diagonal Gaussian density of z
};

ActionSample sample_action(const PolicyParams& p, std::span<const double> state,
                           Rng& rng);

double value_forward(const ValueParams& v, std::span<const double> state);

// Rollout storage ------------------------------------------------------------

struct Transition {
  std::vector<double> state;
  std::vector<double> z;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> steps;
};

// Generalized advantage estimation. Emits the raw recursion values
// (normalization happens inside ppo_update); returns[t] = adv[t] + value[t].
// Episodes are delimited by done flags; the final step is treated as
// terminal when its done flag is unset (no bootstrap value is stored).
void gae(const Trajectory& traj, double gamma, double lambda,
         std::vector<double>& advantages, std::vector<double>& returns);

struct RolloutBatch {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> z;
  std::vector<double> old_log_prob;
  std::vector<double> advantages;  // raw GAE values
  std::vector<double> returns;
  bool consumed = false;  // a batch feeds exactly one update (on-policy)

  size_t size() const { return states.size(); }
};

RolloutBatch make_batch(const Trajectory& traj, double gamma, double lambda);

// PPO ------------------------------------------------------------------------

struct PpoConfig {
  double clip_eps = 0.2;
  double gamma = 0.99;
  double lambda_gae = 0.95;
  double lr = 3e-4;
  int epochs_per_update = 10;
  int minibatch = 64;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double grad_clip_norm = 0.5;
  int rollout_episodes = 8;  // episodes collected per update
  uint64_t seed = 0;
};

struct PpoStats {
  double policy_loss = 0.0;  // mean over minibatch steps
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  bool aborted_non_finite = false;
};

// Flat parameter views (optimizer state and finite-difference tests work on
// these). Order: per layer weights then bias, then log_std for policies.
size_t param_count(const Mlp& net);
void flatten(const Mlp& net, std::vector<double>& out);
void unflatten(std::span<const double> flat, Mlp& net);
size_t param_count(const PolicyParams& p);
void flatten(const PolicyParams& p, std::vector<double>& out);
void unflatten(std::span<const double> flat, PolicyParams& p);

// Clipped-surrogate policy loss (to minimize): -E[min(rho A, clip(rho) A)]
// - entropy_coef * H(sigma). Gradient accumulates into grad (flat policy
// layout, preallocated and zeroed by the caller). advantages here are the
// already-normalized values for the selected indices.
struct PolicyLossOut {
  double loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};
PolicyLossOut policy_loss_grad(const PolicyParams& p, const RolloutBatch& batch,
                               std::span<const size_t> idx,
                               std::span<const double> norm_adv,
                               const PpoConfig& cfg, std::vector<double>& grad);

// 0.5 * mean squared error against returns; gradient in flat value layout.
double value_loss_grad(const ValueParams& v, const RolloutBatch& batch,
                       std::span<const size_t> idx, std::vector<double>& grad);

struct Adam {
  std::vector<double> m, v;
  long t = 0;
};

// One Adam step over flat params; standard bias correction, eps 1e-8.
void adam_step(std::vector<double>& params, std::span<const double> grad,
               Adam& state, double lr);

// Full PPO update: normalizes advantages batch-wide, runs epochs_per_update
// passes of shuffled minibatches, Adam on both nets (value gradient scaled by
// value_coef), per-net global-norm gradient clipping. Marks the batch
// consumed. On a non-finite gradient the original parameters are restored and
// the abort flag set.
PpoStats ppo_update(PolicyParams& policy, ValueParams& value, Adam& policy_adam,
                    Adam& value_adam, RolloutBatch& batch, const PpoConfig& cfg,
                    Rng& rng);

// Checkpoints ----------------------------------------------------------------

std::string policy_to_json(const PolicyParams& p);
PolicyParams policy_from_json(const std::string& text);
std::string value_to_json(const ValueParams& v);
ValueParams value_from_json(const std::string& text);

}  // namespace geosched::drl
