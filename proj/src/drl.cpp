#include "geosched/drl.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "geosched/kernels.hpp"
#include "json.hpp"

namespace geosched::drl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2*pi)
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double log_std_eff(double ls) { return std::max(ls, kLogStdFloor); }

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void check_finite_params(const PolicyParams& p) {
  for (const auto& w : p.net.w) {
    if (!all_finite(w)) throw NonFiniteParams("policy weights are non-finite");
  }
  for (const auto& b : p.net.b) {
    if (!all_finite(b)) throw NonFiniteParams("policy biases are non-finite");
  }
  if (!all_finite(p.log_std)) {
    throw NonFiniteParams("policy log_std is non-finite");
  }
}

// Forward pass keeping every activation for backprop. acts[0] is the input,
// acts[l+1] the output of layer l (tanh applied on hidden layers, linear on
// the last).
void forward_cached(const Mlp& net, std::span<const double> x,
                    std::vector<std::vector<double>>& acts) {
  acts.resize(net.w.size() + 1);
  acts[0].assign(x.begin(), x.end());
  for (int l = 0; l < net.layers(); ++l) {
    const std::size_t rows = static_cast<std::size_t>(net.sizes[l + 1]);
    const std::size_t cols = static_cast<std::size_t>(net.sizes[l]);
    acts[l + 1].resize(rows);
    kern::matvec(net.w[l].data(), rows, cols, acts[l].data(), net.b[l].data(),
                 acts[l + 1].data());
    if (l + 1 < net.layers()) {
      for (double& v : acts[l + 1]) v = std::tanh(v);
    }
  }
}

// Backprop from g_out (gradient at the linear output) through the cached
// activations. Weight/bias gradients accumulate into the flat vector using
// the flatten layout; g_out is clobbered.
void backward_into(const Mlp& net, const std::vector<std::vector<double>>& acts,
                   std::vector<double>& g, std::vector<double>& flat_grad) {
  // Offsets of each layer's weight block in the flat layout.
  std::vector<std::size_t> w_off(net.w.size()), b_off(net.w.size());
  std::size_t off = 0;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    w_off[l] = off;
    off += net.w[l].size();
    b_off[l] = off;
    off += net.b[l].size();
  }
  std::vector<double> g_prev;
  for (int l = net.layers() - 1; l >= 0; --l) {
    const std::size_t rows = static_cast<std::size_t>(net.sizes[l + 1]);
    const std::size_t cols = static_cast<std::size_t>(net.sizes[l]);
    kern::ger_acc(flat_grad.data() + w_off[l], rows, cols, g.data(),
                  acts[l].data());
    kern::axpy(1.0, g.data(), flat_grad.data() + b_off[l], rows);
    if (l > 0) {
      g_prev.resize(cols);
      kern::matvec_t(net.w[l].data(), rows, cols, g.data(), g_prev.data());
      // tanh' = 1 - a^2 with a the cached activation
      for (std::size_t j = 0; j < cols; ++j) {
        g_prev[j] *= 1.0 - acts[l][j] * acts[l][j];
      }
      g.swap(g_prev);
    }
  }
}

double diag_gauss_log_prob(std::span<const double> z,
                           std::span<const double> mu,
                           std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t d = 0; d < z.size(); ++d) {
    const double ls = log_std_eff(log_std[d]);
    const double inv_sigma = std::exp(-ls);
    const double u = (z[d] - mu[d]) * inv_sigma;
    lp += -0.5 * u * u - ls - 0.5 * kLog2Pi;
  }
  return lp;
}

void clip_global_norm(std::vector<double>& g, double max_norm) {
  const double sq = kern::dot(g.data(), g.data(), g.size());
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& x : g) x *= scale;
  }
}

}  // namespace

Mlp make_mlp(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw Error("mlp needs at least input and output sizes");
  for (int s : sizes) {
    if (s < 1) throw Error("mlp layer sizes must be positive");
  }
  Mlp net;
  net.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    net.w.emplace_back(static_cast<std::size_t>(sizes[l + 1]) *
                           static_cast<std::size_t>(sizes[l]),
                       0.0);
    net.b.emplace_back(static_cast<std::size_t>(sizes[l + 1]), 0.0);
  }
  return net;
}

void randomize_mlp(Mlp& net, Rng& rng) {
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    const double fan_in = net.sizes[l];
    const double fan_out = net.sizes[l + 1];
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : net.w[l]) v = rng.uniform(-s, s);
    std::fill(net.b[l].begin(), net.b[l].end(), 0.0);
  }
}

PolicyParams make_policy(int n_state, int n_action) {
  if (n_state < 1 || n_action < 1) throw Error("policy dims must be positive");
  PolicyParams p;
  p.net = make_mlp({n_state, kHidden, kHidden, n_action});
  p.log_std.assign(static_cast<std::size_t>(n_action), 0.0);
  return p;
}

ValueParams make_value(int n_state) {
  if (n_state < 1) throw Error("value dim must be positive");
  ValueParams v;
  v.net = make_mlp({n_state, kHidden, kHidden, 1});
  return v;
}

void randomize_policy(PolicyParams& p, uint64_t seed) {
  Rng rng(seed);
  randomize_mlp(p.net, rng);
}

void randomize_value(ValueParams& v, uint64_t seed) {
  Rng rng(seed);
  randomize_mlp(v.net, rng);
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> x) {
  if (static_cast<int>(x.size()) != net.input_dim()) {
    throw Error("mlp input size mismatch");
  }
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (int l = 0; l < net.layers(); ++l) {
    const std::size_t rows = static_cast<std::size_t>(net.sizes[l + 1]);
    const std::size_t cols = static_cast<std::size_t>(net.sizes[l]);
    next.resize(rows);
    kern::matvec(net.w[l].data(), rows, cols, cur.data(), net.b[l].data(),
                 next.data());
    if (l + 1 < net.layers()) {
      for (double& v : next) v = std::tanh(v);
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> policy_logits(const PolicyParams& p,
                                  std::span<const double> state) {
  check_finite_params(p);
  return mlp_forward(p.net, state);
}

std::vector<double> forward_policy(const PolicyParams& p,
                                   std::span<const double> state) {
  return softmax(policy_logits(p, state));
}

ActionSample sample_action(const PolicyParams& p, std::span<const double> state,
                           Rng& rng) {
  check_finite_params(p);
  ActionSample s;
  std::vector<double> mu = mlp_forward(p.net, state);
  s.z.resize(mu.size());
  for (std::size_t d = 0; d < mu.size(); ++d) {
    const double sigma = std::exp(log_std_eff(p.log_std[d]));
    s.z[d] = mu[d] + sigma * rng.gaussian();
  }
  s.fractions = softmax(s.z);
  s.log_prob = diag_gauss_log_prob(s.z, mu, p.log_std);
  return s;
}

double value_forward(const ValueParams& v, std::span<const double> state) {
  return mlp_forward(v.net, state)[0];
}

void gae(const Trajectory& traj, double gamma, double lambda,
         std::vector<double>& advantages, std::vector<double>& returns) {
  const std::size_t n = traj.steps.size();
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double carry = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const Transition& t = traj.steps[k];
    const bool terminal = t.done || k + 1 == n;
    const double next_v = terminal ? 0.0 : traj.steps[k + 1].value;
    const double delta = t.reward + gamma * next_v - t.value;
    carry = delta + (terminal ? 0.0 : gamma * lambda * carry);
    advantages[k] = carry;
    returns[k] = carry + t.value;
  }
}

RolloutBatch make_batch(const Trajectory& traj, double gamma, double lambda) {
  RolloutBatch b;
  b.states.reserve(traj.steps.size());
  b.z.reserve(traj.steps.size());
  b.old_log_prob.reserve(traj.steps.size());
  for (const Transition& t : traj.steps) {
    b.states.push_back(t.state);
    b.z.push_back(t.z);
    b.old_log_prob.push_back(t.log_prob);
  }
  gae(traj, gamma, lambda, b.advantages, b.returns);
  return b;
}

size_t param_count(const Mlp& net) {
  std::size_t n = 0;
  for (const auto& w : net.w) n += w.size();
  for (const auto& b : net.b) n += b.size();
  return n;
}

void flatten(const Mlp& net, std::vector<double>& out) {
  out.clear();
  out.reserve(param_count(net));
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    out.insert(out.end(), net.w[l].begin(), net.w[l].end());
    out.insert(out.end(), net.b[l].begin(), net.b[l].end());
  }
}

void unflatten(std::span<const double> flat, Mlp& net) {
  if (flat.size() != param_count(net)) throw Error("mlp flat size mismatch");
  std::size_t off = 0;
  for (std::size_t l = 0; l < net.w.size(); ++l) {
    std::copy_n(flat.begin() + off, net.w[l].size(), net.w[l].begin());
    off += net.w[l].size();
    std::copy_n(flat.begin() + off, net.b[l].size(), net.b[l].begin());
    off += net.b[l].size();
  }
}

size_t param_count(const PolicyParams& p) {
  return param_count(p.net) + p.log_std.size();
}

void flatten(const PolicyParams& p, std::vector<double>& out) {
  flatten(p.net, out);
  out.insert(out.end(), p.log_std.begin(), p.log_std.end());
}

void unflatten(std::span<const double> flat, PolicyParams& p) {
  if (flat.size() != param_count(p)) throw Error("policy flat size mismatch");
  const std::size_t net_n = param_count(p.net);
  unflatten(flat.subspan(0, net_n), p.net);
  std::copy_n(flat.begin() + net_n, p.log_std.size(), p.log_std.begin());
}

PolicyLossOut policy_loss_grad(const PolicyParams& p, const RolloutBatch& batch,
                               std::span<const size_t> idx,
                               std::span<const double> norm_adv,
                               const PpoConfig& cfg, std::vector<double>& grad) {
  if (idx.size() != norm_adv.size()) {
    throw Error("policy_loss_grad: index/advantage size mismatch");
  }
  if (grad.size() != param_count(p)) {
    throw Error("policy_loss_grad: grad buffer size mismatch");
  }
  const std::size_t n = idx.size();
  const std::size_t n_act = p.log_std.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::size_t ls_off = param_count(p.net);

  PolicyLossOut out;
  double surr_sum = 0.0;
  std::size_t clipped = 0;
  std::vector<std::vector<double>> acts;
  std::vector<double> g_mu(n_act);

  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = idx[k];
    forward_cached(p.net, batch.states[i], acts);
    const std::vector<double>& mu = acts.back();
    const std::vector<double>& z = batch.z[i];
    const double lp = diag_gauss_log_prob(z, mu, p.log_std);
    const double ratio = std::exp(lp - batch.old_log_prob[i]);
    const double a = norm_adv[k];
    const double lo = 1.0 - cfg.clip_eps;
    const double hi = 1.0 + cfg.clip_eps;
    const double unclipped = ratio * a;
    const double clip_term = std::clamp(ratio, lo, hi) * a;
    if (ratio < lo || ratio > hi) ++clipped;

    double surr, dsurr_dratio;
    if (unclipped <= clip_term) {
      surr = unclipped;
      dsurr_dratio = a;
    } else {
      surr = clip_term;
      dsurr_dratio = (ratio > lo && ratio < hi) ? a : 0.0;
    }
    surr_sum += surr;

    // loss contribution -surr/n; d(-surr)/dlp = -dsurr_dratio * ratio
    const double dloss_dlp = -dsurr_dratio * ratio * inv_n;
    if (dloss_dlp != 0.0) {
      for (std::size_t d = 0; d < n_act; ++d) {
        const double ls = log_std_eff(p.log_std[d]);
        const double inv_var = std::exp(-2.0 * ls);
        const double diff = z[d] - mu[d];
        // dlp/dmu = (z-mu)/sigma^2, dlp/dlog_std = ((z-mu)/sigma)^2 - 1
        g_mu[d] = dloss_dlp * diff * inv_var;
        if (p.log_std[d] > kLogStdFloor) {
          grad[ls_off + d] += dloss_dlp * (diff * diff * inv_var - 1.0);
        }
      }
      backward_into(p.net, acts, g_mu, grad);
    }
  }

  // Entropy of the diagonal Gaussian is state-independent, so it enters the
  // minibatch loss once: H = sum_d (log_std_d + 0.5*ln(2*pi*e)).
  double entropy = 0.0;
  for (std::size_t d = 0; d < n_act; ++d) {
    entropy += log_std_eff(p.log_std[d]) + 0.5 * (kLog2Pi + 1.0);
    if (p.log_std[d] > kLogStdFloor) {
      grad[ls_off + d] -= cfg.entropy_coef;
    }
  }

  out.loss = -surr_sum * inv_n - cfg.entropy_coef * entropy;
  out.entropy = entropy;
  out.clip_fraction = static_cast<double>(clipped) * inv_n;
  return out;
}

double value_loss_grad(const ValueParams& v, const RolloutBatch& batch,
                       std::span<const size_t> idx, std::vector<double>& grad) {
  if (grad.size() != param_count(v.net)) {
    throw Error("value_loss_grad: grad buffer size mismatch");
  }
  const double inv_n = 1.0 / static_cast<double>(idx.size());
  double loss = 0.0;
  std::vector<std::vector<double>> acts;
  std::vector<double> g_out(1);
  for (std::size_t i : idx) {
    forward_cached(v.net, batch.states[i], acts);
    const double err = acts.back()[0] - batch.returns[i];
    loss += 0.5 * err * err * inv_n;
    g_out[0] = err * inv_n;
    backward_into(v.net, acts, g_out, grad);
  }
  return loss;
}

void adam_step(std::vector<double>& params, std::span<const double> grad,
               Adam& state, double lr) {
  const std::size_t n = params.size();
  if (grad.size() != n) throw Error("adam_step: grad size mismatch");
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n) throw Error("adam_step: state size mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = kAdamBeta1 * state.m[i] + (1.0 - kAdamBeta1) * grad[i];
    state.v[i] = kAdamBeta2 * state.v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
  }
}

PpoStats ppo_update(PolicyParams& policy, ValueParams& value, Adam& policy_adam,
                    Adam& value_adam, RolloutBatch& batch, const PpoConfig& cfg,
                    Rng& rng) {
  if (batch.consumed) {
    throw Error("rollout batch already consumed; collect a fresh one");
  }
  if (batch.size() == 0) throw Error("empty rollout batch");
  batch.consumed = true;

  const std::size_t n = batch.size();
  double mean = 0.0;
  for (double a : batch.advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : batch.advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double inv_sd = 1.0 / (std::sqrt(var) + 1e-8);
  std::vector<double> norm_adv(n);
  for (std::size_t i = 0; i < n; ++i) {
    norm_adv[i] = (batch.advantages[i] - mean) * inv_sd;
  }

  std::vector<double> pol_flat, val_flat;
  flatten(policy, pol_flat);
  flatten(value.net, val_flat);
  const std::vector<double> pol_snapshot = pol_flat;
  const std::vector<double> val_snapshot = val_flat;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> pol_grad(pol_flat.size());
  std::vector<double> val_grad(val_flat.size());
  std::vector<std::size_t> chunk;
  std::vector<double> chunk_adv;

  PpoStats stats;
  double steps_seen = 0.0;
  const std::size_t mb =
      std::max<std::size_t>(1, static_cast<std::size_t>(cfg.minibatch));

  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t stop = std::min(n, start + mb);
      chunk.assign(order.begin() + start, order.begin() + stop);
      chunk_adv.resize(chunk.size());
      for (std::size_t k = 0; k < chunk.size(); ++k) {
        chunk_adv[k] = norm_adv[chunk[k]];
      }

      std::fill(pol_grad.begin(), pol_grad.end(), 0.0);
      std::fill(val_grad.begin(), val_grad.end(), 0.0);
      const PolicyLossOut pl =
          policy_loss_grad(policy, batch, chunk, chunk_adv, cfg, pol_grad);
      const double vl = value_loss_grad(value, batch, chunk, val_grad);
      for (double& g : val_grad) g *= cfg.value_coef;

      if (!all_finite(pol_grad) || !all_finite(val_grad)) {
        unflatten(pol_snapshot, policy);
        unflatten(val_snapshot, value.net);
        stats.aborted_non_finite = true;
        return stats;
      }

      clip_global_norm(pol_grad, cfg.grad_clip_norm);
      clip_global_norm(val_grad, cfg.grad_clip_norm);
      adam_step(pol_flat, pol_grad, policy_adam, cfg.lr);
      adam_step(val_flat, val_grad, value_adam, cfg.lr);
      unflatten(pol_flat, policy);
      unflatten(val_flat, value.net);

      const double w = static_cast<double>(chunk.size());
      stats.policy_loss += pl.loss * w;
      stats.value_loss += vl * w;
      stats.entropy += pl.entropy * w;
      stats.clip_fraction += pl.clip_fraction * w;
      steps_seen += w;
    }
  }

  if (steps_seen > 0.0) {
    stats.policy_loss /= steps_seen;
    stats.value_loss /= steps_seen;
    stats.entropy /= steps_seen;
    stats.clip_fraction /= steps_seen;
  }
  return stats;
}

namespace {

using json = nlohmann::ordered_json;

json mlp_to_json_obj(const Mlp& net) {
  json j;
  j["sizes"] = net.sizes;
  j["w"] = net.w;
  j["b"] = net.b;
  return j;
}

Mlp mlp_from_json_obj(const json& j) {
  if (!j.contains("sizes") || !j.contains("w") || !j.contains("b")) {
    throw MalformedConfig("checkpoint: missing mlp fields");
  }
  std::vector<int> sizes = j.at("sizes").get<std::vector<int>>();
  Mlp net = make_mlp(sizes);
  auto w = j.at("w").get<std::vector<std::vector<double>>>();
  auto b = j.at("b").get<std::vector<std::vector<double>>>();
  if (w.size() != net.w.size() || b.size() != net.b.size()) {
    throw MalformedConfig("checkpoint: layer count mismatch");
  }
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (w[l].size() != net.w[l].size() || b[l].size() != net.b[l].size()) {
      throw MalformedConfig("checkpoint: layer size mismatch");
    }
    net.w[l] = std::move(w[l]);
    net.b[l] = std::move(b[l]);
  }
  return net;
}

json parse_checkpoint(const std::string& text, const char* kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedConfig(std::string("checkpoint: bad json: ") + e.what());
  }
  if (!j.is_object() || j.value("kind", "") != kind) {
    throw MalformedConfig(std::string("checkpoint: expected kind \"") + kind +
                          "\"");
  }
  return j;
}

}  // namespace

std::string policy_to_json(const PolicyParams& p) {
  json j;
  j["kind"] = "policy";
  j["net"] = mlp_to_json_obj(p.net);
  j["log_std"] = p.log_std;
  return j.dump(2);
}

PolicyParams policy_from_json(const std::string& text) {
  const json j = parse_checkpoint(text, "policy");
  if (!j.contains("net") || !j.contains("log_std")) {
    throw MalformedConfig("checkpoint: missing policy fields");
  }
  PolicyParams p;
  p.net = mlp_from_json_obj(j.at("net"));
  p.log_std = j.at("log_std").get<std::vector<double>>();
  if (static_cast<int>(p.log_std.size()) != p.net.output_dim()) {
    throw MalformedConfig("checkpoint: log_std size mismatch");
  }
  return p;
}

std::string value_to_json(const ValueParams& v) {
  json j;
  j["kind"] = "value";
  j["net"] = mlp_to_json_obj(v.net);
  return j.dump(2);
}

ValueParams value_from_json(const std::string& text) {
  const json j = parse_checkpoint(text, "value");
  if (!j.contains("net")) {
    throw MalformedConfig("checkpoint: missing value fields");
  }
  ValueParams v;
  v.net = mlp_from_json_obj(j.at("net"));
  if (v.net.output_dim() != 1) {
    throw MalformedConfig("checkpoint: value net must have scalar output");
  }
  return v;
}

}  // namespace geosched::drl
