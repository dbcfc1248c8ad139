#include "jumper/ppo.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace jumper {
namespace {

void Require(bool ok, const char* field) {
  if (!ok) {
    throw std::invalid_argument(std::string("invalid ppo field '") + field +
                                "'");
  }
}

double Variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double acc = 0.0;
  for (const double v : x) acc += (v - mean) * (v - mean);
  return acc / x.size();
}

}  // namespace

void PPOConfig::Validate() const {
  Require(gamma >= 0.0 && gamma < 1.0, "gamma");
  Require(lambda >= 0.0 && lambda <= 1.0, "lambda");
  Require(clip > 0.0 && clip < 1.0, "clip");
  Require(epochs >= 1, "epochs");
  Require(minibatches >= 1, "minibatches");
  Require(value_coef >= 0.0, "value_coef");
  Require(entropy_coef >= 0.0, "entropy_coef");
  Require(max_grad_norm > 0.0, "max_grad_norm");
  Require(patch_len >= 1, "patch_len");
  Require(num_envs >= 1, "num_envs");
  Require(learning_rate > 0.0, "learning_rate");
  Require(minibatches <= num_envs * patch_len, "minibatches");
}

PatchBuffer::PatchBuffer(int e, int l, int obs_dim, int act_dim)
    : num_envs(e), patch_len(l) {
  const int n = e * l;
  obs = Matrix::Zero(obs_dim, n);
  actions = Matrix::Zero(act_dim, n);
  log_probs.assign(n, 0.0);
  values.assign(n, 0.0);
  rewards.assign(n, 0.0);
  truncation_values.assign(n, 0.0);
  dones.assign(n, 0);
  reasons.assign(n, TerminationReason::kNone);
  tags.assign(n, ActorTag::kLearner);
  bootstrap.assign(e, 0.0);
  reward_terms.assign(n, {});
}

std::string PatchBuffer::Check() const {
  const std::size_t n = static_cast<std::size_t>(size());
  if (num_envs <= 0 || patch_len <= 0) return "empty buffer";
  if (static_cast<std::size_t>(obs.cols()) != n ||
      static_cast<std::size_t>(actions.cols()) != n || log_probs.size() != n ||
      values.size() != n || rewards.size() != n ||
      truncation_values.size() != n || dones.size() != n ||
      reasons.size() != n || tags.size() != n) {
    return "sequence length differs from E*L";
  }
  if (bootstrap.size() != static_cast<std::size_t>(num_envs)) {
    return "bootstrap count differs from E";
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((dones[i] != 0) != (reasons[i] != TerminationReason::kNone)) {
      return "done flag disagrees with termination reason at " +
             std::to_string(i);
    }
  }
  return "";
}

GaeResult Gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double bootstrap,
              double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw std::invalid_argument("gae inputs differ in length");
  }
  GaeResult r;
  r.advantages.assign(n, 0.0);
  r.returns.assign(n, 0.0);
  double next_value = bootstrap;
  double next_adv = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    r.advantages[k] = next_adv;
    r.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return r;
}

double ClippedObjective(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

LossResult PpoLoss(const PolicyParams& params, const LossBatch& batch,
                   const LossCoefs& coefs, std::span<double> grads) {
  const int b = static_cast<int>(batch.obs.cols());
  const int act = params.act_dim();
  if (b == 0) throw std::invalid_argument("empty loss batch");
  const bool want_grad = !grads.empty();
  const BatchForward fwd = ForwardBatch(params, batch.obs);
  const Vector log_std = params.LogStd();
  const Vector inv_var = (-2.0 * log_std).array().exp();

  LossResult out;
  for (int i = 0; i < b; ++i) out.surrogate_steps += batch.in_surrogate[i] != 0;
  out.pure_guide = out.surrogate_steps == 0;
  const double surr_scale =
      out.surrogate_steps > 0 ? 1.0 / out.surrogate_steps : 0.0;

  Matrix d_mean = Matrix::Zero(act, b);
  Vector d_log_std = Vector::Zero(act);
  Vector d_value(b);
  int clipped = 0;
  for (int i = 0; i < b; ++i) {
    const double err = fwd.value[i] - batch.returns[i];
    out.value_loss += err * err / b;
    d_value[i] = coefs.value_coef * 2.0 * err / b;
    if (!batch.in_surrogate[i]) continue;
    GaussianDist dist{fwd.mean.col(i), log_std};
    const double logp =
        LogProb(dist, {batch.actions.col(i).data(), static_cast<std::size_t>(act)});
    const double log_ratio = logp - batch.old_log_probs[i];
    const double ratio = std::exp(log_ratio);
    const double adv = batch.advantages[i];
    const double term = ClippedObjective(ratio, adv, coefs.clip);
    out.surrogate -= surr_scale * term;
    if (std::abs(ratio - 1.0) > coefs.clip) ++clipped;
    out.approx_kl += surr_scale * ((ratio - 1.0) - log_ratio);
    // The unclipped branch is the active one exactly when it attains the min.
    if (ratio * adv <= std::clamp(ratio, 1.0 - coefs.clip, 1.0 + coefs.clip) * adv) {
      const double d_logp = -surr_scale * ratio * adv;
      for (int j = 0; j < act; ++j) {
        const double diff = batch.actions(j, i) - fwd.mean(j, i);
        d_mean(j, i) += d_logp * diff * inv_var[j];
        d_log_std[j] += d_logp * (diff * diff * inv_var[j] - 1.0);
      }
    }
  }
  out.clip_fraction =
      out.surrogate_steps > 0 ? static_cast<double>(clipped) / out.surrogate_steps
                              : 0.0;
  out.entropy = Entropy({fwd.mean.col(0), log_std});
  d_log_std.array() -= coefs.entropy_coef;
  out.loss = out.surrogate + coefs.value_coef * out.value_loss -
             coefs.entropy_coef * out.entropy;
  if (want_grad) Backward(params, fwd, d_mean, d_log_std, d_value, grads);
  return out;
}

UpdateStats PpoUpdate(PolicyParams& params, OptState& opt,
                      const PatchBuffer& buffer, const PPOConfig& cfg,
                      Rng& rng) {
  cfg.Validate();
  if (const std::string err = buffer.Check(); !err.empty()) {
    throw std::invalid_argument("patch buffer: " + err);
  }
  const int n = buffer.size();
  const int l = buffer.patch_len;
  opt.lr = cfg.learning_rate;

  std::vector<double> adv(n);
  std::vector<double> ret(n);
  for (int e = 0; e < buffer.num_envs; ++e) {
    const int base = buffer.Index(e, 0);
    std::vector<double> r(buffer.rewards.begin() + base,
                          buffer.rewards.begin() + base + l);
    for (int t = 0; t < l; ++t) {
      r[t] += cfg.gamma * buffer.truncation_values[base + t];
    }
    const GaeResult g =
        Gae(r, std::span(buffer.values).subspan(base, l),
            std::span(buffer.dones).subspan(base, l), buffer.bootstrap[e],
            cfg.gamma, cfg.lambda);
    std::copy(g.advantages.begin(), g.advantages.end(), adv.begin() + base);
    std::copy(g.returns.begin(), g.returns.end(), ret.begin() + base);
  }

  UpdateStats stats;
  {
    std::vector<double> resid(n);
    for (int i = 0; i < n; ++i) resid[i] = ret[i] - buffer.values[i];
    const double var_ret = Variance(ret);
    stats.explained_variance =
        var_ret > 0.0 ? 1.0 - Variance(resid) / var_ret : 0.0;
  }

  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  const double sd = std::sqrt(Variance(adv));
  for (double& a : adv) a = (a - mean) / (sd + cfg.adv_eps);

  std::vector<std::uint8_t> in_surrogate(n);
  for (int i = 0; i < n; ++i) {
    in_surrogate[i] = buffer.tags[i] == ActorTag::kLearner ||
                      cfg.guide_steps_in_surrogate;
  }
  // Behavior log-probs of guide actions under the pre-update learner.
  std::vector<double> old_log_probs = buffer.log_probs;
  if (cfg.guide_steps_in_surrogate) {
    const BatchForward f = ForwardBatch(params, buffer.obs, true, false);
    for (int i = 0; i < n; ++i) {
      if (buffer.tags[i] != ActorTag::kGuide) continue;
      old_log_probs[i] = LogProb(
          {f.mean.col(i), params.LogStd()},
          {buffer.actions.col(i).data(),
           static_cast<std::size_t>(buffer.actions.rows())});
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  const LossCoefs coefs{cfg.clip, cfg.value_coef, cfg.entropy_coef};
  std::vector<double> grads(params.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[i], order[rng.Below(static_cast<std::uint64_t>(i) + 1)]);
    }
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int begin = static_cast<int>(static_cast<long>(n) * mb / cfg.minibatches);
      const int end = static_cast<int>(static_cast<long>(n) * (mb + 1) / cfg.minibatches);
      const int b = end - begin;
      LossBatch batch;
      batch.obs.resize(buffer.obs.rows(), b);
      batch.actions.resize(buffer.actions.rows(), b);
      batch.old_log_probs.resize(b);
      batch.advantages.resize(b);
      batch.returns.resize(b);
      batch.in_surrogate.resize(b);
      for (int k = 0; k < b; ++k) {
        const int i = order[begin + k];
        batch.obs.col(k) = buffer.obs.col(i);
        batch.actions.col(k) = buffer.actions.col(i);
        batch.old_log_probs[k] = old_log_probs[i];
        batch.advantages[k] = adv[i];
        batch.returns[k] = ret[i];
        batch.in_surrogate[k] = in_surrogate[i];
      }
      std::fill(grads.begin(), grads.end(), 0.0);
      const LossResult lr = PpoLoss(params, batch, coefs, grads);
      ++stats.minibatches;
      if (!std::isfinite(lr.loss)) {
        ++stats.skipped;
        continue;
      }
      stats.pure_guide += lr.pure_guide;
      double norm = 0.0;
      for (const double g : grads) norm += g * g;
      norm = std::sqrt(norm);
      if (norm > cfg.max_grad_norm) {
        const double s = cfg.max_grad_norm / norm;
        for (double& g : grads) g *= s;
      }
      if (!AdamStep(params, grads, opt)) {
        ++stats.skipped;
        continue;
      }
      if (stats.minibatches == 1) stats.first_clip_fraction = lr.clip_fraction;
      stats.surrogate += lr.surrogate;
      stats.value_loss += lr.value_loss;
      stats.entropy += lr.entropy;
      stats.clip_fraction += lr.clip_fraction;
      stats.approx_kl += lr.approx_kl;
      stats.grad_norm += norm;
    }
  }
  const int used = stats.minibatches - stats.skipped;
  if (used > 0) {
    stats.surrogate /= used;
    stats.value_loss /= used;
    stats.entropy /= used;
    stats.clip_fraction /= used;
    stats.approx_kl /= used;
    stats.grad_norm /= used;
  }
  return stats;
}

}  // namespace jumper
