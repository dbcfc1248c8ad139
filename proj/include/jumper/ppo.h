#ifndef JUMPER_PPO_H_
#define JUMPER_PPO_H_

#include <cstdint>
#include <span>
#include <vector>

#include "jumper/neural.h"
#include "jumper/reward.h"

namespace jumper {

enum class ActorTag : std::uint8_t { kGuide = 0, kLearner = 1 };

struct PPOConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  int epochs = 5;
  int minibatches = 4;
  double value_coef = 1.0;
  double entropy_coef = 0.005;
  double max_grad_norm = 1.0;
  int patch_len = 25;
  int num_envs = 64;
  double learning_rate = 3e-4;
  double adv_eps = 1e-8;
  bool guide_steps_in_surrogate = false;

  // Throws std::invalid_argument naming the offending field.
  void Validate() const;
};

// E environment streams of L steps each; step t of env e lives at e*L + t.
struct PatchBuffer {
  int num_envs = 0;
  int patch_len = 0;
  Matrix obs;      // obs_dim x E*L
  Matrix actions;  // act_dim x E*L
  std::vector<double> log_probs;  // behavior log-prob, Learner steps only
  std::vector<double> values;
  std::vector<double> rewards;
  // gamma * V(final obs) is added to the reward of a step that ended in a
  // timeout; this holds V(final obs) for such steps and 0 otherwise.
  std::vector<double> truncation_values;
  std::vector<std::uint8_t> dones;
  std::vector<TerminationReason> reasons;
  std::vector<ActorTag> tags;
  std::vector<double> bootstrap;  // per env; 0 after a terminal last step
  std::vector<std::array<double, kNumRewardTerms>> reward_terms;

  PatchBuffer() = default;
  PatchBuffer(int num_envs, int patch_len, int obs_dim, int act_dim);

  int size() const { return num_envs * patch_len; }
  int Index(int env, int t) const { return env * patch_len + t; }
  // Empty string when consistent, otherwise the first problem found.
  std::string Check() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// One stream, right to left, seeded by the bootstrap value.
GaeResult Gae(std::span<const double> rewards, std::span<const double> values,
              std::span<const std::uint8_t> dones, double bootstrap,
              double gamma, double lambda);

// Per-step clipped surrogate min(rho A, clip(rho, 1-eps, 1+eps) A).
double ClippedObjective(double ratio, double advantage, double eps);

struct LossBatch {
  Matrix obs;      // obs_dim x B
  Matrix actions;  // act_dim x B
  Vector old_log_probs;
  Vector advantages;
  Vector returns;
  std::vector<std::uint8_t> in_surrogate;
};

struct LossCoefs {
  double clip = 0.2;
  double value_coef = 1.0;
  double entropy_coef = 0.005;
};

struct LossResult {
  double loss = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int surrogate_steps = 0;
  bool pure_guide = false;
};

// surrogate + value_coef * value_loss - entropy_coef * entropy. When grads
// is non-empty the exact gradient is accumulated into it.
LossResult PpoLoss(const PolicyParams& params, const LossBatch& batch,
                   const LossCoefs& coefs, std::span<double> grads = {});

struct UpdateStats {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double first_clip_fraction = 0.0;
  double approx_kl = 0.0;
  double explained_variance = 0.0;
  double grad_norm = 0.0;
  int minibatches = 0;
  int skipped = 0;
  int pure_guide = 0;
};

UpdateStats PpoUpdate(PolicyParams& params, OptState& opt,
                      const PatchBuffer& buffer, const PPOConfig& cfg,
                      Rng& rng);

}  // namespace jumper

#endif  // JUMPER_PPO_H_
