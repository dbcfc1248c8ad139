#ifndef JUMPER_CORE_H_
#define JUMPER_CORE_H_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jumper/curriculum.h"
#include "jumper/neural.h"
#include "jumper/ppo.h"

namespace jumper {

struct JumpSchedule {
  int n0 = 2;
  int m = 300;
  int patches_per_episode = 40;
  int patch_len = 25;

  void Validate() const;
  int Horizon() const { return patches_per_episode * patch_len; }
};

// n_t = max(0, n0 - floor(t / m)).
int ScheduleN(std::int64_t t, const JumpSchedule& sched);

// Guide iff floor(step / L) < n_t.
ActorTag MixSelect(int step_in_episode, int n_t, int patch_len);

// Proprio prefix of an observation, or the observation itself when the
// specs match. Throws std::invalid_argument on incompatible layouts.
Observation AdaptObs(const Observation& obs, const ObsSpec& obs_spec,
                     const ObsSpec& target);

// Scripted stance prior: joint targets at q_default. Meant to run with the
// torso-assist spring engaged.
Vector ScriptedBalancerAction(const HopperModel& model);

enum class GuideKind { kScriptedBalancer, kFrozenCheckpoint };

// Frozen after construction; copies share the parameter block.
class GuidePolicy {
 public:
  static GuidePolicy Scripted(const HopperModel& model);
  static GuidePolicy Frozen(const PolicyParams& params, const ObsSpec& spec,
                            int stage);

  GuideKind kind() const { return kind_; }
  int stage() const { return stage_; }
  const ObsSpec& spec() const { return spec_; }
  const PolicyParams* params() const { return params_.get(); }
  std::uint64_t Checksum() const;

  // Samples from the frozen network; the scripted guide ignores rng.
  Vector Act(const Observation& obs, const ObsSpec& obs_spec, Rng& rng) const;

 private:
  GuideKind kind_ = GuideKind::kScriptedBalancer;
  int stage_ = 0;
  ObsSpec spec_;
  HopperModel model_;
  std::shared_ptr<const PolicyParams> params_;
};

struct MixedAction {
  Vector action;
  std::optional<double> log_prob;
  ActorTag tag = ActorTag::kLearner;
};

MixedAction SelectMixedAction(const Observation& obs, const ObsSpec& spec,
                              const GuidePolicy& guide,
                              const PolicyParams& learner, ActorTag tag,
                              Rng& rng);

enum class Transform { kNone, kModality, kObservation, kObjective };
// When the torso-assist spring is engaged.
enum class AssistMode { kOff, kGuideSteps, kAlways };

std::string_view TransformName(Transform t);
std::string_view AssistModeName(AssistMode a);

struct ConvergenceRule {
  bool enabled = true;
  int window = 50;
  double tolerance = 0.01;
  int patience = 200;
};

struct StageConfig {
  int index = 1;
  Transform transform = Transform::kModality;
  AssistMode assist = AssistMode::kGuideSteps;
  ObsSpec spec = ObsSpec::Proprio();
  JumpSchedule schedule;
  int iterations = 1500;
  ConvergenceRule convergence;
  TaskConfig task;
  // Start the learner from the prior's weights (specs need not match).
  bool warm_start = false;

  static StageConfig Default(int index);
  // Throws std::invalid_argument describing the violated stage invariant.
  void Validate() const;
};

struct TrainConfig {
  PPOConfig ppo;
  NetConfig net;
  TrackerConfig tracker;
  // Multiplies the reward fed to the optimizer (per-step weights).
  double reward_scale = 0.02;
  // Completed episodes in the training success moving average.
  int success_window = 100;
  int threads = 1;
};

struct IterationRow {
  int iteration = 0;
  int n_t = 0;
  double mean_return = 0.0;
  double mean_step_reward = 0.0;
  std::array<double, kNumRewardTerms> term_means{};
  UpdateStats update;
  double mean_level = 0.0;
  double success_rate = 0.0;
  int episodes = 0;
  int guide_steps = 0;
};

std::string IterationCsvHeader();
std::string IterationCsvRow(const IterationRow& row);

struct StageResult {
  int stage = 0;
  PolicyParams final_params;
  PolicyParams best_params;
  OptState opt;
  int best_iteration = -1;
  double best_success = -1.0;
  int iterations = 0;
  int final_n = 0;
  double final_level = 0.0;
  double success_rate = 0.0;
  double wall_seconds = 0.0;
  bool converged = false;
  std::uint64_t guide_checksum_before = 0;
  std::uint64_t guide_checksum_after = 0;
  std::vector<IterationRow> rows;
};

// Called after every iteration; returning false stops the stage.
using IterationHook = std::function<bool(const IterationRow&)>;

struct StageOptions {
  std::optional<PolicyParams> init;  // explicit learner initialization
  IterationHook hook;
  // Ignore the guide entirely (n_t forced to 0); used by plain PPO.
  bool no_guide = false;
};

StageResult RunStage(const StageConfig& cfg, const GuidePolicy& prior,
                     const TrainConfig& train, std::uint64_t seed,
                     const StageOptions& options = {});

// Plain-text summary of a finished stage.
std::string StageReport(const StageResult& result);
// Iteration log with the csv version header; keeps every k-th row and the
// last one.
std::string StageCsv(const StageResult& result, int every = 1);
// Writes <tag>.csv, <tag>_report.txt, <tag>.jmpr (best) and
// <tag>_final.jmpr (final params plus optimizer state) under out_dir.
void WriteStageArtifacts(const std::string& out_dir, const StageConfig& cfg,
                         const StageResult& result, const std::string& tag,
                         int csv_every = 1);

// One collection pass, exposed for tests. Envs persist across calls through
// the returned state.
struct CollectorState;

class Collector {
 public:
  Collector(const StageConfig& cfg, const TrainConfig& train,
            std::uint64_t seed);
  ~Collector();
  Collector(Collector&&) noexcept;
  Collector& operator=(Collector&&) noexcept;

  // Runs E environments for L steps each under the mixed policy.
  PatchBuffer Collect(const GuidePolicy& guide, const PolicyParams& learner,
                      int n_t);

  const LevelTracker& tracker() const;
  // Episodes finished during the last Collect call.
  const std::vector<EpisodeRow>& finished() const;
  const std::array<double, kNumRewardTerms>& last_term_means() const;

 private:
  std::unique_ptr<CollectorState> state_;
};

struct CurriculumResult {
  std::vector<StageResult> stages;
  std::vector<std::string> checkpoints;
  std::vector<std::uint64_t> guide_checksums;
};

// Chains consecutive stages; stage i+1 is guided by stage i's best
// checkpoint as reloaded from disk. Checkpoints go to out_dir/stage<i>.jmpr.
CurriculumResult RunCurriculum(const std::vector<StageConfig>& stages,
                               const TrainConfig& train, std::uint64_t seed,
                               const std::string& out_dir,
                               const GuidePolicy& initial_prior,
                               int csv_every = 1);

int ThreadsFromEnv(int fallback);

}  // namespace jumper

#endif  // JUMPER_CORE_H_
