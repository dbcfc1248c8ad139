#ifndef JUMPER_CURRICULUM_H_
#define JUMPER_CURRICULUM_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jumper/hopper.h"
#include "jumper/neural.h"
#include "jumper/reward.h"
#include "jumper/terrain.h"

namespace jumper {

// Which episode endings count as success.
enum class SuccessRule { kReachGoal, kSurvive, kSurviveOrReach };

std::string_view SuccessRuleName(SuccessRule rule);
bool IsSuccess(SuccessRule rule, TerminationReason reason);

struct EpisodeOutcome {
  bool success = false;
  TerminationReason reason = TerminationReason::kNone;
};

struct TrackerConfig {
  int window = 5;
  double promote_threshold = 0.8;
  double demote_threshold = 0.0;
  int initial_level = 0;

  void Validate() const;
};

class LevelTracker {
 public:
  LevelTracker() = default;
  LevelTracker(int num_envs, TrackerConfig cfg);

  // Appends the outcome and returns the (possibly updated) level.
  int Record(int env, const EpisodeOutcome& outcome);
  int level(int env) const { return levels_[env]; }
  const std::vector<int>& levels() const { return levels_; }
  double MeanLevel() const;
  int num_envs() const { return static_cast<int>(levels_.size()); }
  const TrackerConfig& config() const { return cfg_; }

 private:
  TrackerConfig cfg_;
  std::vector<int> levels_;
  std::vector<std::deque<EpisodeOutcome>> windows_;
};

// Everything needed to run episodes of one task.
struct TaskConfig {
  HopperModel model;
  std::vector<TerrainKind> kinds = {TerrainKind::kFlat};
  double extent = 10.0;
  ObjectiveMode objective = ObjectiveMode::kVelocityTracking;
  Command command;
  SuccessRule success = SuccessRule::kReachGoal;
  RewardWeights weights;
  RewardOptions reward_options;

  void Validate() const;
};

// The configured extent, raised to the generator minimum for (kind, level).
double TaskExtent(const TaskConfig& task, TerrainKind kind, int level);

struct MetricsReport {
  double r_air = 0.0;
  double p_base = 0.0;
  double p_mono = 0.0;
  double t_vel = 0.0;
  double t_reach = 0.0;
  double mean_level = 0.0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  int episodes = 0;
};

struct EpisodeRow {
  int episode = 0;
  TerrainKind kind = TerrainKind::kFlat;
  int level = 0;
  int steps = 0;
  TerminationReason reason = TerminationReason::kNone;
  bool success = false;
  double episode_return = 0.0;
  double air_fraction = 0.0;
  double t_vel = 0.0;
  double t_reach = 0.0;
};

struct EvalResult {
  MetricsReport summary;
  std::vector<EpisodeRow> rows;
};

// Deterministic action from an observation.
using ActionFn = std::function<Vector(const Observation&)>;

ActionFn MeanAction(const PolicyParams& params);

// Episode k runs on kinds[k % |kinds|] at levels[k % |levels|] (level 0 when
// levels is empty). Throws std::invalid_argument when n_episodes < 1.
EvalResult Evaluate(const ActionFn& policy, const ObsSpec& spec,
                    const TaskConfig& task, int n_episodes, std::uint64_t seed,
                    std::span<const int> levels = {});

// Episode outcome accumulation shared by evaluation and training.
struct EpisodeAccumulator {
  int steps = 0;
  int air_steps = 0;
  double episode_return = 0.0;
  double track_sum = 0.0;
  double start_distance = 0.0;

  void Begin(const HopperState& state, const Heightfield& hf);
  void Add(const StepInfo& info, const RewardBreakdown& reward);
  EpisodeRow Finish(const HopperState& state, const Heightfield& hf,
                    const StepInfo& last, SuccessRule rule) const;
};

MetricsReport Summarize(std::span<const EpisodeRow> rows);

std::string EvalCsv(const EvalResult& result);

}  // namespace jumper

#endif  // JUMPER_CURRICULUM_H_
