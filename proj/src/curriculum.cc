#include "jumper/curriculum.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "jumper/rng.h"

namespace jumper {
namespace {

constexpr double kMinGoalDistance = 0.1;

double GoalDistance(const HopperState& s, const Heightfield& hf) {
  return std::max(hf.goal_x - s.x(), 0.0);
}

}  // namespace

std::string_view SuccessRuleName(SuccessRule rule) {
  switch (rule) {
    case SuccessRule::kReachGoal:
      return "reach_goal";
    case SuccessRule::kSurvive:
      return "survive";
    case SuccessRule::kSurviveOrReach:
      return "survive_or_reach";
  }
  return "unknown";
}

bool IsSuccess(SuccessRule rule, TerminationReason reason) {
  const bool reached = reason == TerminationReason::kOutOfBounds;
  const bool survived = reason == TerminationReason::kTimeout;
  switch (rule) {
    case SuccessRule::kReachGoal:
      return reached;
    case SuccessRule::kSurvive:
      return survived;
    case SuccessRule::kSurviveOrReach:
      return reached || survived;
  }
  return false;
}

void TrackerConfig::Validate() const {
  if (window < 1) throw std::invalid_argument("tracker window must be >= 1");
  if (!(promote_threshold > demote_threshold) || promote_threshold > 1.0 ||
      demote_threshold < 0.0) {
    throw std::invalid_argument("tracker thresholds must satisfy 0 <= demote < promote <= 1");
  }
  if (initial_level < 0 || initial_level > kMaxLevel) {
    throw std::invalid_argument("tracker initial_level outside [0, 9]");
  }
}

LevelTracker::LevelTracker(int num_envs, TrackerConfig cfg)
    : cfg_(cfg), levels_(num_envs, cfg.initial_level), windows_(num_envs) {
  cfg_.Validate();
}

int LevelTracker::Record(int env, const EpisodeOutcome& outcome) {
  auto& window = windows_.at(env);
  window.push_back(outcome);
  if (static_cast<int>(window.size()) > cfg_.window) window.pop_front();
  const double successes = static_cast<double>(
      std::count_if(window.begin(), window.end(),
                    [](const EpisodeOutcome& o) { return o.success; }));
  const double w = cfg_.window;
  int& level = levels_[env];
  if (successes >= cfg_.promote_threshold * w - 1e-9) {
    level = std::min(level + 1, kMaxLevel);
    window.clear();
  } else if (static_cast<int>(window.size()) == cfg_.window &&
             successes <= cfg_.demote_threshold * w + 1e-9) {
    level = std::max(level - 1, 0);
    window.clear();
  }
  return level;
}

double LevelTracker::MeanLevel() const {
  if (levels_.empty()) return 0.0;
  double sum = 0.0;
  for (const int l : levels_) sum += l;
  return sum / static_cast<double>(levels_.size());
}

void TaskConfig::Validate() const {
  model.Validate();
  if (kinds.empty()) throw std::invalid_argument("task needs at least one terrain kind");
  if (!(extent > 0.0)) throw std::invalid_argument("task extent must be positive");
  if (!std::isfinite(command.vx) || !std::isfinite(command.yaw_rate)) {
    throw std::invalid_argument("task command must be finite");
  }
}

double TaskExtent(const TaskConfig& task, TerrainKind kind, int level) {
  return std::max(task.extent, MinExtent(kind, level));
}

void EpisodeAccumulator::Begin(const HopperState& state, const Heightfield& hf) {
  *this = EpisodeAccumulator{};
  start_distance = GoalDistance(state, hf);
}

void EpisodeAccumulator::Add(const StepInfo& info,
                             const RewardBreakdown& reward) {
  ++steps;
  bool other = false;
  for (int b = kShank; b < kNumBodies; ++b) {
    other = other || info.contact_forces[b].y() > 0.0;
  }
  air_steps += !other;
  episode_return += reward.total;
  track_sum += reward.raw[kTrackLinVel];
}

EpisodeRow EpisodeAccumulator::Finish(const HopperState& state,
                                      const Heightfield& hf,
                                      const StepInfo& last,
                                      SuccessRule rule) const {
  EpisodeRow row;
  row.kind = hf.kind;
  row.level = hf.level;
  row.steps = steps;
  row.reason = last.reason;
  row.success = IsSuccess(rule, last.reason);
  row.episode_return = episode_return;
  row.air_fraction = steps > 0 ? static_cast<double>(air_steps) / steps : 0.0;
  row.t_vel = steps > 0 ? track_sum / steps : 0.0;
  const double start = std::max(start_distance, kMinGoalDistance);
  row.t_reach = 1.0 - std::clamp(GoalDistance(state, hf) / start, 0.0, 1.0);
  return row;
}

MetricsReport Summarize(std::span<const EpisodeRow> rows) {
  MetricsReport m;
  m.episodes = static_cast<int>(rows.size());
  if (rows.empty()) return m;
  const double n = static_cast<double>(rows.size());
  for (const EpisodeRow& r : rows) {
    m.r_air += r.air_fraction / n;
    m.p_mono += (r.reason == TerminationReason::kNonFootContact) / n;
    m.t_vel += r.t_vel / n;
    m.t_reach += r.t_reach / n;
    m.mean_level += r.level / n;
    m.success_rate += r.success / n;
    m.mean_return += r.episode_return / n;
    m.mean_length += r.steps / n;
  }
  return m;
}

ActionFn MeanAction(const PolicyParams& params) {
  return [&params](const Observation& obs) {
    return ForwardActor(params, obs).mean;
  };
}

EvalResult Evaluate(const ActionFn& policy, const ObsSpec& spec,
                    const TaskConfig& task, int n_episodes, std::uint64_t seed,
                    std::span<const int> levels) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  task.Validate();
  EvalResult out;
  int torso_falls = 0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    const TerrainKind kind = task.kinds[ep % task.kinds.size()];
    const int level = levels.empty() ? 0 : levels[ep % levels.size()];
    Rng rng(seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(ep));
    Heightfield hf =
        Generate(kind, level, rng.Next(), TaskExtent(task, kind, level));
    HopperEnv env(task.model, spec);
    env.Reset(std::move(hf), rng.Next(), task.command);
    EpisodeAccumulator acc;
    acc.Begin(env.state(), env.terrain());
    while (true) {
      const Vector a = policy(env.obs());
      const StepInfo& info =
          env.Step({a.data(), static_cast<std::size_t>(a.size())});
      acc.Add(info, ComputeReward(info, task.weights, task.objective,
                                  task.reward_options));
      if (info.terminated) break;
    }
    EpisodeRow row =
        acc.Finish(env.state(), env.terrain(), env.last_info(), task.success);
    row.episode = ep;
    if (row.reason == TerminationReason::kNonFootContact &&
        env.last_info().contact_body == kTorso) {
      ++torso_falls;
    }
    out.rows.push_back(row);
  }
  out.summary = Summarize(out.rows);
  out.summary.p_base = static_cast<double>(torso_falls) / n_episodes;
  return out;
}

std::string EvalCsv(const EvalResult& result) {
  std::string s = "# jumper-csv v1\n";
  s += "episode,kind,level,steps,reason,success,return,r_air,t_vel,t_reach\n";
  char line[256];
  for (const EpisodeRow& r : result.rows) {
    std::snprintf(line, sizeof(line), "%d,%s,%d,%d,%s,%d,%.6f,%.6f,%.6f,%.6f\n",
                  r.episode, std::string(TerrainKindName(r.kind)).c_str(),
                  r.level, r.steps,
                  std::string(TerminationName(r.reason)).c_str(),
                  r.success ? 1 : 0, r.episode_return, r.air_fraction, r.t_vel,
                  r.t_reach);
    s += line;
  }
  const MetricsReport& m = result.summary;
  s += "# summary: r_air,p_base,p_mono,t_vel,t_reach,level,success\n";
  std::snprintf(line, sizeof(line),
                "summary,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", m.r_air,
                m.p_base, m.p_mono, m.t_vel, m.t_reach, m.mean_level,
                m.success_rate);
  s += line;
  return s;
}

}  // namespace jumper
