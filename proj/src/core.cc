#include "jumper/core.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace jumper {
namespace {

std::string Fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

}  // namespace

void JumpSchedule::Validate() const {
  if (patches_per_episode < 1) throw std::invalid_argument("schedule: patches_per_episode must be >= 1");
  if (n0 < 0 || n0 > patches_per_episode) throw std::invalid_argument("schedule: n0 must lie in [0, patches_per_episode]");
  if (m < 1) throw std::invalid_argument("schedule: m must be >= 1");
  if (patch_len < 1) throw std::invalid_argument("schedule: patch_len must be >= 1");
}

int ScheduleN(std::int64_t t, const JumpSchedule& sched) {
  if (t < 0) throw std::invalid_argument("schedule: iteration must be >= 0");
  const std::int64_t n = sched.n0 - t / sched.m;
  return static_cast<int>(std::max<std::int64_t>(0, n));
}

ActorTag MixSelect(int step_in_episode, int n_t, int patch_len) {
  if (step_in_episode < 0) throw std::invalid_argument("step must be >= 0");
  return step_in_episode / patch_len < n_t ? ActorTag::kGuide
                                           : ActorTag::kLearner;
}

Observation AdaptObs(const Observation& obs, const ObsSpec& obs_spec,
                     const ObsSpec& target) {
  if (obs.size() != obs_spec.total_dim) {
    throw std::invalid_argument("observation does not match its spec");
  }
  if (obs_spec == target) return obs;
  if (target.mode == ObsMode::kProprio &&
      target.proprio_dim == obs_spec.proprio_dim) {
    return obs.head(target.proprio_dim);
  }
  throw std::invalid_argument("cannot adapt observation to the guide spec");
}

Vector ScriptedBalancerAction(const HopperModel& model) {
  return Vector::Map(model.q_default.data(), kActDim);
}

GuidePolicy GuidePolicy::Scripted(const HopperModel& model) {
  GuidePolicy g;
  g.kind_ = GuideKind::kScriptedBalancer;
  g.stage_ = 0;
  g.spec_ = ObsSpec::Proprio();
  g.model_ = model;
  return g;
}

GuidePolicy GuidePolicy::Frozen(const PolicyParams& params, const ObsSpec& spec,
                                int stage) {
  if (params.obs_dim() != spec.total_dim) {
    throw std::invalid_argument("frozen guide params do not match its spec");
  }
  GuidePolicy g;
  g.kind_ = GuideKind::kFrozenCheckpoint;
  g.stage_ = stage;
  g.spec_ = spec;
  g.params_ = std::make_shared<const PolicyParams>(params);
  return g;
}

std::uint64_t GuidePolicy::Checksum() const {
  if (params_) return ParamChecksum(*params_);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const double v : model_.q_default) {
    h = MixSeed(h ^ std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

Vector GuidePolicy::Act(const Observation& obs, const ObsSpec& obs_spec,
                        Rng& rng) const {
  const Observation in = AdaptObs(obs, obs_spec, spec_);
  if (kind_ == GuideKind::kScriptedBalancer) {
    return ScriptedBalancerAction(model_);
  }
  return SampleAction(ForwardActor(*params_, in), rng).action;
}

MixedAction SelectMixedAction(const Observation& obs, const ObsSpec& spec,
                              const GuidePolicy& guide,
                              const PolicyParams& learner, ActorTag tag,
                              Rng& rng) {
  MixedAction out;
  out.tag = tag;
  if (tag == ActorTag::kGuide) {
    out.action = guide.Act(obs, spec, rng);
    return out;
  }
  const Sample s = SampleAction(ForwardActor(learner, obs), rng);
  out.action = s.action;
  out.log_prob = s.log_prob;
  return out;
}

std::string_view TransformName(Transform t) {
  switch (t) {
    case Transform::kNone:
      return "none";
    case Transform::kModality:
      return "modality";
    case Transform::kObservation:
      return "observation";
    case Transform::kObjective:
      return "objective";
  }
  return "unknown";
}

std::string_view AssistModeName(AssistMode a) {
  switch (a) {
    case AssistMode::kOff:
      return "off";
    case AssistMode::kGuideSteps:
      return "guide_steps";
    case AssistMode::kAlways:
      return "always";
  }
  return "unknown";
}

StageConfig StageConfig::Default(int index) {
  StageConfig c;
  c.index = index;
  switch (index) {
    case 1:
      c.transform = Transform::kModality;
      c.assist = AssistMode::kGuideSteps;
      c.spec = ObsSpec::Proprio();
      c.task.kinds = {TerrainKind::kFlat};
      c.task.objective = ObjectiveMode::kVelocityTracking;
      c.task.success = SuccessRule::kSurviveOrReach;
      c.task.extent = 10.0;
      break;
    case 2:
      c.transform = Transform::kObservation;
      c.assist = AssistMode::kOff;
      c.spec = ObsSpec::TerrainAware();
      c.task.kinds = {TerrainKind::kRoughGround, TerrainKind::kSlopeStairs};
      c.task.objective = ObjectiveMode::kVelocityTracking;
      c.task.success = SuccessRule::kReachGoal;
      c.task.command.vx = 0.3;
      c.task.extent = 4.0;
      break;
    case 3:
      c.transform = Transform::kObjective;
      c.assist = AssistMode::kOff;
      c.spec = ObsSpec::TerrainAware();
      c.task.kinds = {TerrainKind::kWideGap, TerrainKind::kSteppingStone};
      c.task.objective = ObjectiveMode::kGoalReaching;
      c.task.success = SuccessRule::kReachGoal;
      c.task.extent = 3.0;
      // Sparse objective: the dense shaping terms stay off.
      c.task.weights[kOutPlatform] = 0.0;
      c.task.weights[kReachFar] = 0.0;
      break;
    default:
      throw std::invalid_argument("stage index must be 1, 2 or 3");
  }
  return c;
}

void StageConfig::Validate() const {
  if (index < 1 || index > 3) throw std::invalid_argument("stage index must be 1, 2 or 3");
  schedule.Validate();
  task.Validate();
  if (!spec.Consistent()) throw std::invalid_argument("stage ObsSpec is inconsistent");
  if (iterations < 1) throw std::invalid_argument("stage iterations must be >= 1");
  if (task.model.episode_horizon != schedule.Horizon()) {
    throw std::invalid_argument("episode_horizon must equal patches_per_episode * patch_len");
  }
  auto all_in = [&](std::initializer_list<TerrainKind> allowed) {
    for (const TerrainKind k : task.kinds) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) return false;
    }
    return true;
  };
  const bool proprio = spec.mode == ObsMode::kProprio;
  const bool tracking = task.objective == ObjectiveMode::kVelocityTracking;
  if (index == 1 && !(proprio && tracking && all_in({TerrainKind::kFlat}))) {
    throw std::invalid_argument("stage 1 needs Proprio, velocity tracking and Flat terrain");
  }
  if (index == 2 &&
      !(!proprio && tracking &&
        all_in({TerrainKind::kRoughGround, TerrainKind::kSlopeStairs}))) {
    throw std::invalid_argument("stage 2 needs TerrainAware, velocity tracking and rough/stairs terrain");
  }
  if (index == 3 &&
      !(!proprio && !tracking &&
        all_in({TerrainKind::kWideGap, TerrainKind::kSteppingStone}))) {
    throw std::invalid_argument("stage 3 needs TerrainAware, goal reaching and gap/stones terrain");
  }
}

std::string IterationCsvHeader() {
  std::string s =
      "iteration,n_t,mean_return,mean_step_reward";
  for (int t = 0; t < kNumRewardTerms; ++t) {
    s += ",r_";
    s += RewardTermName(t);
  }
  s += ",clip_fraction,value_loss,entropy,approx_kl,explained_variance,"
       "level,success_rate,episodes,guide_steps\n";
  return s;
}

std::string IterationCsvRow(const IterationRow& r) {
  std::string s = std::to_string(r.iteration) + "," + std::to_string(r.n_t) +
                  "," + Fmt("%.6g", r.mean_return) + "," +
                  Fmt("%.6g", r.mean_step_reward);
  for (const double v : r.term_means) s += "," + Fmt("%.6g", v);
  s += "," + Fmt("%.6g", r.update.clip_fraction) + "," +
       Fmt("%.6g", r.update.value_loss) + "," + Fmt("%.6g", r.update.entropy) +
       "," + Fmt("%.6g", r.update.approx_kl) + "," +
       Fmt("%.6g", r.update.explained_variance) + "," +
       Fmt("%.4f", r.mean_level) + "," + Fmt("%.6g", r.success_rate) + "," +
       std::to_string(r.episodes) + "," + std::to_string(r.guide_steps) + "\n";
  return s;
}

struct EnvSlot {
  HopperEnv env;
  Rng rng;
  EpisodeAccumulator acc;
};

struct CollectorState {
  StageConfig cfg;
  TrainConfig train;
  std::vector<EnvSlot> envs;
  LevelTracker tracker;
  std::vector<EpisodeRow> finished;
  std::array<double, kNumRewardTerms> term_means{};

  void ResetEnv(int e) {
    EnvSlot& slot = envs[e];
    const auto& kinds = cfg.task.kinds;
    const TerrainKind kind = kinds[slot.rng.Below(kinds.size())];
    const int level = tracker.level(e);
    Heightfield hf = Generate(kind, level, slot.rng.Next(),
                              TaskExtent(cfg.task, kind, level));
    slot.env.Reset(std::move(hf), slot.rng.Next(), cfg.task.command);
    slot.acc.Begin(slot.env.state(), slot.env.terrain());
  }
};

Collector::Collector(const StageConfig& cfg, const TrainConfig& train,
                     std::uint64_t seed)
    : state_(std::make_unique<CollectorState>()) {
  CollectorState& s = *state_;
  s.cfg = cfg;
  s.train = train;
  const int e = train.ppo.num_envs;
  s.tracker = LevelTracker(e, train.tracker);
  s.envs.reserve(e);
  for (int i = 0; i < e; ++i) {
    s.envs.push_back(EnvSlot{HopperEnv(cfg.task.model, cfg.spec),
                             Rng(MixSeed(seed) + static_cast<std::uint64_t>(i)),
                             {}});
  }
  for (int i = 0; i < e; ++i) s.ResetEnv(i);
}

Collector::~Collector() = default;
Collector::Collector(Collector&&) noexcept = default;
Collector& Collector::operator=(Collector&&) noexcept = default;

const LevelTracker& Collector::tracker() const { return state_->tracker; }
const std::vector<EpisodeRow>& Collector::finished() const {
  return state_->finished;
}
const std::array<double, kNumRewardTerms>& Collector::last_term_means() const {
  return state_->term_means;
}

PatchBuffer Collector::Collect(const GuidePolicy& guide,
                               const PolicyParams& learner, int n_t) {
  CollectorState& s = *state_;
  const StageConfig& cfg = s.cfg;
  if (learner.obs_dim() != cfg.spec.total_dim) {
    throw std::invalid_argument("learner ObsSpec does not match the environment");
  }
  const int num_envs = static_cast<int>(s.envs.size());
  const int l = s.train.ppo.patch_len;
  PatchBuffer buf(num_envs, l, cfg.spec.total_dim, kActDim);
  std::vector<std::vector<EpisodeRow>> done_rows(num_envs);

  auto run_env = [&](int e) {
    EnvSlot& slot = s.envs[e];
    for (int t = 0; t < l; ++t) {
      const int i = buf.Index(e, t);
      const Observation& obs = slot.env.obs();
      buf.obs.col(i) = obs;
      const ActorTag tag = MixSelect(slot.env.state().step, n_t, l);
      slot.env.mutable_model().assist_spring =
          cfg.assist == AssistMode::kAlways ||
          (cfg.assist == AssistMode::kGuideSteps && tag == ActorTag::kGuide);
      buf.values[i] = ForwardCritic(learner, obs);
      const MixedAction ma =
          SelectMixedAction(obs, cfg.spec, guide, learner, tag, slot.rng);
      buf.actions.col(i) = ma.action;
      buf.tags[i] = tag;
      buf.log_probs[i] = ma.log_prob.value_or(0.0);
      const StepInfo& info = slot.env.Step(
          {ma.action.data(), static_cast<std::size_t>(ma.action.size())});
      const RewardBreakdown rb = ComputeReward(
          info, cfg.task.weights, cfg.task.objective, cfg.task.reward_options);
      buf.rewards[i] = rb.total * s.train.reward_scale;
      buf.reward_terms[i] = rb.weighted;
      slot.acc.Add(info, rb);
      if (info.terminated) {
        buf.dones[i] = 1;
        buf.reasons[i] = info.reason;
        if (info.reason == TerminationReason::kTimeout) {
          buf.truncation_values[i] = ForwardCritic(learner, slot.env.obs());
        }
        EpisodeRow row = slot.acc.Finish(slot.env.state(), slot.env.terrain(),
                                         info, cfg.task.success);
        s.tracker.Record(e, {row.success, row.reason});
        done_rows[e].push_back(row);
        s.ResetEnv(e);
      }
    }
    const int last = buf.Index(e, l - 1);
    buf.bootstrap[e] =
        buf.dones[last] ? 0.0 : ForwardCritic(learner, slot.env.obs());
  };

  const int threads = std::clamp(s.train.threads, 1, num_envs);
  if (threads == 1) {
    for (int e = 0; e < num_envs; ++e) run_env(e);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int e = num_envs * w / threads; e < num_envs * (w + 1) / threads; ++e) {
            run_env(e);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& t : pool) t.join();
    for (const auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }

  s.finished.clear();
  for (auto& rows : done_rows) {
    s.finished.insert(s.finished.end(), rows.begin(), rows.end());
  }
  s.term_means.fill(0.0);
  for (const auto& terms : buf.reward_terms) {
    for (int k = 0; k < kNumRewardTerms; ++k) {
      s.term_means[k] += terms[k] / buf.size();
    }
  }
  return buf;
}

StageResult RunStage(const StageConfig& cfg, const GuidePolicy& prior,
                     const TrainConfig& train, std::uint64_t seed,
                     const StageOptions& options) {
  cfg.Validate();
  train.ppo.Validate();
  if (train.ppo.patch_len != cfg.schedule.patch_len) {
    throw std::invalid_argument("ppo patch_len must equal the schedule patch_len");
  }
  if (!options.no_guide && prior.stage() != cfg.index - 1) {
    throw std::invalid_argument("prior guides stage " +
                                std::to_string(prior.stage() + 1) +
                                ", not stage " + std::to_string(cfg.index));
  }
  const auto start = std::chrono::steady_clock::now();
  StageResult r;
  r.stage = cfg.index;
  r.guide_checksum_before = prior.Checksum();

  Rng init_rng(MixSeed(seed) ^ (0x51ed2701ULL * cfg.index));
  const std::array<double, kActDim> bias = cfg.task.model.q_default;
  PolicyParams learner =
      options.init ? *options.init
                   : InitPolicy(cfg.spec.total_dim, kActDim, train.net, bias,
                                init_rng);
  if (learner.obs_dim() != cfg.spec.total_dim) {
    throw std::invalid_argument("initial learner does not match the stage ObsSpec");
  }
  if (cfg.warm_start && prior.params() != nullptr) {
    WarmStart(learner, *prior.params());
  }
  OptState opt = OptState::For(learner, train.ppo.learning_rate);
  Collector collector(cfg, train, MixSeed(seed + 0x1000ULL * cfg.index));
  Rng update_rng(MixSeed(seed) ^ 0xabcdefULL);

  std::deque<EpisodeRow> window;
  std::deque<double> success_series;
  std::deque<double> ma_series;
  int zero_since = -1;
  bool have_best = false;

  for (int it = 0; it < cfg.iterations; ++it) {
    const int n_t = options.no_guide ? 0 : ScheduleN(it, cfg.schedule);
    const PolicyParams behavior = learner;
    const PatchBuffer buf = collector.Collect(prior, learner, n_t);
    IterationRow row;
    row.iteration = it;
    row.n_t = n_t;
    row.update = PpoUpdate(learner, opt, buf, train.ppo, update_rng);
    for (const EpisodeRow& e : collector.finished()) {
      window.push_back(e);
      if (static_cast<int>(window.size()) > train.success_window) window.pop_front();
    }
    row.episodes = static_cast<int>(collector.finished().size());
    for (const EpisodeRow& e : window) {
      row.success_rate += e.success / static_cast<double>(window.size());
      row.mean_return += e.episode_return / static_cast<double>(window.size());
    }
    row.term_means = collector.last_term_means();
    for (const double v : row.term_means) row.mean_step_reward += v;
    row.mean_level = collector.tracker().MeanLevel();
    for (const ActorTag t : buf.tags) row.guide_steps += t == ActorTag::kGuide;
    r.rows.push_back(row);

    if (n_t == 0 && !window.empty() &&
        (!have_best || row.success_rate > r.best_success)) {
      r.best_success = row.success_rate;
      r.best_iteration = it;
      r.best_params = behavior;
      have_best = true;
    }
    r.iterations = it + 1;
    r.final_n = n_t;
    r.final_level = row.mean_level;
    r.success_rate = row.success_rate;

    if (options.hook && !options.hook(row)) break;

    if (cfg.convergence.enabled && n_t == 0) {
      if (zero_since < 0) zero_since = it;
      success_series.push_back(row.success_rate);
      if (static_cast<int>(success_series.size()) > cfg.convergence.window) {
        success_series.pop_front();
      }
      double ma = 0.0;
      for (const double v : success_series) ma += v / success_series.size();
      ma_series.push_back(ma);
      if (static_cast<int>(ma_series.size()) > cfg.convergence.patience) {
        ma_series.pop_front();
      }
      if (it - zero_since + 1 >= cfg.convergence.window + cfg.convergence.patience) {
        const auto [lo, hi] = std::minmax_element(ma_series.begin(), ma_series.end());
        if (*hi - *lo < cfg.convergence.tolerance) {
          r.converged = true;
          break;
        }
      }
    }
  }
  r.final_params = learner;
  if (!have_best) {
    r.best_params = learner;
    r.best_iteration = r.iterations - 1;
    r.best_success = r.success_rate;
  }
  r.opt = opt;
  r.guide_checksum_after = prior.Checksum();
  r.wall_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return r;
}

std::string StageReport(const StageResult& r) {
  std::string s;
  s += "stage " + std::to_string(r.stage) + "\n";
  s += "iterations " + std::to_string(r.iterations) + "\n";
  s += "final_n_t " + std::to_string(r.final_n) + "\n";
  s += "final_level " + Fmt("%.4f", r.final_level) + "\n";
  s += "success_rate " + Fmt("%.6f", r.success_rate) + "\n";
  s += "best_iteration " + std::to_string(r.best_iteration) + "\n";
  s += "best_success_rate " + Fmt("%.6f", r.best_success) + "\n";
  s += "converged " + std::string(r.converged ? "1" : "0") + "\n";
  s += "wall_time_s " + Fmt("%.3f", r.wall_seconds) + "\n";
  return s;
}

namespace {

void WriteFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::string StageCsv(const StageResult& r, int every) {
  if (every < 1) throw std::invalid_argument("csv cadence must be >= 1");
  std::string s = "# jumper-csv v1\n" + IterationCsvHeader();
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (i % every == 0 || i + 1 == r.rows.size()) s += IterationCsvRow(r.rows[i]);
  }
  return s;
}

void WriteStageArtifacts(const std::string& out_dir, const StageConfig& cfg,
                         const StageResult& r, const std::string& tag,
                         int csv_every) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  WriteFile(dir / (tag + ".csv"), StageCsv(r, csv_every));
  WriteFile(dir / (tag + "_report.txt"), StageReport(r));
  SaveCheckpoint((dir / (tag + ".jmpr")).string(),
                 Checkpoint{static_cast<std::uint32_t>(cfg.index), cfg.spec,
                            r.best_params, std::nullopt});
  SaveCheckpoint((dir / (tag + "_final.jmpr")).string(),
                 Checkpoint{static_cast<std::uint32_t>(cfg.index), cfg.spec,
                            r.final_params, r.opt});
}

CurriculumResult RunCurriculum(const std::vector<StageConfig>& stages,
                               const TrainConfig& train, std::uint64_t seed,
                               const std::string& out_dir,
                               const GuidePolicy& initial_prior,
                               int csv_every) {
  if (stages.empty()) throw std::invalid_argument("no stages configured");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (stages[i].index != initial_prior.stage() + static_cast<int>(i) + 1) {
      throw std::invalid_argument("stages must follow the prior consecutively");
    }
  }
  CurriculumResult out;
  GuidePolicy prior = initial_prior;
  for (const StageConfig& cfg : stages) {
    out.guide_checksums.push_back(prior.Checksum());
    StageResult r = RunStage(cfg, prior, train, seed);
    const std::string tag = "stage" + std::to_string(cfg.index);
    WriteStageArtifacts(out_dir, cfg, r, tag, csv_every);
    const std::string path =
        (std::filesystem::path(out_dir) / (tag + ".jmpr")).string();
    out.checkpoints.push_back(path);
    const Checkpoint frozen = LoadCheckpoint(path);
    prior = GuidePolicy::Frozen(frozen.params, frozen.spec, cfg.index);
    out.stages.push_back(std::move(r));
  }
  return out;
}

int ThreadsFromEnv(int fallback) {
  const char* v = std::getenv("JUMPER_THREADS");
  if (v == nullptr || *v == '\0') return fallback;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return fallback;
  return static_cast<int>(std::min<long>(n, 1024));
}

}  // namespace jumper
