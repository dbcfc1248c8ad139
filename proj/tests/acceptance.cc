// Acceptance suite: one PASS/FAIL line per criterion. Usage:
//   jumper_acceptance [criterion ...]   (default: all)
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "jumper/config.h"
#include "jumper/core.h"
#include "jumper/harness.h"
#include "jumper/rng.h"

using namespace jumper;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kGradRelTol = 1e-4;
constexpr double kGradSeconds = 10.0;
constexpr double kGaeAbsTol = 1e-10;
constexpr double kGaeSeconds = 5.0;
constexpr double kLearningGap = 0.20;
constexpr double kRecoverySlack = 0.05;
constexpr double kLearningMinutes = 30.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string Fmt(const char* fmt, double a, double b = 0, double c = 0,
                double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c, d);
  return buf;
}

fs::path Scratch(const std::string& name) {
  const char* base = std::getenv("JUMPER_ACCEPTANCE_DIR");
  const fs::path dir = (base ? fs::path(base) : fs::temp_directory_path()) /
                       ("jumper_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1 -------------------------------------------------------------------------

Outcome GradientOracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    PolicyParams p(4, 2, {2});
    for (double& v : p.data()) v = rng.Uniform(-1, 1);
    p.LogStd() << rng.Uniform(-1, 0), rng.Uniform(-1, 0);
    const int b = 4;
    LossBatch batch;
    batch.obs.resize(4, b);
    batch.actions.resize(2, b);
    batch.old_log_probs.resize(b);
    batch.advantages.resize(b);
    batch.returns.resize(b);
    batch.in_surrogate.assign(b, 1);
    for (int i = 0; i < b; ++i) {
      for (int j = 0; j < 4; ++j) batch.obs(j, i) = rng.Uniform(-1, 1);
      const Sample s = SampleAction(ForwardActor(p, batch.obs.col(i)), rng);
      batch.actions.col(i) = s.action;
      batch.old_log_probs[i] = s.log_prob + rng.Uniform(-0.3, 0.3);
      batch.advantages[i] = rng.Uniform(-2, 2);
      batch.returns[i] = rng.Uniform(-1, 1);
    }
    const LossCoefs coefs{0.2, 1.0, 0.01};
    std::vector<double> g(p.size(), 0.0);
    PpoLoss(p, batch, coefs, g);
    for (std::size_t k = 0; k < p.size(); ++k) {
      PolicyParams hi = p, lo = p;
      hi.data()[k] += 1e-6;
      lo.data()[k] -= 1e-6;
      const double fd =
          (PpoLoss(hi, batch, coefs).loss - PpoLoss(lo, batch, coefs).loss) / 2e-6;
      const double rel = std::abs(fd - g[k]) /
                         std::max({std::abs(fd), std::abs(g[k]), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  const double t = Seconds(start);
  return {worst < kGradRelTol && t < kGradSeconds,
          Fmt("max rel error %.3g (tol %.0e), %.2f s", worst, kGradRelTol, t)};
}

// 2 -------------------------------------------------------------------------

Outcome GaeOracle() {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(102);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    std::vector<double> r(10), v(10);
    std::vector<std::uint8_t> d(10);
    for (int k = 0; k < 10; ++k) {
      r[k] = rng.Uniform(-1, 1);
      v[k] = rng.Uniform(-1, 1);
      d[k] = rng.Uniform(0, 1) < 0.1;
    }
    const double boot = rng.Uniform(-1, 1);
    const double gamma = 0.99, lambda = 0.95;
    const GaeResult g = Gae(r, v, d, boot, gamma, lambda);
    for (int t = 0; t < 10; ++t) {
      double sum = 0.0, w = 1.0;
      for (int k = t; k < 10; ++k) {
        const double next = k + 1 < 10 ? v[k + 1] : boot;
        sum += w * (r[k] + (d[k] ? 0.0 : gamma * next) - v[k]);
        if (d[k]) break;
        w *= gamma * lambda;
      }
      worst = std::max(worst, std::abs(sum - g.advantages[t]));
    }
  }
  const double t = Seconds(start);
  return {worst < kGaeAbsTol && t < kGaeSeconds,
          Fmt("max abs diff %.3g over 1000 streams, %.3f s", worst, t)};
}

// 3 -------------------------------------------------------------------------

Outcome ClipArithmetic() {
  bool ok = ClippedObjective(1.5, 1.0, 0.2) == 1.2 &&
            ClippedObjective(0.5, -1.0, 0.2) == -0.8;
  for (const double a : {-2.5, -1.0, 0.0, 0.3, 4.0}) {
    for (const double eps : {0.1, 0.2, 0.3}) ok = ok && ClippedObjective(1.0, a, eps) == a;
  }
  return {ok, "(1.5,1)->1.2, (0.5,-1)->-0.8, rho=1 -> A"};
}

// 4 -------------------------------------------------------------------------

Outcome ScheduleLaw() {
  const JumpSchedule s;
  const std::int64_t ts[] = {0, 299, 300, 600, 1000000};
  const int want[] = {2, 2, 1, 0, 0};
  bool ok = s.n0 == 2 && s.m == 300;
  std::string got;
  for (int i = 0; i < 5; ++i) {
    const int n = ScheduleN(ts[i], s);
    ok = ok && n == want[i];
    got += (i ? "," : "") + std::to_string(n);
  }
  return {ok, "n_t = {" + got + "}"};
}

// 5 -------------------------------------------------------------------------

struct Rollout {
  std::vector<Observation> obs;
  std::vector<Vector> actions;
};

template <typename Act>
Rollout Reference(const StageConfig& cfg, std::uint64_t seed, int e, int steps,
                  bool assist, Act act) {
  Rng rng(MixSeed(seed) + static_cast<std::uint64_t>(e));
  const TerrainKind kind = cfg.task.kinds[rng.Below(cfg.task.kinds.size())];
  Heightfield hf = Generate(kind, 0, rng.Next(), TaskExtent(cfg.task, kind, 0));
  HopperEnv env(cfg.task.model, cfg.spec);
  env.mutable_model().assist_spring = assist;
  env.Reset(std::move(hf), rng.Next(), cfg.task.command);
  Rollout out;
  for (int t = 0; t < steps; ++t) {
    out.obs.push_back(env.obs());
    const Vector a = act(env.obs(), rng);
    out.actions.push_back(a);
    if (env.Step({a.data(), 2}).terminated) break;
  }
  return out;
}

bool SameAsBuffer(const PatchBuffer& buf, int e, const Rollout& ref) {
  for (std::size_t t = 0; t < ref.obs.size(); ++t) {
    const int i = buf.Index(e, static_cast<int>(t));
    if (!(buf.obs.col(i) == ref.obs[t]) || !(buf.actions.col(i) == ref.actions[t])) {
      return false;
    }
  }
  return true;
}

Outcome MixBoundaries() {
  StageConfig cfg = StageConfig::Default(1);
  TrainConfig train;
  train.ppo.num_envs = 8;
  train.net.hidden = {32, 32};
  Rng init(105);
  const PolicyParams learner =
      InitPolicy(kProprioDim, kActDim, train.net, cfg.task.model.q_default, init);
  const PolicyParams gp =
      InitPolicy(kProprioDim, kActDim, train.net, cfg.task.model.q_default, init);
  const GuidePolicy guide = GuidePolicy::Frozen(gp, ObsSpec::Proprio(), 0);
  const int big_n = cfg.schedule.patches_per_episode;

  bool guide_ok = true, learner_ok = true;
  {
    Collector c(cfg, train, 11);
    const PatchBuffer buf = c.Collect(guide, learner, big_n);
    for (int e = 0; e < train.ppo.num_envs; ++e) {
      guide_ok = guide_ok &&
                 SameAsBuffer(buf, e, Reference(cfg, 11, e, 25, true,
                                                [&](const Observation& o, Rng& r) {
                                                  return guide.Act(o, cfg.spec, r);
                                                }));
    }
  }
  {
    Collector c(cfg, train, 12);
    const PatchBuffer buf = c.Collect(guide, learner, 0);
    for (int e = 0; e < train.ppo.num_envs; ++e) {
      learner_ok = learner_ok &&
                   SameAsBuffer(buf, e, Reference(cfg, 12, e, 25, false,
                                                  [&](const Observation& o, Rng& r) {
                                                    return SampleAction(ForwardActor(learner, o), r).action;
                                                  }));
    }
  }

  cfg.iterations = 100;
  cfg.schedule.m = 40;
  cfg.convergence.enabled = false;
  train.ppo.num_envs = 4;
  const std::uint64_t before = guide.Checksum();
  bool checksum_ok = true;
  StageOptions opts;
  opts.hook = [&](const IterationRow&) {
    checksum_ok = checksum_ok && guide.Checksum() == before;
    return true;
  };
  const StageResult r = RunStage(cfg, guide, train, 13, opts);
  checksum_ok = checksum_ok && r.iterations == 100 &&
                r.guide_checksum_after == before && *guide.params() == gp;
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "n_t=N pure guide %s, n_t=0 pure learner %s, checksum over %d iterations %s",
                guide_ok ? "identical" : "DIFFERS",
                learner_ok ? "identical" : "DIFFERS", r.iterations,
                checksum_ok ? "unchanged" : "CHANGED");
  return {guide_ok && learner_ok && checksum_ok, detail};
}

// 6 -------------------------------------------------------------------------

Outcome TableFidelity() {
  const double table1[kNumRewardTerms] = {
      1.5,   0.5,  -200.0, 200.0, 10.0, -0.5,   -0.5,    -0.05, -1.0,
      -1e-5, -0.01, -0.01, -2e-5, -2.5e-7, -0.01, -10.0, -1.0,  -1.0};
  const RewardWeights w;
  int weight_ok = 0;
  for (int i = 0; i < kNumRewardTerms; ++i) weight_ok += w[i] == table1[i];

  const double table4[3][4] = {
      {0, 0.10, 0.50, 0.05}, {5, 0.35, 0.25, 0.15}, {9, 0.60, 0.125, 0.25}};
  int rows_ok = 0;
  for (const auto& row : table4) {
    const TerrainParams p =
        LevelParams(TerrainKind::kSteppingStone, static_cast<int>(row[0]));
    rows_ok += p.gap_width == row[1] && p.stone_size == row[2] &&
               p.stone_gap == row[3];
  }

  const TerrainParams s0 = LevelParams(TerrainKind::kSlopeStairs, 0);
  const TerrainParams s9 = LevelParams(TerrainKind::kSlopeStairs, kMaxLevel);
  const TerrainParams r0 = LevelParams(TerrainKind::kRoughGround, 0);
  const TerrainParams r9 = LevelParams(TerrainKind::kRoughGround, kMaxLevel);
  bool ranges = s0.slope_grade == 0.0 && s9.slope_grade == 0.2 &&
                s0.platform_width == 2.0 && s0.stair_height == 0.05 &&
                s9.stair_height == 0.2 && s0.stair_width == 0.3 &&
                s9.stair_width == 0.3 && kStairPlatformWidth == 3.0 &&
                r0.noise_amplitude == 0.02 && r9.noise_amplitude == 0.1 &&
                kNoiseStep == 0.02;
  for (int l = 0; l <= kMaxLevel; ++l) {
    const TerrainParams s = LevelParams(TerrainKind::kSlopeStairs, l);
    const TerrainParams r = LevelParams(TerrainKind::kRoughGround, l);
    ranges = ranges && s.slope_grade >= 0.0 && s.slope_grade <= 0.2 &&
             s.stair_height >= 0.05 && s.stair_height <= 0.2 &&
             r.noise_amplitude >= 0.02 && r.noise_amplitude <= 0.1;
  }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "reward weights %d/18, stepping-stone rows %d/3, uneven ranges %s",
                weight_ok, rows_ok, ranges ? "match" : "DIFFER");
  return {weight_ok == kNumRewardTerms && rows_ok == 3 && ranges, detail};
}

// 7 -------------------------------------------------------------------------

Outcome MonopedalTermination() {
  HopperModel m;
  const Heightfield flat = Generate(TerrainKind::kFlat, 0, 0, 10.0);
  HopperState s = Reset(m, flat, 0);
  s.q[1] = 1.0;
  s.q[3] = m.joint_upper[0];
  s.q[4] = m.joint_upper[1];
  const double hold[] = {m.joint_upper[0], m.joint_upper[1]};

  HopperModel fine = m;
  fine.control_decimation = 1;
  fine.episode_horizon = 1 << 20;
  HopperState f = s;
  int first_hit = -1;
  for (int k = 0; k < 4000 && first_hit < 0; ++k) {
    const StepResult r = Step(fine, f, flat, hold);
    for (int b = kShank; b < kNumBodies; ++b) {
      if (r.state.contact_forces[b].y() > 0.0) first_hit = k;
    }
    f = r.state;
  }
  StepResult r;
  int t = 0;
  for (; t < 1000; ++t) {
    r = Step(m, s, flat, hold);
    s = r.state;
    if (r.info.terminated) break;
  }
  const int hit = t * m.control_decimation + r.info.termination_substep;
  const bool drop_ok = first_hit >= 0 &&
                       r.info.reason == TerminationReason::kNonFootContact &&
                       hit == first_hit;

  Rng rng(107);
  long steps = 0, violations = 0;
  int episode = 0;
  const TerrainKind kinds[] = {TerrainKind::kFlat, TerrainKind::kRoughGround,
                               TerrainKind::kSlopeStairs, TerrainKind::kWideGap,
                               TerrainKind::kSteppingStone};
  while (steps < 100000) {
    const TerrainKind kind = kinds[episode % 5];
    const Heightfield hf =
        Generate(kind, episode % 10, episode, std::max(12.0, MinExtent(kind, episode % 10)));
    HopperState st = Reset(m, hf, rng.Next());
    ++episode;
    while (!st.terminated) {
      const double a[] = {rng.Uniform(m.joint_lower[0], m.joint_upper[0]),
                          rng.Uniform(m.joint_lower[1], m.joint_upper[1])};
      const StepResult sr = Step(m, st, hf, a);
      st = sr.state;
      ++steps;
      bool body = false;
      for (int b = kShank; b < kNumBodies; ++b) body = body || st.contact_forces[b].y() > 0.0;
      violations += body && !sr.info.terminated;
    }
  }
  char detail[200];
  std::snprintf(detail, sizeof(detail),
                "torso drop ends at substep %d (first contact %d, %s); %ld random steps, %ld post-contact live steps",
                hit, first_hit, std::string(TerminationName(r.info.reason)).c_str(),
                steps, violations);
  return {drop_ok && violations == 0, detail};
}

// 8 -------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  int Col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

CsvTable ReadCsv(const fs::path& p) {
  CsvTable t;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (t.header.empty()) {
      t.header = cells;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(std::strtod(c.c_str(), nullptr));
    t.rows.push_back(row);
  }
  return t;
}

// Iterations needed after each n_t decrement for the training success rate
// to come back to within kRecoverySlack of its pre-decrement value; -1 when
// it never does inside the window.
std::vector<int> RecoveryTimes(const CsvTable& t, int window) {
  const int cn = t.Col("n_t");
  const int cs = t.Col("success_rate");
  std::vector<int> out;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (t.rows[i][cn] >= t.rows[i - 1][cn]) continue;
    const double before = t.rows[i - 1][cs];
    int took = -1;
    for (std::size_t k = i; k < t.rows.size() && k < i + window; ++k) {
      if (t.rows[k][cs] >= before - kRecoverySlack) {
        took = static_cast<int>(k - i);
        break;
      }
    }
    out.push_back(took);
  }
  return out;
}

RunConfig LearningConfig(const fs::path& out) {
  RunConfig cfg;
  cfg.seeds = {0, 1, 2, 3, 4};
  cfg.bench_methods = {Method::kJumpER, Method::kVanillaPPO};
  cfg.train.net.hidden = {64, 64};
  cfg.stages[0].iterations = 1500;
  cfg.eval_episodes = 20;
  cfg.out_dir = out.string();
  cfg.Validate();
  return cfg;
}

Outcome DirectionalLearning() {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out = Scratch("learning");
  const RunConfig cfg = LearningConfig(out);
  const std::vector<BenchRow> rows = Bench(cfg);
  const double minutes = Seconds(start) / 60.0;
  double jumper = 0.0, vanilla = 0.0;
  for (const BenchRow& r : rows) {
    double mean = 0.0;
    for (const double v : r.success) mean += v / r.success.size();
    (r.method == Method::kJumpER ? jumper : vanilla) = mean;
  }
  const int window = 2 * cfg.stage(1).schedule.m;
  bool recovered = true;
  int worst = 0;
  for (const std::uint64_t seed : cfg.seeds) {
    const CsvTable t =
        ReadCsv(out / "JumpER" / ("seed" + std::to_string(seed)) / "stage1.csv");
    for (const int took : RecoveryTimes(t, window)) {
      recovered = recovered && took >= 0;
      worst = took < 0 ? window : std::max(worst, took);
    }
  }
  char detail[220];
  std::snprintf(detail, sizeof(detail),
                "success JumpER %.3f vs VanillaPPO %.3f (gap %+.3f, need >= %.2f); "
                "slowest recovery %d/%d iterations; %.1f min",
                jumper, vanilla, jumper - vanilla, kLearningGap, worst, window,
                minutes);
  return {jumper - vanilla >= kLearningGap - 1e-12 && recovered &&
              minutes < kLearningMinutes,
          detail};
}

// 9 -------------------------------------------------------------------------

Outcome StageChaining() {
  const fs::path out = Scratch("chaining");
  RunConfig cfg;
  cfg.train.net.hidden = {64, 64};
  cfg.run_stages = {1, 2, 3};
  cfg.stages[0].iterations = 1500;
  cfg.stages[1].iterations = 1000;
  cfg.stages[2].iterations = 500;
  cfg.stages[1].warm_start = true;
  cfg.stages[2].warm_start = true;
  cfg.stages[2].task.kinds = {TerrainKind::kSteppingStone};
  cfg.Validate();
  const std::uint64_t seeds[] = {0, 1, 2};

  bool chained = true;
  double with_prior = 0.0, with_random = 0.0;
  std::string per_seed;
  for (const std::uint64_t seed : seeds) {
    const fs::path dir = out / ("seed" + std::to_string(seed));
    const SeedRun run = TrainSeed(cfg, Method::kJumpER, seed, dir.string());
    chained = chained && run.stages.size() == 3;
    for (std::size_t i = 1; i < run.stages.size(); ++i) {
      const Checkpoint prev = LoadCheckpoint(run.checkpoints[i - 1]);
      chained = chained && run.stages[i].guide_checksum_before ==
                               ParamChecksum(prev.params);
    }
    with_prior += run.stages.back().final_level / 3.0;
    per_seed += (per_seed.empty() ? "" : ", ") +
                std::to_string(run.stages.back().final_level).substr(0, 5);

    const StageConfig& s3 = cfg.stage(3);
    Rng rng(MixSeed(seed) ^ 0x7a11dULL);
    const PolicyParams random = InitPolicy(s3.spec.total_dim, kActDim,
                                           cfg.train.net, s3.task.model.q_default, rng);
    const GuidePolicy guide = GuidePolicy::Frozen(random, s3.spec, 2);
    with_random += RunStage(s3, guide, cfg.train, seed).final_level / 3.0;
  }
  char detail[260];
  std::snprintf(detail, sizeof(detail),
                "3 seeds, checksums %s; stage-3 SteppingStone level %.3f with prior (%s) vs %.3f with random guide",
                chained ? "chain" : "BROKEN", with_prior, per_seed.c_str(), with_random);
  return {chained && with_prior > with_random, detail};
}

// 10 ------------------------------------------------------------------------

int Shell(const std::string& cmd) {
  return std::system((cmd + " > /dev/null 2>&1").c_str());
}

// Every csv and jmpr file under a, compared byte for byte with b.
bool SameArtifacts(const fs::path& a, const fs::path& b, int& files) {
  bool same = true;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    const std::string ext = e.path().extension().string();
    if (!e.is_regular_file() || (ext != ".csv" && ext != ".jmpr" && ext != ".txt")) continue;
    if (e.path().filename().string().find("_report") != std::string::npos) continue;
    ++files;
    const fs::path other = b / fs::relative(e.path(), a);
    same = same && fs::exists(other) && Slurp(e.path()) == Slurp(other);
  }
  return same;
}

Outcome CliDeterminism() {
  const fs::path dir = Scratch("determinism");
  const std::string cli = JUMPER_CLI_PATH;
  {
    std::ofstream cfg(dir / "run.toml");
    cfg << "[run]\nseeds = [0, 1]\nstages = [1, 2]\neval_episodes = 3\n"
           "[ppo]\nnum_envs = 8\n[net]\nhidden = [16, 16]\n"
           "[schedule]\nm = 2\n"
           "[stage1]\niterations = 6\n[stage2]\niterations = 4\n";
  }
  const std::string config = (dir / "run.toml").string();
  bool ok = true;
  for (const char* run : {"a", "b"}) {
    const std::string env = std::string(run) == "a" ? "JUMPER_THREADS=1 " : "JUMPER_THREADS=3 ";
    const fs::path o = dir / run;
    ok = ok && Shell(env + cli + " train -c " + config + " -o " + (o / "train").string()) == 0;
    ok = ok && Shell(env + cli + " bench -c " + config + " -o " + (o / "bench").string()) == 0;
    ok = ok && Shell(env + cli + " eval --checkpoint " + (o / "train/seed0/stage2.jmpr").string() +
                     " -c " + config + " -n 3 --level 2 -o " + (o / "eval.csv").string()) == 0;
    ok = ok && Shell(env + cli + " terrain render --kind SlopeStairs --level 4 --seed 3 -o " +
                     (o / "terrain.txt").string()) == 0;
  }
  int files = 0;
  const bool same = ok && SameArtifacts(dir / "a", dir / "b", files);
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "train, bench, eval, terrain render twice (1 vs 3 threads): %d files %s",
                files, same ? "byte-identical" : "DIFFER or commands failed");
  return {same && files > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria = {
      {1, {"gradient oracle", GradientOracle}},
      {2, {"GAE oracle", GaeOracle}},
      {3, {"clip arithmetic", ClipArithmetic}},
      {4, {"schedule law", ScheduleLaw}},
      {5, {"mixing boundaries", MixBoundaries}},
      {6, {"table fidelity", TableFidelity}},
      {7, {"monopedal termination", MonopedalTermination}},
      {8, {"directional learning", DirectionalLearning}},
      {9, {"stage chaining", StageChaining}},
      {10, {"determinism", CliDeterminism}},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [id, _] : criteria) selected.push_back(id);
  }
  const char* log = std::getenv("JUMPER_ACCEPTANCE_LOG");
  if (log) std::ofstream(log, std::ios::trunc);
  int failures = 0;
  for (const int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL",
                it->second.first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (log) {
      std::ofstream(log, std::ios::app)
          << "criterion " << id << (o.pass ? " PASS  " : " FAIL  ")
          << it->second.first << ": " << o.detail << "\n";
    }
  }
  return failures == 0 ? 0 : 1;
}
