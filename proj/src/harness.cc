#include "jumper/harness.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"

namespace jumper {
namespace {

namespace fs = std::filesystem;

std::string Num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

// Sample standard deviation; 0 for fewer than two values.
double Std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

void WriteText(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

PolicyParams PretrainedInit(const RunConfig& cfg, const StageConfig& stage,
                            std::uint64_t seed) {
  const Checkpoint ckpt = LoadCheckpointOrThrow(cfg.checkpoint);
  Rng rng(MixSeed(seed) ^ 0x9e3779b97f4a7c15ULL);
  PolicyParams init = InitPolicy(stage.spec.total_dim, kActDim, cfg.train.net,
                                 stage.task.model.q_default, rng);
  WarmStart(init, ckpt.params);
  return init;
}

}  // namespace

Checkpoint LoadCheckpointOrThrow(const std::string& path) {
  if (!fs::is_regular_file(path)) {
    throw MissingCheckpoint("checkpoint '" + path + "' not found");
  }
  return LoadCheckpoint(path);
}

std::vector<StageConfig> MethodStages(const RunConfig& cfg, Method method) {
  std::vector<StageConfig> out;
  for (const int i : cfg.run_stages) out.push_back(cfg.stage(i));
  if (method == Method::kJumpER) return out;
  std::vector<StageConfig> last = {out.back()};
  if (IsDense(method)) {
    const RewardWeights defaults;
    last[0].task.weights[kOutPlatform] = defaults[kOutPlatform];
    last[0].task.weights[kReachFar] = defaults[kReachFar];
  }
  return last;
}

SeedRun TrainSeed(const RunConfig& cfg, Method method, std::uint64_t seed,
                  const std::string& dir) {
  SeedRun run;
  run.method = method;
  run.seed = seed;
  run.dir = dir;
  const std::vector<StageConfig> stages = MethodStages(cfg, method);
  fs::create_directories(dir);

  if (method == Method::kJumpER) {
    GuidePolicy prior = GuidePolicy::Scripted(stages.front().task.model);
    if (stages.front().index > 1) {
      const Checkpoint ckpt = LoadCheckpointOrThrow(cfg.checkpoint);
      if (static_cast<int>(ckpt.stage) != stages.front().index - 1) {
        throw ConfigError("run.checkpoint",
                          "config key 'run.checkpoint': prior checkpoint is from stage " +
                              std::to_string(ckpt.stage) + ", expected stage " +
                              std::to_string(stages.front().index - 1));
      }
      prior = GuidePolicy::Frozen(ckpt.params, ckpt.spec,
                                  static_cast<int>(ckpt.stage));
    }
    CurriculumResult r =
        RunCurriculum(stages, cfg.train, seed, dir, prior, cfg.csv_every);
    run.stages = std::move(r.stages);
    run.checkpoints = std::move(r.checkpoints);
    return run;
  }

  const StageConfig& stage = stages.front();
  StageOptions opts;
  opts.no_guide = true;
  if (IsPretrained(method)) opts.init = PretrainedInit(cfg, stage, seed);
  GuidePolicy unused = GuidePolicy::Scripted(stage.task.model);
  StageResult r = RunStage(stage, unused, cfg.train, seed, opts);
  const std::string tag = "stage" + std::to_string(stage.index);
  WriteStageArtifacts(dir, stage, r, tag, cfg.csv_every);
  run.checkpoints.push_back((fs::path(dir) / (tag + ".jmpr")).string());
  run.stages.push_back(std::move(r));
  return run;
}

std::vector<SeedRun> Train(const RunConfig& cfg) {
  std::vector<SeedRun> runs;
  for (const std::uint64_t seed : cfg.seeds) {
    const std::string dir =
        (fs::path(cfg.out_dir) / ("seed" + std::to_string(seed))).string();
    runs.push_back(TrainSeed(cfg, cfg.method, seed, dir));
  }
  return runs;
}

EvalResult EvalCheckpoint(const Checkpoint& ckpt, const TaskConfig& task,
                          int episodes, std::uint64_t seed, int level) {
  const std::vector<int> levels = {level};
  return Evaluate(MeanAction(ckpt.params), ckpt.spec, task, episodes, seed,
                  levels);
}

std::vector<BenchRow> Bench(const RunConfig& cfg) {
  std::vector<BenchRow> rows;
  for (const Method method : cfg.bench_methods) {
    BenchRow row;
    row.method = method;
    row.stage = cfg.run_stages.back();
    for (const std::uint64_t seed : cfg.seeds) {
      const std::string dir = (fs::path(cfg.out_dir) / std::string(MethodName(method)) /
                               ("seed" + std::to_string(seed)))
                                  .string();
      const SeedRun run = TrainSeed(cfg, method, seed, dir);
      const StageConfig& stage = cfg.stage(row.stage);
      const Checkpoint ckpt = LoadCheckpoint(run.checkpoints.back());
      const EvalResult ev = EvalCheckpoint(ckpt, stage.task, cfg.eval_episodes,
                                           MixSeed(seed ^ 0xe7a1ULL), 0);
      WriteText((fs::path(dir) / "eval.csv").string(), EvalCsv(ev));
      const MetricsReport& m = ev.summary;
      row.success.push_back(m.success_rate);
      row.level.push_back(run.stages.back().final_level);
      row.r_air.push_back(m.r_air);
      row.p_base.push_back(m.p_base);
      row.p_mono.push_back(m.p_mono);
      row.t_vel.push_back(m.t_vel);
      row.t_reach.push_back(m.t_reach);
      row.mean_return.push_back(m.mean_return);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

const std::vector<std::pair<const char*, std::vector<double> BenchRow::*>>&
BenchColumns() {
  static const std::vector<std::pair<const char*, std::vector<double> BenchRow::*>>
      cols = {{"success", &BenchRow::success}, {"level", &BenchRow::level},
              {"r_air", &BenchRow::r_air},     {"p_base", &BenchRow::p_base},
              {"p_mono", &BenchRow::p_mono},   {"t_vel", &BenchRow::t_vel},
              {"t_reach", &BenchRow::t_reach}, {"return", &BenchRow::mean_return}};
  return cols;
}

}  // namespace

std::string BenchCsv(const std::vector<BenchRow>& rows) {
  std::string s = "# jumper-csv v1\nmethod,task,seeds";
  for (const auto& [name, _] : BenchColumns()) {
    s += std::string(",") + name + "_mean," + name + "_std";
  }
  s += "\n";
  for (const BenchRow& r : rows) {
    s += std::string(MethodName(r.method)) + ",stage" + std::to_string(r.stage) +
         "," + std::to_string(r.success.size());
    for (const auto& [name, field] : BenchColumns()) {
      s += "," + Num(Mean(r.*field)) + "," + Num(Std(r.*field));
    }
    s += "\n";
  }
  return s;
}

std::string BenchTable(const std::vector<BenchRow>& rows) {
  std::string s;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-20s %-7s", "method", "task");
  s += buf;
  for (const auto& [name, _] : BenchColumns()) {
    std::snprintf(buf, sizeof(buf), " %17s", name);
    s += buf;
  }
  s += "\n";
  for (const BenchRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-20s stage%-2d",
                  std::string(MethodName(r.method)).c_str(), r.stage);
    s += buf;
    for (const auto& [name, field] : BenchColumns()) {
      std::snprintf(buf, sizeof(buf), " %8.3f +- %5.3f", Mean(r.*field),
                    Std(r.*field));
      s += buf;
    }
    s += "\n";
  }
  return s;
}

int RunCli(int argc, char** argv) {
  CLI::App app{"Monopedal hopping with jump-started PPO"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;

  CLI::App* train = app.add_subcommand("train", "Train with a run config");
  train->add_option("-c,--config", config_path, "TOML run config")->required();
  train->add_option("-o,--out", out_dir, "Output directory (overrides run.out_dir)");

  std::string ckpt_path;
  std::string kind_name;
  int episodes = 20;
  std::uint64_t seed = 0;
  int level = 0;
  std::string out_file = "eval.csv";
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  eval->add_option("-c,--config", config_path, "TOML run config for the task");
  eval->add_option("--kind", kind_name, "Terrain kind (default: the stage's first)");
  eval->add_option("-n,--episodes", episodes, "Episodes")->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed, "Seed");
  eval->add_option("--level", level, "Terrain level")->check(CLI::Range(0, kMaxLevel));
  eval->add_option("-o,--out", out_file, "Metrics CSV");

  CLI::App* bench = app.add_subcommand("bench", "Compare methods over seeds");
  bench->add_option("-c,--config", config_path, "TOML run config")->required();
  bench->add_option("-o,--out", out_dir, "Output directory (overrides run.out_dir)");

  CLI::App* terrain = app.add_subcommand("terrain", "Terrain utilities");
  terrain->require_subcommand(1);
  CLI::App* render = terrain->add_subcommand("render", "Print a terrain profile");
  double extent = 10.0;
  std::string render_out;
  render->add_option("--kind", kind_name, "Terrain kind")->required();
  render->add_option("--level", level, "Level")->check(CLI::Range(0, kMaxLevel));
  render->add_option("--seed", seed, "Seed");
  render->add_option("--extent", extent, "Extent in meters");
  render->add_option("-o,--out", render_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (train->parsed()) {
      RunConfig cfg = LoadRunConfig(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      for (const SeedRun& run : Train(cfg)) {
        for (const StageResult& r : run.stages) {
          std::printf("seed %llu stage %d: %d iterations, success %.3f, level %.2f\n",
                      static_cast<unsigned long long>(run.seed), r.stage,
                      r.iterations, r.success_rate, r.final_level);
        }
      }
    } else if (eval->parsed()) {
      RunConfig cfg = config_path.empty() ? RunConfig() : LoadRunConfig(config_path);
      const Checkpoint ckpt = LoadCheckpointOrThrow(ckpt_path);
      if (ckpt.stage < 1 || ckpt.stage > 3) {
        throw std::runtime_error("checkpoint has no stage index");
      }
      TaskConfig task = cfg.stage(static_cast<int>(ckpt.stage)).task;
      if (!kind_name.empty()) {
        try {
          task.kinds = {ParseTerrainKind(kind_name)};
        } catch (const std::invalid_argument& e) {
          throw ConfigError("--kind", e.what());
        }
      }
      const EvalResult r = EvalCheckpoint(ckpt, task, episodes, seed, level);
      WriteText(out_file, EvalCsv(r));
      std::printf("episodes %d success %.3f r_air %.3f p_mono %.3f\n",
                  r.summary.episodes, r.summary.success_rate, r.summary.r_air,
                  r.summary.p_mono);
    } else if (bench->parsed()) {
      RunConfig cfg = LoadRunConfig(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const std::vector<BenchRow> rows = Bench(cfg);
      WriteText((fs::path(cfg.out_dir) / "bench.csv").string(), BenchCsv(rows));
      std::fputs(BenchTable(rows).c_str(), stdout);
    } else if (render->parsed()) {
      TerrainKind kind;
      try {
        kind = ParseTerrainKind(kind_name);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("--kind", e.what());
      }
      const std::string text =
          RenderProfile(Generate(kind, level, seed, std::max(extent, MinExtent(kind, level))));
      if (render_out.empty()) {
        std::fputs(text.c_str(), stdout);
      } else {
        WriteText(render_out, text);
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const MissingCheckpoint& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace jumper
