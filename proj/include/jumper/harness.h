#ifndef JUMPER_HARNESS_H_
#define JUMPER_HARNESS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "jumper/config.h"

namespace jumper {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// A checkpoint that is missing or unreadable. Reported as a config error.
class MissingCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Checkpoint LoadCheckpointOrThrow(const std::string& path);

// Stage configs for a method: JumpER keeps the configured stages, the PPO
// baselines train only the last one without a guide. Dense baselines get the
// full default shaping weights.
std::vector<StageConfig> MethodStages(const RunConfig& cfg, Method method);

struct SeedRun {
  Method method = Method::kJumpER;
  std::uint64_t seed = 0;
  std::string dir;
  std::vector<StageResult> stages;
  std::vector<std::string> checkpoints;  // best checkpoint per stage
};

// Trains one method on one seed; artifacts go to dir.
SeedRun TrainSeed(const RunConfig& cfg, Method method, std::uint64_t seed,
                  const std::string& dir);

// cfg.method on every seed, under out_dir/seed<k>.
std::vector<SeedRun> Train(const RunConfig& cfg);

// Mean-action rollouts of a checkpoint on task.
EvalResult EvalCheckpoint(const Checkpoint& ckpt, const TaskConfig& task,
                          int episodes, std::uint64_t seed, int level);

struct BenchRow {
  Method method = Method::kJumpER;
  int stage = 1;
  std::vector<double> success, level, r_air, p_base, p_mono, t_vel, t_reach,
      mean_return;
};

std::vector<BenchRow> Bench(const RunConfig& cfg);
std::string BenchCsv(const std::vector<BenchRow>& rows);
// Fixed-width "mean +- std" table.
std::string BenchTable(const std::vector<BenchRow>& rows);

// Full command line: train, eval, bench, terrain render. Returns the exit
// code; diagnostics go to stderr.
int RunCli(int argc, char** argv);

}  // namespace jumper

#endif  // JUMPER_HARNESS_H_
