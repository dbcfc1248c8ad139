#ifndef JUMPER_CONFIG_H_
#define JUMPER_CONFIG_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "jumper/core.h"

namespace jumper {

enum class Method {
  kJumpER,
  kVanillaPPO,
  kPPOPretrained,
  kPPODense,
  kPPODensePretrained,
};

std::string_view MethodName(Method m);
// Case-insensitive; throws std::invalid_argument.
Method ParseMethod(std::string_view name);
bool IsPretrained(Method m);
bool IsDense(Method m);

// Invalid configuration; key() is the dotted path of the offending entry
// (empty for syntax errors).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  Method method = Method::kJumpER;
  // Methods compared by bench.
  std::vector<Method> bench_methods = {Method::kJumpER, Method::kVanillaPPO};
  TrainConfig train;
  // Always stages 1..3; run_stages selects which ones are trained.
  std::vector<StageConfig> stages;
  std::vector<int> run_stages = {1};
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir = "runs";
  // Every k-th iteration row goes to the CSV (the last one always does).
  int csv_every = 1;
  // Learner initialization for pretrained methods, or the frozen prior
  // when JumpER starts past stage 1.
  std::string checkpoint;
  int eval_episodes = 20;

  RunConfig();
  // Throws ConfigError.
  void Validate() const;
  const StageConfig& stage(int index) const { return stages.at(index - 1); }
};

// Throws ConfigError for syntax errors, unknown keys, wrong types and
// invalid values.
RunConfig ParseRunConfig(std::string_view text);
RunConfig LoadRunConfig(const std::string& path);

}  // namespace jumper

#endif  // JUMPER_CONFIG_H_
