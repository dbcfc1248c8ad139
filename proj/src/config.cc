#include "jumper/config.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

namespace jumper {
namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

[[noreturn]] void Fail(const std::string& key, const std::string& why) {
  throw ConfigError(key, "config key '" + key + "': " + why);
}

double AsDouble(const std::string& key, const toml::node& n) {
  if (auto v = n.value_exact<double>()) return *v;
  if (auto v = n.value_exact<std::int64_t>()) return static_cast<double>(*v);
  Fail(key, "expected a number");
}

std::int64_t AsInt(const std::string& key, const toml::node& n) {
  if (auto v = n.value_exact<std::int64_t>()) return *v;
  Fail(key, "expected an integer");
}

int AsInt32(const std::string& key, const toml::node& n) {
  const std::int64_t v = AsInt(key, n);
  if (v < INT32_MIN || v > INT32_MAX) Fail(key, "integer out of range");
  return static_cast<int>(v);
}

bool AsBool(const std::string& key, const toml::node& n) {
  if (auto v = n.value_exact<bool>()) return *v;
  Fail(key, "expected true or false");
}

std::string AsString(const std::string& key, const toml::node& n) {
  if (auto v = n.value_exact<std::string>()) return *v;
  Fail(key, "expected a string");
}

const toml::array& AsArray(const std::string& key, const toml::node& n) {
  if (const toml::array* a = n.as_array()) return *a;
  Fail(key, "expected an array");
}

template <typename T, typename F>
std::vector<T> Each(const std::string& key, const toml::node& n, F&& f) {
  std::vector<T> out;
  const toml::array& a = AsArray(key, n);
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.push_back(f(key + "[" + std::to_string(i) + "]", *a.get(i)));
  }
  return out;
}

std::array<double, kActDim> AsPair(const std::string& key, const toml::node& n) {
  const auto v = Each<double>(key, n, AsDouble);
  if (v.size() != kActDim) Fail(key, "expected [hip, knee]");
  return {v[0], v[1]};
}

// Wraps a value parser so std::invalid_argument reports the key.
template <typename F>
auto Guard(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    Fail(key, e.what());
  }
}

using Setter = std::function<void(const std::string&, const toml::node&)>;

class Registry {
 public:
  void Add(const std::string& key, Setter s) { setters_[key] = std::move(s); }

  void Apply(const toml::table& root) { Walk(root, ""); }

 private:
  void Walk(const toml::table& t, const std::string& prefix) {
    for (const auto& [k, node] : t) {
      const std::string key = prefix.empty() ? std::string(k.str())
                                             : prefix + "." + std::string(k.str());
      auto it = setters_.find(key);
      if (it != setters_.end()) {
        it->second(key, node);
      } else if (const toml::table* sub = node.as_table()) {
        if (!HasPrefix(key + ".")) Fail(key, "unknown section");
        Walk(*sub, key);
      } else {
        Fail(key, "unknown key");
      }
    }
  }

  bool HasPrefix(const std::string& p) const {
    auto it = setters_.lower_bound(p);
    return it != setters_.end() && it->first.compare(0, p.size(), p) == 0;
  }

  std::map<std::string, Setter> setters_;
};

void AddDouble(Registry& r, const std::string& key, double* dst) {
  r.Add(key, [dst](const std::string& k, const toml::node& n) {
    *dst = AsDouble(k, n);
  });
}

void AddInt(Registry& r, const std::string& key, int* dst) {
  r.Add(key, [dst](const std::string& k, const toml::node& n) {
    *dst = AsInt32(k, n);
  });
}

void AddBool(Registry& r, const std::string& key, bool* dst) {
  r.Add(key, [dst](const std::string& k, const toml::node& n) {
    *dst = AsBool(k, n);
  });
}

void RegisterModel(Registry& r, HopperModel& m) {
  const std::string s = "model.";
  AddDouble(r, s + "torso_mass", &m.torso_mass);
  AddDouble(r, s + "thigh_mass", &m.thigh_mass);
  AddDouble(r, s + "shank_mass", &m.shank_mass);
  AddDouble(r, s + "thigh_length", &m.thigh_length);
  AddDouble(r, s + "shank_length", &m.shank_length);
  AddDouble(r, s + "torso_length", &m.torso_length);
  AddDouble(r, s + "torso_inertia", &m.torso_inertia);
  AddDouble(r, s + "foot_radius", &m.foot_radius);
  AddDouble(r, s + "gravity", &m.gravity);
  AddDouble(r, s + "sim_dt", &m.sim_dt);
  AddInt(r, s + "control_decimation", &m.control_decimation);
  AddDouble(r, s + "pd_kp", &m.pd_kp);
  AddDouble(r, s + "pd_kd", &m.pd_kd);
  AddDouble(r, s + "torque_limit", &m.torque_limit);
  AddDouble(r, s + "friction_coeff", &m.friction_coeff);
  AddDouble(r, s + "contact_stiffness", &m.contact_stiffness);
  AddDouble(r, s + "contact_damping", &m.contact_damping);
  AddDouble(r, s + "max_penetration", &m.max_penetration);
  AddDouble(r, s + "assist_stiffness", &m.assist_stiffness);
  AddDouble(r, s + "assist_damping", &m.assist_damping);
  AddDouble(r, s + "reset_noise", &m.reset_noise);
  for (auto [name, dst] : {std::pair{"joint_lower", &m.joint_lower},
                           std::pair{"joint_upper", &m.joint_upper},
                           std::pair{"q_default", &m.q_default}}) {
    r.Add(s + name, [dst](const std::string& k, const toml::node& n) {
      *dst = AsPair(k, n);
    });
  }
}

struct StageOverrides {
  std::optional<double> extent, vx, yaw_rate;
  std::optional<std::vector<TerrainKind>> kinds;
  std::optional<SuccessRule> success;
  std::optional<AssistMode> assist;
  std::optional<ReachFarFrame> reach_far_frame;
  std::map<int, double> weights;
};

SuccessRule ParseSuccess(std::string_view s) {
  const std::string v = Lower(s);
  if (v == "reach_goal") return SuccessRule::kReachGoal;
  if (v == "survive") return SuccessRule::kSurvive;
  if (v == "survive_or_reach") return SuccessRule::kSurviveOrReach;
  throw std::invalid_argument("expected reach_goal, survive or survive_or_reach");
}

AssistMode ParseAssist(std::string_view s) {
  const std::string v = Lower(s);
  if (v == "off") return AssistMode::kOff;
  if (v == "guide_steps") return AssistMode::kGuideSteps;
  if (v == "always") return AssistMode::kAlways;
  throw std::invalid_argument("expected off, guide_steps or always");
}

ReachFarFrame ParseFrame(std::string_view s) {
  const std::string v = Lower(s);
  if (v == "goal") return ReachFarFrame::kFromGoal;
  if (v == "spawn") return ReachFarFrame::kFromSpawn;
  throw std::invalid_argument("expected goal or spawn");
}

void RegisterStage(Registry& r, int index, StageConfig& c, StageOverrides& o) {
  const std::string s = "stage" + std::to_string(index) + ".";
  AddInt(r, s + "iterations", &c.iterations);
  AddBool(r, s + "warm_start", &c.warm_start);
  AddBool(r, s + "convergence", &c.convergence.enabled);
  AddInt(r, s + "convergence_window", &c.convergence.window);
  AddDouble(r, s + "convergence_tolerance", &c.convergence.tolerance);
  AddInt(r, s + "convergence_patience", &c.convergence.patience);
  auto opt_double = [&](const char* name, std::optional<double>* dst) {
    r.Add(s + name, [dst](const std::string& k, const toml::node& n) {
      *dst = AsDouble(k, n);
    });
  };
  opt_double("extent", &o.extent);
  opt_double("vx", &o.vx);
  opt_double("yaw_rate", &o.yaw_rate);
  r.Add(s + "kinds", [&o](const std::string& k, const toml::node& n) {
    o.kinds = Each<TerrainKind>(k, n, [](const std::string& kk, const toml::node& nn) {
      const std::string name = AsString(kk, nn);
      return Guard(kk, [&] { return ParseTerrainKind(name); });
    });
  });
  r.Add(s + "success", [&o](const std::string& k, const toml::node& n) {
    const std::string v = AsString(k, n);
    o.success = Guard(k, [&] { return ParseSuccess(v); });
  });
  r.Add(s + "assist", [&o](const std::string& k, const toml::node& n) {
    const std::string v = AsString(k, n);
    o.assist = Guard(k, [&] { return ParseAssist(v); });
  });
  r.Add(s + "reach_far_frame", [&o](const std::string& k, const toml::node& n) {
    const std::string v = AsString(k, n);
    o.reach_far_frame = Guard(k, [&] { return ParseFrame(v); });
  });
  for (int t = 0; t < kNumRewardTerms; ++t) {
    r.Add(s + "reward." + std::string(RewardTermName(t)),
          [&o, t](const std::string& k, const toml::node& n) {
            o.weights[t] = AsDouble(k, n);
          });
  }
}

}  // namespace

std::string_view MethodName(Method m) {
  switch (m) {
    case Method::kJumpER:
      return "JumpER";
    case Method::kVanillaPPO:
      return "VanillaPPO";
    case Method::kPPOPretrained:
      return "PPOPretrained";
    case Method::kPPODense:
      return "PPODense";
    case Method::kPPODensePretrained:
      return "PPODensePretrained";
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  const std::string v = Lower(name);
  for (Method m : {Method::kJumpER, Method::kVanillaPPO, Method::kPPOPretrained,
                   Method::kPPODense, Method::kPPODensePretrained}) {
    if (Lower(MethodName(m)) == v) return m;
  }
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

bool IsPretrained(Method m) {
  return m == Method::kPPOPretrained || m == Method::kPPODensePretrained;
}

bool IsDense(Method m) {
  return m == Method::kPPODense || m == Method::kPPODensePretrained;
}

RunConfig::RunConfig() {
  for (int i = 1; i <= 3; ++i) stages.push_back(StageConfig::Default(i));
  train.threads = ThreadsFromEnv(
      static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));
}

void RunConfig::Validate() const {
  auto check = [](const std::string& key, auto&& fn) {
    Guard(key, [&] {
      fn();
      return 0;
    });
  };
  check("ppo", [&] { train.ppo.Validate(); });
  check("tracker", [&] { train.tracker.Validate(); });
  if (train.net.hidden.empty()) Fail("net.hidden", "needs at least one layer");
  for (const int h : train.net.hidden) {
    if (h < 1) Fail("net.hidden", "layer widths must be >= 1");
  }
  if (!(train.reward_scale > 0.0)) Fail("run.reward_scale", "must be > 0");
  if (train.success_window < 1) Fail("run.success_window", "must be >= 1");
  if (train.threads < 1) Fail("run.threads", "must be >= 1");
  if (seeds.empty()) Fail("run.seeds", "needs at least one seed");
  if (csv_every < 1) Fail("run.csv_every", "must be >= 1");
  if (eval_episodes < 1) Fail("run.eval_episodes", "must be >= 1");
  if (out_dir.empty()) Fail("run.out_dir", "must not be empty");
  if (run_stages.empty()) Fail("run.stages", "needs at least one stage");
  for (std::size_t i = 0; i < run_stages.size(); ++i) {
    if (run_stages[i] < 1 || run_stages[i] > 3) Fail("run.stages", "stages are 1, 2 or 3");
    if (i > 0 && run_stages[i] != run_stages[i - 1] + 1) {
      Fail("run.stages", "stages must be consecutive and ascending");
    }
  }
  if (bench_methods.empty()) Fail("run.methods", "needs at least one method");
  if (IsPretrained(method) && checkpoint.empty()) {
    Fail("run.checkpoint", "required by method " + std::string(MethodName(method)));
  }
  if (method == Method::kJumpER && run_stages.front() > 1 && checkpoint.empty()) {
    Fail("run.checkpoint", "JumpER starting past stage 1 needs the prior checkpoint");
  }
  for (const StageConfig& s : stages) {
    const std::string key = "stage" + std::to_string(s.index);
    check(key, [&] { s.Validate(); });
  }
}

RunConfig ParseRunConfig(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config syntax error at line " << e.source().begin.line
        << ", column " << e.source().begin.column << ": " << e.description();
    throw ConfigError("", msg.str());
  }

  RunConfig c;
  HopperModel model = c.stage(1).task.model;
  JumpSchedule sched = c.stage(1).schedule;
  std::array<StageOverrides, 3> over;
  Registry r;

  r.Add("run.method", [&](const std::string& k, const toml::node& n) {
    const std::string v = AsString(k, n);
    c.method = Guard(k, [&] { return ParseMethod(v); });
  });
  r.Add("run.methods", [&](const std::string& k, const toml::node& n) {
    c.bench_methods = Each<Method>(k, n, [](const std::string& kk, const toml::node& nn) {
      const std::string v = AsString(kk, nn);
      return Guard(kk, [&] { return ParseMethod(v); });
    });
  });
  r.Add("run.stages", [&](const std::string& k, const toml::node& n) {
    c.run_stages = Each<int>(k, n, AsInt32);
  });
  r.Add("run.seeds", [&](const std::string& k, const toml::node& n) {
    c.seeds = Each<std::uint64_t>(k, n, [](const std::string& kk, const toml::node& nn) {
      const std::int64_t v = AsInt(kk, nn);
      if (v < 0) Fail(kk, "seeds must be >= 0");
      return static_cast<std::uint64_t>(v);
    });
  });
  r.Add("run.out_dir", [&](const std::string& k, const toml::node& n) {
    c.out_dir = AsString(k, n);
  });
  r.Add("run.checkpoint", [&](const std::string& k, const toml::node& n) {
    c.checkpoint = AsString(k, n);
  });
  AddInt(r, "run.csv_every", &c.csv_every);
  AddInt(r, "run.eval_episodes", &c.eval_episodes);
  r.Add("run.threads", [&](const std::string& k, const toml::node& n) {
    const int v = AsInt32(k, n);
    if (v < 1) Fail(k, "must be >= 1");
    c.train.threads = ThreadsFromEnv(v) < v ? ThreadsFromEnv(v) : v;
  });
  AddDouble(r, "run.reward_scale", &c.train.reward_scale);
  AddInt(r, "run.success_window", &c.train.success_window);

  PPOConfig& p = c.train.ppo;
  AddDouble(r, "ppo.gamma", &p.gamma);
  AddDouble(r, "ppo.lambda", &p.lambda);
  AddDouble(r, "ppo.clip", &p.clip);
  AddInt(r, "ppo.epochs", &p.epochs);
  AddInt(r, "ppo.minibatches", &p.minibatches);
  AddDouble(r, "ppo.value_coef", &p.value_coef);
  AddDouble(r, "ppo.entropy_coef", &p.entropy_coef);
  AddDouble(r, "ppo.max_grad_norm", &p.max_grad_norm);
  AddInt(r, "ppo.num_envs", &p.num_envs);
  AddDouble(r, "ppo.learning_rate", &p.learning_rate);
  AddBool(r, "ppo.guide_steps_in_surrogate", &p.guide_steps_in_surrogate);

  r.Add("net.hidden", [&](const std::string& k, const toml::node& n) {
    c.train.net.hidden = Each<int>(k, n, AsInt32);
  });
  AddDouble(r, "net.init_log_std", &c.train.net.init_log_std);
  AddDouble(r, "net.output_gain", &c.train.net.output_gain);

  AddInt(r, "tracker.window", &c.train.tracker.window);
  AddDouble(r, "tracker.promote", &c.train.tracker.promote_threshold);
  AddDouble(r, "tracker.demote", &c.train.tracker.demote_threshold);
  AddInt(r, "tracker.initial_level", &c.train.tracker.initial_level);

  AddInt(r, "schedule.n0", &sched.n0);
  AddInt(r, "schedule.m", &sched.m);
  AddInt(r, "schedule.patches_per_episode", &sched.patches_per_episode);
  AddInt(r, "schedule.patch_len", &sched.patch_len);

  RegisterModel(r, model);
  for (int i = 0; i < 3; ++i) RegisterStage(r, i + 1, c.stages[i], over[i]);

  r.Apply(root);

  p.patch_len = sched.patch_len;
  model.episode_horizon = sched.Horizon();
  Guard("model", [&] {
    model.Validate();
    return 0;
  });
  for (int i = 0; i < 3; ++i) {
    StageConfig& s = c.stages[i];
    const StageOverrides& o = over[i];
    s.schedule = sched;
    s.task.model = model;
    if (o.extent) s.task.extent = *o.extent;
    if (o.vx) s.task.command.vx = *o.vx;
    if (o.yaw_rate) s.task.command.yaw_rate = *o.yaw_rate;
    if (o.kinds) s.task.kinds = *o.kinds;
    if (o.success) s.task.success = *o.success;
    if (o.assist) s.assist = *o.assist;
    if (o.reach_far_frame) s.task.reward_options.reach_far_frame = *o.reach_far_frame;
    for (const auto& [t, w] : o.weights) s.task.weights[t] = w;
  }
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return ParseRunConfig(text.str());
}

}  // namespace jumper
