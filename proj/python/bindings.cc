#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "jumper/config.h"
#include "jumper/core.h"
#include "jumper/harness.h"

namespace py = pybind11;
using namespace jumper;

namespace {

py::array_t<double> ToArray(const Eigen::VectorXd& v) {
  return py::array_t<double>(v.size(), v.data());
}

py::array_t<double> ToArray(const std::vector<double>& v) {
  return py::array_t<double>(v.size(), v.data());
}

TerrainKind Kind(const std::string& name) { return ParseTerrainKind(name); }

py::dict TerrainDict(const Heightfield& hf) {
  py::dict d;
  d["kind"] = std::string(TerrainKindName(hf.kind));
  d["level"] = hf.level;
  d["resolution"] = hf.resolution;
  d["heights"] = ToArray(hf.heights);
  d["extent"] = hf.extent;
  d["goal_x"] = hf.goal_x;
  d["spawn_x"] = hf.spawn_x;
  d["platform_width"] = hf.platform_width;
  return d;
}

py::dict MetricsDict(const MetricsReport& m) {
  py::dict d;
  d["r_air"] = m.r_air;
  d["p_base"] = m.p_base;
  d["p_mono"] = m.p_mono;
  d["t_vel"] = m.t_vel;
  d["t_reach"] = m.t_reach;
  d["level"] = m.mean_level;
  d["success"] = m.success_rate;
  d["mean_return"] = m.mean_return;
  d["episodes"] = m.episodes;
  return d;
}

// Single environment with the reward attached.
class PyEnv {
 public:
  PyEnv(bool terrain_aware, bool assist, const std::string& objective)
      : env_(HopperModel{}, terrain_aware ? ObsSpec::TerrainAware()
                                          : ObsSpec::Proprio()) {
    env_.mutable_model().assist_spring = assist;
    if (objective == "goal_reaching") {
      mode_ = ObjectiveMode::kGoalReaching;
    } else if (objective != "velocity_tracking") {
      throw std::invalid_argument("objective must be velocity_tracking or goal_reaching");
    }
  }

  py::array_t<double> Reset(const std::string& kind, int level,
                            std::uint64_t seed, double extent, double vx) {
    const TerrainKind k = Kind(kind);
    Heightfield hf = Generate(k, level, seed, std::max(extent, MinExtent(k, level)));
    return ToArray(env_.Reset(std::move(hf), seed, Command{vx, 0.0}));
  }

  py::tuple Step(const std::vector<double>& action) {
    if (action.size() != kActDim) throw std::invalid_argument("action must have 2 entries");
    const StepInfo& info = env_.Step(action);
    const RewardBreakdown r = ComputeReward(info, weights_, mode_);
    py::dict terms;
    for (int t = 0; t < kNumRewardTerms; ++t) {
      terms[py::str(std::string(RewardTermName(t)))] = r.weighted[t];
    }
    return py::make_tuple(ToArray(env_.obs()), r.total, info.terminated,
                          std::string(TerminationName(info.reason)), terms);
  }

  int obs_dim() const { return env_.spec().total_dim; }
  int step_count() const { return env_.state().step; }

 private:
  HopperEnv env_;
  RewardWeights weights_;
  ObjectiveMode mode_ = ObjectiveMode::kVelocityTracking;
};

}  // namespace

PYBIND11_MODULE(_jumper, m) {
  m.doc() = "Planar monoped locomotion with guided patch training";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("schedule_n",
        [](std::int64_t t, int n0, int period) {
          JumpSchedule s;
          s.n0 = n0;
          s.m = period;
          return ScheduleN(t, s);
        },
        py::arg("t"), py::arg("n0") = 2, py::arg("m") = 300);
  m.def("mix_select",
        [](int step, int n_t, int patch_len) {
          return MixSelect(step, n_t, patch_len) == ActorTag::kGuide ? "guide" : "learner";
        },
        py::arg("step"), py::arg("n_t"), py::arg("patch_len") = 25);
  m.def("gae",
        [](const std::vector<double>& rewards, const std::vector<double>& values,
           const std::vector<int>& dones, double bootstrap, double gamma,
           double lambda) {
          std::vector<std::uint8_t> d(dones.begin(), dones.end());
          const GaeResult r = Gae(rewards, values, d, bootstrap, gamma, lambda);
          return py::make_tuple(ToArray(r.advantages), ToArray(r.returns));
        },
        py::arg("rewards"), py::arg("values"), py::arg("dones"),
        py::arg("bootstrap"), py::arg("gamma") = 0.99, py::arg("lam") = 0.95);
  m.def("clipped_objective", &ClippedObjective, py::arg("ratio"),
        py::arg("advantage"), py::arg("eps") = 0.2);
  m.def("default_reward_weights", [] {
    const RewardWeights w;
    py::dict d;
    for (int t = 0; t < kNumRewardTerms; ++t) {
      d[py::str(std::string(RewardTermName(t)))] = w[t];
    }
    return d;
  });
  m.def("level_params", [](const std::string& kind, int level) {
    const TerrainParams p = LevelParams(Kind(kind), level);
    py::dict d;
    d["slope_grade"] = p.slope_grade;
    d["stair_height"] = p.stair_height;
    d["stair_width"] = p.stair_width;
    d["noise_amplitude"] = p.noise_amplitude;
    d["gap_width"] = p.gap_width;
    d["stone_size"] = p.stone_size;
    d["stone_gap"] = p.stone_gap;
    d["platform_width"] = p.platform_width;
    return d;
  });
  m.def("generate_terrain",
        [](const std::string& kind, int level, std::uint64_t seed, double extent) {
          return TerrainDict(Generate(Kind(kind), level, seed, extent));
        },
        py::arg("kind"), py::arg("level") = 0, py::arg("seed") = 0,
        py::arg("extent") = 10.0);
  m.def("render_terrain",
        [](const std::string& kind, int level, std::uint64_t seed, double extent) {
          return RenderProfile(Generate(Kind(kind), level, seed, extent));
        },
        py::arg("kind"), py::arg("level") = 0, py::arg("seed") = 0,
        py::arg("extent") = 10.0);

  py::class_<PyEnv>(m, "HopperEnv")
      .def(py::init<bool, bool, const std::string&>(),
           py::arg("terrain_aware") = false, py::arg("assist") = false,
           py::arg("objective") = "velocity_tracking")
      .def("reset", &PyEnv::Reset, py::arg("kind") = "Flat", py::arg("level") = 0,
           py::arg("seed") = 0, py::arg("extent") = 10.0, py::arg("vx") = 0.0)
      .def("step", &PyEnv::Step, py::arg("action"))
      .def_property_readonly("obs_dim", &PyEnv::obs_dim)
      .def_property_readonly("step_count", &PyEnv::step_count);

  m.def("validate_config",
        [](const std::string& text) {
          const RunConfig c = ParseRunConfig(text);
          py::dict d;
          d["method"] = std::string(MethodName(c.method));
          d["seeds"] = c.seeds;
          d["stages"] = c.run_stages;
          d["out_dir"] = c.out_dir;
          return d;
        },
        py::arg("text"));
  m.def("evaluate_checkpoint",
        [](const std::string& path, int episodes, std::uint64_t seed, int level) {
          const Checkpoint ckpt = LoadCheckpointOrThrow(path);
          const RunConfig cfg;
          const TaskConfig& task = cfg.stage(static_cast<int>(ckpt.stage)).task;
          return MetricsDict(EvalCheckpoint(ckpt, task, episodes, seed, level).summary);
        },
        py::arg("path"), py::arg("episodes") = 10, py::arg("seed") = 0,
        py::arg("level") = 0);
  m.def("run_cli",
        [](std::vector<std::string> args) {
          args.insert(args.begin(), "jumper");
          std::vector<char*> argv;
          for (std::string& a : args) argv.push_back(a.data());
          py::gil_scoped_release release;
          return RunCli(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"));
}
