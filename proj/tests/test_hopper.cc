#include <cmath>
#include <numbers>

#include "doctest.h"
#include "jumper/hopper.h"
#include "jumper/rng.h"

using namespace jumper;

namespace {

Heightfield Flat(double extent = 10.0) {
  return Generate(TerrainKind::kFlat, 0, 0, extent);
}

HopperState Airborne(const HopperModel& m, const Heightfield& hf, double z) {
  HopperState s = Reset(m, hf, 0);
  s.q[1] = z;
  return s;
}

bool SameState(const HopperState& a, const HopperState& b) {
  return a.q == b.q && a.qd == b.qd && a.torques == b.torques &&
         a.joint_acc == b.joint_acc && a.step == b.step;
}

std::array<double, 2> RandomAction(const HopperModel& m, Rng& rng) {
  return {rng.Uniform(m.joint_lower[0], m.joint_upper[0]),
          rng.Uniform(m.joint_lower[1], m.joint_upper[1])};
}

}  // namespace

TEST_CASE("model defaults") {
  const HopperModel m;
  CHECK(m.torso_mass == 3.0);
  CHECK(m.thigh_mass == 0.5);
  CHECK(m.shank_mass == 0.3);
  CHECK(m.thigh_length == 0.22);
  CHECK(m.shank_length == 0.22);
  CHECK(m.gravity == 9.81);
  CHECK(m.sim_dt == 0.005);
  CHECK(m.control_decimation == 4);
  CHECK(m.ControlDt() == doctest::Approx(0.02));
  CHECK(m.pd_kp == 30.0);
  CHECK(m.pd_kd == 1.0);
  CHECK(m.torque_limit == 23.5);
  CHECK(m.friction_coeff == 0.8);
  CHECK(m.contact_stiffness == 5000.0);
  CHECK(m.contact_damping == 100.0);
  CHECK(m.episode_horizon == 1000);
  CHECK_NOTHROW(m.Validate());
}

TEST_CASE("model validation names the field") {
  HopperModel m;
  m.pd_kp = 0.0;
  CHECK_THROWS_WITH_AS(m.Validate(), doctest::Contains("pd_gains"), std::invalid_argument);
  m = HopperModel();
  m.q_default = {3.0, -1.0};
  CHECK_THROWS_WITH_AS(m.Validate(), doctest::Contains("q_default"), std::invalid_argument);
}

TEST_CASE("reset places the torso at standing height") {
  const HopperModel m;
  const Heightfield hf = Flat();
  // Forward kinematics at q_default, independent of StandingHeight.
  const double a1 = m.q_default[0];
  const double a2 = m.q_default[0] + m.q_default[1];
  const double expected =
      0.22 * std::cos(a1) + 0.22 * std::cos(a2) + m.foot_radius;
  const HopperState s = Reset(m, hf, 7);
  CHECK(s.z() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.x() == hf.spawn_x);
  CHECK(s.pitch() == 0.0);
  CHECK(s.qd.isZero());
  CHECK(s.step == 0);

  const HopperState again = Reset(m, hf, 7);
  CHECK(SameState(s, again));
  const HopperState other = Reset(m, hf, 8);
  CHECK(other.joints() != s.joints());
  for (const HopperState& st : {s, other}) {
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(st.joints()[j] - m.q_default[j]) <= 0.05);
    }
  }
}

TEST_CASE("PD fixed point without gravity") {
  HopperModel m;
  m.gravity = 0.0;
  const Heightfield hf = Flat();
  const HopperState s = Airborne(m, hf, 3.0);
  const double a[] = {s.q[3], s.q[4]};
  const StepResult r = Step(m, s, hf, a);
  CHECK(r.state.q == s.q);
  CHECK(r.state.qd == s.qd);
  CHECK(r.state.torques.isZero());
}

TEST_CASE("step rejects bad input") {
  const HopperModel m;
  const Heightfield hf = Flat();
  HopperState s = Reset(m, hf, 0);
  const double bad[] = {std::nan(""), 0.0};
  CHECK_THROWS_AS(Step(m, s, hf, bad), std::invalid_argument);
  const double short_action[] = {0.0};
  CHECK_THROWS_AS(Step(m, s, hf, short_action), std::invalid_argument);
  s.terminated = true;
  const double ok[] = {0.5, -1.0};
  CHECK_THROWS_AS(Step(m, s, hf, ok), std::logic_error);
}

TEST_CASE("energy drift in free flight") {
  HopperModel m;
  m.torque_limit = 1e-12;
  const Heightfield hf = Flat();
  HopperState s = Airborne(m, hf, 30.0);
  s.qd << 0.3, 1.0, 0.4, -0.3, 0.5;
  const double e0 = KineticEnergy(m, s) + PotentialEnergy(m, s);
  const double a[] = {m.q_default[0], m.q_default[1]};
  const int steps = static_cast<int>(std::lround(1.0 / m.ControlDt()));
  double worst = 0.0;
  for (int t = 0; t < steps; ++t) {
    s = Step(m, s, hf, a).state;
    const double e = KineticEnergy(m, s) + PotentialEnergy(m, s);
    worst = std::max(worst, std::abs(e - e0) / std::abs(e0));
  }
  CHECK(worst < 0.01);
}

TEST_CASE("torso drop terminates on the contact substep") {
  HopperModel m;
  const Heightfield hf = Flat();
  HopperState s = Reset(m, hf, 0);
  s.q[3] = m.joint_upper[0];
  s.q[4] = m.joint_upper[1];
  s.q[1] = 1.0;
  const double hold[] = {m.joint_upper[0], m.joint_upper[1]};

  // Oracle: the same motion one substep at a time.
  HopperModel fine = m;
  fine.control_decimation = 1;
  fine.episode_horizon = 1 << 20;
  HopperState f = s;
  int first_hit = -1;
  for (int k = 0; k < 4000 && first_hit < 0; ++k) {
    const StepResult r = Step(fine, f, hf, hold);
    for (int b = kShank; b < kNumBodies; ++b) {
      if (r.state.contact_forces[b].y() > 0.0) first_hit = k;
    }
    f = r.state;
  }
  REQUIRE(first_hit >= 0);

  int t = 0;
  StepResult r;
  for (; t < 1000; ++t) {
    r = Step(m, s, hf, hold);
    s = r.state;
    if (r.info.terminated) break;
  }
  CHECK(r.info.reason == TerminationReason::kNonFootContact);
  CHECK(r.info.contact_body == kTorso);
  CHECK(t * m.control_decimation + r.info.termination_substep == first_hit);
  CHECK(s.q == f.q);
}

TEST_CASE("passing the goal ends the episode") {
  const HopperModel m;
  const Heightfield hf = Flat();
  HopperState s = Reset(m, hf, 0);
  s.q[0] = hf.goal_x - 1e-4;
  s.qd[0] = 1.0;
  const double a[] = {m.q_default[0], m.q_default[1]};
  const StepResult r = Step(m, s, hf, a);
  CHECK(r.info.terminated);
  CHECK(r.info.reason == TerminationReason::kOutOfBounds);
}

TEST_CASE("timeout at the horizon") {
  HopperModel m;
  m.episode_horizon = 3;
  m.assist_spring = true;
  const Heightfield hf = Flat();
  HopperState s = Reset(m, hf, 0);
  const double a[] = {m.q_default[0], m.q_default[1]};
  StepResult r;
  for (int t = 0; t < 3; ++t) {
    r = Step(m, s, hf, a);
    s = r.state;
    CHECK(r.info.terminated == (t == 2));
  }
  CHECK(r.info.reason == TerminationReason::kTimeout);
}

TEST_CASE("random rollouts respect the monopedal rule and state bounds") {
  const HopperModel m;
  Rng rng(2024);
  long steps = 0;
  long post_contact_live = 0;
  int episodes = 0;
  const TerrainKind kinds[] = {TerrainKind::kFlat, TerrainKind::kRoughGround,
                               TerrainKind::kSteppingStone};
  while (steps < 100000) {
    const TerrainKind kind = kinds[episodes % 3];
    const Heightfield hf = Generate(kind, episodes % 10, episodes, 12.0);
    HopperState s = Reset(m, hf, rng.Next());
    ++episodes;
    while (!s.terminated) {
      const auto a = RandomAction(m, rng);
      const StepResult r = Step(m, s, hf, a);
      s = r.state;
      ++steps;
      bool body_contact = false;
      for (int b = kShank; b < kNumBodies; ++b) {
        if (s.contact_forces[b].y() > 0.0) body_contact = true;
      }
      if (body_contact && !r.info.terminated) ++post_contact_live;
      CHECK(r.info.terminated == (r.info.reason != TerminationReason::kNone));
      for (int j = 0; j < 2; ++j) {
        CHECK(s.joints()[j] >= m.joint_lower[j]);
        CHECK(s.joints()[j] <= m.joint_upper[j]);
        CHECK(std::abs(s.torques[j]) <= m.torque_limit);
      }
      for (int b = 0; b < kNumBodies; ++b) CHECK(s.contact_forces[b].y() >= 0.0);
    }
    CHECK_THROWS_AS(Step(m, s, hf, RandomAction(m, rng)), std::logic_error);
  }
  CHECK(post_contact_live == 0);
}

TEST_CASE("foot force only while penetrating") {
  HopperModel m;
  m.control_decimation = 1;
  m.episode_horizon = 1 << 20;
  const Heightfield hf = Generate(TerrainKind::kRoughGround, 5, 1, 12.0);
  Rng rng(5);
  HopperState s = Reset(m, hf, 1);
  int touching = 0;
  for (int k = 0; k < 2000 && !s.terminated; ++k) {
    const Vec2 foot = FootPosition(m, s);
    const double pen = HeightAt(hf, foot.x()) - (foot.y() - m.foot_radius);
    const StepResult r = Step(m, s, hf, RandomAction(m, rng));
    if (r.state.contact_forces[kFoot].y() > 0.0) {
      CHECK(pen > 0.0);
      ++touching;
    }
    s = r.state;
  }
  CHECK(touching > 0);
}

TEST_CASE("rollouts are deterministic") {
  const HopperModel m;
  const Heightfield hf = Generate(TerrainKind::kRoughGround, 3, 9, 12.0);
  auto run = [&] {
    Rng rng(77);
    HopperState s = Reset(m, hf, 77);
    std::vector<HopperState> out;
    for (int t = 0; t < 200 && !s.terminated; ++t) {
      s = Step(m, s, hf, RandomAction(m, rng)).state;
      out.push_back(s);
    }
    return out;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(SameState(a[i], b[i]));
}

TEST_CASE("observation layout") {
  const HopperModel m;
  const Heightfield hf = Flat();
  HopperState s = Reset(m, hf, 3);
  const Observation o = AssembleObs(m, s, hf, ObsSpec::Proprio(), Command{});
  REQUIRE(o.size() == 11);
  CHECK(o[0] == 0.0);
  CHECK(o[1] == doctest::Approx(0.0));
  CHECK(o[2] == doctest::Approx(-1.0));
  CHECK(o[3] == 0.0);
  CHECK(o[4] == 0.0);
  CHECK(o[5] == s.q[3]);
  CHECK(o[6] == s.q[4]);
  CHECK(o[7] == 0.0);
  CHECK(o[8] == 0.0);

  s.qd[2] = 2.0;
  s.qd[3] = -4.0;
  const Observation scaled =
      AssembleObs(m, s, hf, ObsSpec::Proprio(), Command{0.5, 0.0});
  CHECK(scaled[0] == 0.5);
  CHECK(scaled[3] == 0.5);
  CHECK(scaled[7] == -1.0);

  const ObsSpec terrain = ObsSpec::TerrainAware();
  CHECK(terrain.total_dim == 43);
  CHECK(terrain.Consistent());
  const Observation t = AssembleObs(m, s, hf, terrain, Command{0.5, 0.0});
  REQUIRE(t.size() == 43);
  CHECK(t.tail(32).isZero());
  CHECK(t.head(11) == scaled);

  s.q[2] = std::numbers::pi / 2;
  const Observation tilted = AssembleObs(m, s, hf, ObsSpec::Proprio(), Command{});
  CHECK(tilted[1] == doctest::Approx(-1.0));
  CHECK(tilted[2] == doctest::Approx(0.0));
}

TEST_CASE("heightmap entries are clipped") {
  const HopperModel m;
  const Heightfield hf = Generate(TerrainKind::kWideGap, 9, 0, 12.0);
  HopperState s = Reset(m, hf, 0);
  s.q[0] = 0.5 * hf.extent - 0.4;
  const Observation o = AssembleObs(m, s, hf, ObsSpec::TerrainAware(), Command{});
  CHECK(o.tail(32).minCoeff() >= -1.0);
  CHECK(o.tail(32).minCoeff() == -1.0);
  CHECK(o.allFinite());
}

TEST_CASE("inconsistent specs are rejected") {
  ObsSpec spec = ObsSpec::TerrainAware();
  spec.total_dim = 40;
  CHECK_FALSE(spec.Consistent());
  CHECK_THROWS_AS(HopperEnv(HopperModel(), spec), std::invalid_argument);
}

TEST_CASE("trajectory csv") {
  CHECK(TrajectoryCsvHeader() == "t,x,z,pitch,hip,knee,contacts,reward\n");
  const HopperModel m;
  HopperEnv env(m, ObsSpec::Proprio());
  env.Reset(Flat(), 0, {});
  const double a[] = {m.q_default[0], m.q_default[1]};
  const StepInfo& info = env.Step(a);
  const std::string row = TrajectoryCsvRow(env.state(), info, 1.25);
  CHECK(row.rfind("1,", 0) == 0);
  CHECK(row.find(",1.250000\n") != std::string::npos);
}
