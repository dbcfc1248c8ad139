#include "jumper/hopper.h"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "jumper/rng.h"

namespace jumper {
namespace {

constexpr double kRateScale = 0.25;
constexpr double kHeightmapClip = 1.0;
constexpr double kBodyContactRadius = 0.02;

using Mat25 = Eigen::Matrix<double, 2, kNumCoords>;
using Mat55 = Eigen::Matrix<double, kNumCoords, kNumCoords>;

enum Link : int { kTorsoLink = 0, kThighLink = 1, kShankLink = 2 };

struct LinkAngles {
  std::array<double, 3> angle;
  std::array<double, 3> rate;
};

LinkAngles ComputeLinkAngles(const Coords& q, const Coords& qd) {
  LinkAngles a;
  a.angle = {q[2], q[2] + q[3], q[2] + q[3] + q[4]};
  a.rate = {qd[2], qd[2] + qd[3], qd[2] + qd[3] + qd[4]};
  return a;
}

// A point rigidly attached to the chain: hip + sum_k R(angle_k) r_k.
struct PointKinematics {
  Vec2 pos = Vec2::Zero();
  Vec2 vel = Vec2::Zero();
  Mat25 jac = Mat25::Zero();
  Vec2 bias = Vec2::Zero();  // Jdot * qd
};

struct Term {
  Link link;
  Vec2 local;
};

PointKinematics EvalPoint(const Coords& q, const Coords& qd,
                          const LinkAngles& la, std::span<const Term> terms) {
  PointKinematics p;
  p.pos = Vec2(q[0], q[1]);
  p.vel = Vec2(qd[0], qd[1]);
  p.jac(0, 0) = 1.0;
  p.jac(1, 1) = 1.0;
  for (const Term& t : terms) {
    const double c = std::cos(la.angle[t.link]);
    const double s = std::sin(la.angle[t.link]);
    const Vec2 v(c * t.local.x() - s * t.local.y(),
                 s * t.local.x() + c * t.local.y());
    const Vec2 perp(-v.y(), v.x());
    p.pos += v;
    p.vel += la.rate[t.link] * perp;
    p.bias -= la.rate[t.link] * la.rate[t.link] * v;
    // The link angle depends on pitch and on every joint up to this link.
    for (int j = 0; j <= t.link; ++j) p.jac.col(2 + j) += perp;
  }
  return p;
}

struct ContactPoint {
  Body body;
  std::array<Term, 2> terms;
  int num_terms;
  double radius;
};

std::vector<ContactPoint> ContactPoints(const HopperModel& m) {
  const double l1 = m.thigh_length;
  const double l2 = m.shank_length;
  const double half = 0.5 * m.torso_length;
  const double r = kBodyContactRadius;
  return {
      {kFoot, {{{kThighLink, {0, -l1}}, {kShankLink, {0, -l2}}}}, 2,
       m.foot_radius},
      {kShank, {{{kThighLink, {0, -l1}}, {kShankLink, {0, -0.5 * l2}}}}, 2, r},
      {kShank, {{{kThighLink, {0, -l1}}, {kShankLink, {0, 0}}}}, 2, r},
      {kThigh, {{{kThighLink, {0, -0.5 * l1}}, {kThighLink, {0, 0}}}}, 2, r},
      {kTorso, {{{kTorsoLink, {half, 0}}, {kTorsoLink, {0, 0}}}}, 1, r},
      {kTorso, {{{kTorsoLink, {-half, 0}}, {kTorsoLink, {0, 0}}}}, 1, r},
      {kTorso, {{{kTorsoLink, {0, 0}}, {kTorsoLink, {0, 0}}}}, 1, r},
  };
}

struct BodyKinematics {
  PointKinematics torso, thigh, shank;
};

BodyKinematics EvalBodies(const HopperModel& m, const Coords& q,
                          const Coords& qd, const LinkAngles& la) {
  const Term thigh_com[] = {{kThighLink, {0, -0.5 * m.thigh_length}}};
  const Term shank_com[] = {{kThighLink, {0, -m.thigh_length}},
                            {kShankLink, {0, -0.5 * m.shank_length}}};
  BodyKinematics b;
  b.torso = EvalPoint(q, qd, la, {});
  b.thigh = EvalPoint(q, qd, la, thigh_com);
  b.shank = EvalPoint(q, qd, la, shank_com);
  return b;
}

double RodInertia(double mass, double length) {
  return mass * length * length / 12.0;
}

Mat55 MassMatrix(const HopperModel& m, const BodyKinematics& b) {
  Mat55 mm = m.torso_mass * b.torso.jac.transpose() * b.torso.jac +
             m.thigh_mass * b.thigh.jac.transpose() * b.thigh.jac +
             m.shank_mass * b.shank.jac.transpose() * b.shank.jac;
  // Angular Jacobians: torso (pitch), thigh (pitch, hip), shank (all three).
  const double it = m.torso_inertia;
  const double i1 = RodInertia(m.thigh_mass, m.thigh_length);
  const double i2 = RodInertia(m.shank_mass, m.shank_length);
  const std::array<double, 3> inertia = {it, i1, i2};
  for (int link = 0; link < 3; ++link) {
    for (int a = 0; a <= link; ++a) {
      for (int c = 0; c <= link; ++c) mm(2 + a, 2 + c) += inertia[link];
    }
  }
  return mm;
}

// Spring part of the normal force; zero when the point is not penetrating.
double Penetration(const Heightfield& hf, const PointKinematics& p,
                   double radius) {
  return HeightAt(hf, p.pos.x()) - (p.pos.y() - radius);
}

// Inelastic limit impulse: joints that would pass a limit this substep get
// the velocity that lands them on it; the reaction goes through the inverse
// mass matrix.
void EnforceJointLimits(const HopperModel& m, const Eigen::LDLT<Mat55>& solver,
                        const Coords& q, Coords& qd) {
  for (int pass = 0; pass < 2; ++pass) {
    std::array<int, kActDim> idx{};
    std::array<double, kActDim> want{};
    int n = 0;
    for (int j = 0; j < kActDim; ++j) {
      const int c = 3 + j;
      const double next = q[c] + m.sim_dt * qd[c];
      if (next < m.joint_lower[j] && qd[c] < 0.0) {
        idx[n] = c;
        want[n++] = (m.joint_lower[j] - q[c]) / m.sim_dt;
      } else if (next > m.joint_upper[j] && qd[c] > 0.0) {
        idx[n] = c;
        want[n++] = (m.joint_upper[j] - q[c]) / m.sim_dt;
      }
    }
    if (n == 0) return;
    Eigen::Matrix<double, kNumCoords, kActDim> cols =
        Eigen::Matrix<double, kNumCoords, kActDim>::Zero();
    for (int k = 0; k < n; ++k) {
      cols.col(k) = solver.solve(Coords::Unit(idx[k]));
    }
    Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
    Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
    for (int r = 0; r < n; ++r) {
      for (int k = 0; k < n; ++k) a(r, k) = cols(idx[r], k);
      rhs[r] = want[r] - qd[idx[r]];
    }
    const Eigen::Vector2d lambda = a.partialPivLu().solve(rhs);
    for (int k = 0; k < n; ++k) qd += cols.col(k) * lambda[k];
  }
}

struct SubstepResult {
  BodyForces forces = ZeroForces();
  Vec2 torques = Vec2::Zero();
};

SubstepResult Substep(const HopperModel& m, const Heightfield& hf,
                      const std::vector<ContactPoint>& points, const Vec2& target,
                      Coords& q, Coords& qd) {
  SubstepResult out;
  const LinkAngles la = ComputeLinkAngles(q, qd);
  const BodyKinematics b = EvalBodies(m, q, qd, la);
  const Mat55 mass = MassMatrix(m, b);
  const Eigen::LDLT<Mat55> solver(mass);

  Coords gen = Coords::Zero();
  const Vec2 g(0.0, -m.gravity);
  gen += b.torso.jac.transpose() * (m.torso_mass * (g - b.torso.bias));
  gen += b.thigh.jac.transpose() * (m.thigh_mass * (g - b.thigh.bias));
  gen += b.shank.jac.transpose() * (m.shank_mass * (g - b.shank.bias));

  for (int j = 0; j < kActDim; ++j) {
    const double tau = m.pd_kp * (target[j] - q[3 + j]) - m.pd_kd * qd[3 + j];
    out.torques[j] = std::clamp(tau, -m.torque_limit, m.torque_limit);
    gen[3 + j] += out.torques[j];
  }
  if (m.assist_spring) {
    gen[2] += -m.assist_stiffness * q[2] - m.assist_damping * qd[2];
  }

  struct Active {
    PointKinematics kin;
    double penetration;
    Body body;
  };
  std::vector<Active> active;
  for (const ContactPoint& cp : points) {
    PointKinematics pk = EvalPoint(
        q, qd, la, std::span<const Term>(cp.terms.data(), cp.num_terms));
    const double pen = Penetration(hf, pk, cp.radius);
    if (pen > 0.0) active.push_back({std::move(pk), pen, cp.body});
  }

  Coords qdd = solver.solve(gen);
  // Normal: F_z = max(0, k pen - c v_z) with v_z taken at the end of the
  // substep (implicit damping). Friction: the tangential force that stops
  // sliding by the end of the substep, limited by the Coulomb cone.
  for (const Active& c : active) {
    const Eigen::Matrix<double, 1, kNumCoords> jz = c.kin.jac.row(1);
    const Coords minv_jz = solver.solve(jz.transpose());
    const double wz = jz.dot(minv_jz);
    const double vz_free = jz.dot(qd + m.sim_dt * qdd);
    const double spring =
        m.contact_stiffness * std::min(c.penetration, m.max_penetration);
    const double fz = std::max(
        0.0, (spring - m.contact_damping * vz_free) /
                 (1.0 + m.contact_damping * m.sim_dt * wz));
    if (fz <= 0.0) continue;
    qdd += minv_jz * fz;

    const Eigen::Matrix<double, 1, kNumCoords> jx = c.kin.jac.row(0);
    const Coords minv_jx = solver.solve(jx.transpose());
    const double wx = jx.dot(minv_jx);
    const double vx_free = jx.dot(qd + m.sim_dt * qdd);
    const double limit = m.friction_coeff * fz;
    const double fx =
        std::clamp(wx > 0.0 ? -vx_free / (m.sim_dt * wx) : 0.0, -limit, limit);
    qdd += minv_jx * fx;
    out.forces[c.body] += Vec2(fx, fz);
  }

  qd += m.sim_dt * qdd;
  EnforceJointLimits(m, solver, q, qd);
  q += m.sim_dt * qd;
  for (int j = 0; j < kActDim; ++j) {
    q[3 + j] = std::clamp(q[3 + j], m.joint_lower[j], m.joint_upper[j]);
  }
  return out;
}

void Require(bool ok, const char* field) {
  if (!ok) {
    throw std::invalid_argument(std::string("invalid hopper model field '") +
                                field + "'");
  }
}

}  // namespace

void HopperModel::Validate() const {
  Require(torso_mass > 0 && thigh_mass > 0 && shank_mass > 0, "masses");
  Require(thigh_length > 0 && shank_length > 0 && torso_length > 0,
          "link_lengths");
  Require(torso_inertia > 0, "torso_inertia");
  Require(gravity >= 0, "gravity");
  Require(sim_dt > 0, "sim_dt");
  Require(control_decimation >= 1, "control_decimation");
  Require(pd_kp > 0 && pd_kd > 0, "pd_gains");
  Require(torque_limit > 0, "torque_limit");
  Require(friction_coeff > 0, "friction_coeff");
  Require(contact_stiffness > 0 && contact_damping > 0, "contact");
  Require(episode_horizon >= 1, "episode_horizon");
  for (int j = 0; j < kActDim; ++j) {
    Require(joint_lower[j] < joint_upper[j], "joint_limits");
    Require(q_default[j] >= joint_lower[j] && q_default[j] <= joint_upper[j],
            "q_default");
  }
}

ObsSpec ObsSpec::Proprio() { return ObsSpec{}; }

ObsSpec ObsSpec::TerrainAware() {
  ObsSpec spec;
  spec.mode = ObsMode::kTerrainAware;
  for (int k = 0; k < kHeightmapSamples; ++k) {
    spec.body_offsets.push_back(-0.35 + 0.05 * k);
    spec.foot_offsets.push_back(-0.175 + 0.025 * k);
  }
  spec.total_dim = spec.proprio_dim +
                   static_cast<int>(spec.body_offsets.size() +
                                    spec.foot_offsets.size());
  return spec;
}

bool ObsSpec::Consistent() const {
  if (proprio_dim != kProprioDim) return false;
  if (mode == ObsMode::kProprio) {
    return total_dim == proprio_dim && body_offsets.empty() &&
           foot_offsets.empty();
  }
  return total_dim == proprio_dim + static_cast<int>(body_offsets.size() +
                                                     foot_offsets.size());
}

std::string_view TerminationName(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kNone:
      return "none";
    case TerminationReason::kNonFootContact:
      return "non_foot_contact";
    case TerminationReason::kOutOfBounds:
      return "out_of_bounds";
    case TerminationReason::kTimeout:
      return "timeout";
  }
  return "unknown";
}

Vec2 GravityInBody(double pitch) {
  return Vec2(-std::sin(pitch), -std::cos(pitch));
}

double StandingHeight(const HopperModel& model) {
  const double a1 = model.q_default[0];
  const double a2 = a1 + model.q_default[1];
  return model.thigh_length * std::cos(a1) + model.shank_length * std::cos(a2) +
         model.foot_radius;
}

HopperState Reset(const HopperModel& model, const Heightfield& hf,
                  std::uint64_t seed) {
  Rng rng(seed);
  HopperState s;
  s.q[0] = hf.spawn_x;
  s.q[1] = HeightAt(hf, hf.spawn_x) + StandingHeight(model);
  s.q[2] = 0.0;
  for (int j = 0; j < kActDim; ++j) {
    s.q[3 + j] = std::clamp(
        model.q_default[j] + rng.Uniform(-model.reset_noise, model.reset_noise),
        model.joint_lower[j], model.joint_upper[j]);
  }
  const Vec2 q_default(model.q_default[0], model.q_default[1]);
  s.prev_action = q_default;
  s.prev_prev_action = q_default;
  return s;
}

StepResult Step(const HopperModel& model, const HopperState& state,
                const Heightfield& hf, std::span<const double> action,
                const Command& cmd) {
  if (state.terminated) {
    throw std::logic_error("step called on a terminated episode");
  }
  if (action.size() != static_cast<std::size_t>(kActDim)) {
    throw std::invalid_argument("action must have 2 entries");
  }
  for (const double a : action) {
    if (!std::isfinite(a)) throw std::invalid_argument("non-finite action");
  }
  static thread_local std::vector<ContactPoint> points;
  points = ContactPoints(model);

  StepResult r;
  HopperState& s = r.state;
  s = state;
  const Vec2 target(action[0], action[1]);
  const Vec2 joint_vel_before = state.joint_vel();
  StepInfo& info = r.info;

  SubstepResult sub;
  for (int k = 0; k < model.control_decimation; ++k) {
    sub = Substep(model, hf, points, target, s.q, s.qd);
    const bool past_goal = s.q[0] >= hf.goal_x || s.q[0] > hf.extent;
    int hit = -1;
    for (int b = kShank; b < kNumBodies; ++b) {
      if (sub.forces[b].y() > 0.0) {
        hit = b;
        break;
      }
    }
    if (past_goal) {
      info.reason = TerminationReason::kOutOfBounds;
    } else if (hit >= 0) {
      info.reason = TerminationReason::kNonFootContact;
      info.contact_body = static_cast<Body>(hit);
    }
    if (info.reason != TerminationReason::kNone) {
      info.termination_substep = k;
      break;
    }
  }

  s.torques = sub.torques;
  s.contact_forces = sub.forces;
  s.joint_acc = (s.joint_vel() - joint_vel_before) / model.ControlDt();
  s.prev_prev_action = state.prev_action;
  s.prev_action = target;
  s.step = state.step + 1;
  if (info.reason == TerminationReason::kNone &&
      s.step >= model.episode_horizon) {
    info.reason = TerminationReason::kTimeout;
  }
  info.terminated = info.reason != TerminationReason::kNone;
  s.terminated = info.terminated;

  const Vec2 foot = FootPosition(model, s);
  info.lin_vel = Vec2(s.qd[0], s.qd[1]);
  info.cmd_vx = cmd.vx;
  info.pitch_rate = s.qd[2];
  info.yaw_rate = 0.0;
  info.cmd_yaw_rate = cmd.yaw_rate;
  info.gravity_body = GravityInBody(s.pitch());
  info.g_target = model.g_target;
  info.torques = s.torques;
  info.joint_pos = s.joints();
  info.joint_vel = s.joint_vel();
  info.joint_acc = s.joint_acc;
  info.q_default = Vec2(model.q_default[0], model.q_default[1]);
  info.action = target;
  info.prev_action = state.prev_action;
  info.prev_prev_action = state.prev_prev_action;
  info.contact_forces = s.contact_forces;
  info.foot_contact = s.contact_forces[kFoot].y() > 0.0;
  info.foot_x = foot.x();
  info.edge_distance = DistanceToEdge(hf, foot.x());
  info.torso_x = s.x();
  info.spawn_x = hf.spawn_x;
  info.goal_x = hf.goal_x;
  return r;
}

Observation AssembleObs(const HopperModel& model, const HopperState& state,
                        const Heightfield& hf, const ObsSpec& spec,
                        const Command& cmd) {
  Observation obs(spec.total_dim);
  const Vec2 g = GravityInBody(state.pitch());
  obs << state.qd[2] * kRateScale, g.x(), g.y(), cmd.vx, cmd.yaw_rate,
      state.q[3], state.q[4], state.qd[3] * kRateScale,
      state.qd[4] * kRateScale, state.prev_action.x(), state.prev_action.y(),
      Eigen::VectorXd::Zero(spec.total_dim - kProprioDim);
  if (spec.mode == ObsMode::kTerrainAware) {
    int i = kProprioDim;
    for (const double h : SampleHeightmap(hf, state.x(), spec.body_offsets)) {
      obs[i++] = std::clamp(h, -kHeightmapClip, kHeightmapClip);
    }
    const double foot_x = FootPosition(model, state).x();
    for (const double h : SampleHeightmap(hf, foot_x, spec.foot_offsets)) {
      obs[i++] = std::clamp(h, -kHeightmapClip, kHeightmapClip);
    }
  }
  return obs;
}

double KineticEnergy(const HopperModel& model, const HopperState& state) {
  const LinkAngles la = ComputeLinkAngles(state.q, state.qd);
  const BodyKinematics b = EvalBodies(model, state.q, state.qd, la);
  return 0.5 * state.qd.dot(MassMatrix(model, b) * state.qd);
}

double PotentialEnergy(const HopperModel& model, const HopperState& state) {
  const LinkAngles la = ComputeLinkAngles(state.q, state.qd);
  const BodyKinematics b = EvalBodies(model, state.q, state.qd, la);
  return model.gravity *
         (model.torso_mass * b.torso.pos.y() + model.thigh_mass * b.thigh.pos.y() +
          model.shank_mass * b.shank.pos.y());
}

Vec2 FootPosition(const HopperModel& model, const HopperState& state) {
  const double a1 = state.q[2] + state.q[3];
  const double a2 = a1 + state.q[4];
  return Vec2(state.q[0] + model.thigh_length * std::sin(a1) +
                  model.shank_length * std::sin(a2),
              state.q[1] - model.thigh_length * std::cos(a1) -
                  model.shank_length * std::cos(a2));
}

Vec2 CenterOfMass(const HopperModel& model, const HopperState& state) {
  const LinkAngles la = ComputeLinkAngles(state.q, state.qd);
  const BodyKinematics b = EvalBodies(model, state.q, state.qd, la);
  return (model.torso_mass * b.torso.pos + model.thigh_mass * b.thigh.pos +
          model.shank_mass * b.shank.pos) /
         model.TotalMass();
}

HopperEnv::HopperEnv(HopperModel model, ObsSpec spec)
    : model_(std::move(model)), spec_(std::move(spec)) {
  model_.Validate();
  if (!spec_.Consistent()) throw std::invalid_argument("inconsistent ObsSpec");
}

const Observation& HopperEnv::Reset(Heightfield hf, std::uint64_t seed,
                                    Command cmd) {
  terrain_ = std::move(hf);
  cmd_ = cmd;
  state_ = jumper::Reset(model_, terrain_, seed);
  info_ = StepInfo{};
  obs_ = AssembleObs(model_, state_, terrain_, spec_, cmd_);
  return obs_;
}

const StepInfo& HopperEnv::Step(std::span<const double> action) {
  StepResult r = jumper::Step(model_, state_, terrain_, action, cmd_);
  state_ = r.state;
  info_ = r.info;
  obs_ = AssembleObs(model_, state_, terrain_, spec_, cmd_);
  return info_;
}

std::string TrajectoryCsvHeader() {
  return "t,x,z,pitch,hip,knee,contacts,reward\n";
}

std::string TrajectoryCsvRow(const HopperState& state, const StepInfo& info,
                             double reward) {
  int mask = 0;
  for (int b = 0; b < kNumBodies; ++b) {
    if (info.contact_forces[b].y() > 0.0) mask |= 1 << b;
  }
  char line[256];
  std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%.6f\n",
                state.step, state.x(), state.z(), state.pitch(), state.q[3],
                state.q[4], mask, reward);
  return line;
}

}  // namespace jumper
