#ifndef JUMPER_HOPPER_H_
#define JUMPER_HOPPER_H_

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jumper/terrain.h"

namespace jumper {

inline constexpr int kActDim = 2;
inline constexpr int kNumCoords = 5;  // x, z, pitch, hip, knee
inline constexpr int kProprioDim = 11;
inline constexpr int kHeightmapSamples = 16;

using Vec2 = Eigen::Vector2d;
using Coords = Eigen::Matrix<double, kNumCoords, 1>;
using Observation = Eigen::VectorXd;

enum Body : int { kFoot = 0, kShank = 1, kThigh = 2, kTorso = 3 };
inline constexpr int kNumBodies = 4;

using BodyForces = std::array<Vec2, kNumBodies>;

inline BodyForces ZeroForces() {
  BodyForces f;
  f.fill(Vec2::Zero());
  return f;
}

// Planar monoped: torso with the hip at its center, thigh, shank, round foot
// at the shank tip. Joint angles are relative; the absolute thigh angle is
// pitch + hip and is measured from the downward vertical.
struct HopperModel {
  double torso_mass = 3.0;
  double thigh_mass = 0.5;
  double shank_mass = 0.3;
  double thigh_length = 0.22;
  double shank_length = 0.22;
  double torso_length = 0.36;
  double torso_inertia = 0.25;
  double foot_radius = 0.02;
  double gravity = 9.81;
  double sim_dt = 0.005;
  int control_decimation = 4;
  double pd_kp = 30.0;
  double pd_kd = 1.0;
  double torque_limit = 23.5;
  std::array<double, kActDim> joint_lower = {-1.5, -2.6};
  std::array<double, kActDim> joint_upper = {2.0, 0.0};
  std::array<double, kActDim> q_default = {0.53, -1.0};
  Vec2 g_target = Vec2(0.0, -1.0);
  double friction_coeff = 0.8;
  double contact_stiffness = 5000.0;
  double contact_damping = 100.0;
  // Penetration used for the spring force saturates here (heightfield walls).
  double max_penetration = 0.1;
  // Torso-assist spring: world-anchored rotational spring on torso pitch.
  bool assist_spring = false;
  double assist_stiffness = 60.0;
  double assist_damping = 6.0;
  int episode_horizon = 1000;
  double reset_noise = 0.05;

  double ControlDt() const { return sim_dt * control_decimation; }
  double TotalMass() const { return torso_mass + thigh_mass + shank_mass; }
  // Throws std::invalid_argument naming the first bad field.
  void Validate() const;
};

struct HopperState {
  Coords q = Coords::Zero();
  Coords qd = Coords::Zero();
  Vec2 joint_acc = Vec2::Zero();
  Vec2 torques = Vec2::Zero();
  Vec2 prev_action = Vec2::Zero();       // a_{t-1}
  Vec2 prev_prev_action = Vec2::Zero();  // a_{t-2}
  BodyForces contact_forces = ZeroForces();
  int step = 0;
  bool terminated = false;

  double x() const { return q[0]; }
  double z() const { return q[1]; }
  double pitch() const { return q[2]; }
  Vec2 joints() const { return q.tail<2>(); }
  Vec2 joint_vel() const { return qd.tail<2>(); }
};

enum class ObsMode { kProprio, kTerrainAware };

struct ObsSpec {
  ObsMode mode = ObsMode::kProprio;
  int proprio_dim = kProprioDim;
  std::vector<double> body_offsets;
  std::vector<double> foot_offsets;
  int total_dim = kProprioDim;

  static ObsSpec Proprio();
  static ObsSpec TerrainAware();
  bool Consistent() const;
  bool operator==(const ObsSpec&) const = default;
};

struct Command {
  double vx = 0.0;
  double yaw_rate = 0.0;
};

enum class TerminationReason { kNone, kNonFootContact, kOutOfBounds, kTimeout };

std::string_view TerminationName(TerminationReason reason);

// Operands of every reward term, captured after a control step.
struct StepInfo {
  Vec2 lin_vel = Vec2::Zero();  // torso (v_x, v_z)
  double cmd_vx = 0.0;
  double pitch_rate = 0.0;
  double yaw_rate = 0.0;  // always 0 in the plane
  double cmd_yaw_rate = 0.0;
  Vec2 gravity_body = Vec2(0.0, -1.0);
  Vec2 g_target = Vec2(0.0, -1.0);
  Vec2 torques = Vec2::Zero();
  Vec2 joint_pos = Vec2::Zero();
  Vec2 joint_vel = Vec2::Zero();
  Vec2 joint_acc = Vec2::Zero();
  Vec2 q_default = Vec2::Zero();
  Vec2 action = Vec2::Zero();
  Vec2 prev_action = Vec2::Zero();
  Vec2 prev_prev_action = Vec2::Zero();
  BodyForces contact_forces = ZeroForces();
  bool foot_contact = false;
  double foot_x = 0.0;
  double edge_distance = 0.0;
  double torso_x = 0.0;
  double spawn_x = 0.0;
  double goal_x = 0.0;
  bool terminated = false;
  TerminationReason reason = TerminationReason::kNone;
  Body contact_body = kFoot;  // meaningful for kNonFootContact
  int termination_substep = -1;
};

struct StepResult {
  HopperState state;
  StepInfo info;
};

// Torso height above the ground at q_default, foot resting on flat ground.
double StandingHeight(const HopperModel& model);

// Joints at q_default plus seeded uniform noise; torso upright over spawn_x.
HopperState Reset(const HopperModel& model, const Heightfield& hf,
                  std::uint64_t seed);

// One control step of control_decimation physics substeps. Throws
// std::invalid_argument on a non-finite action and std::logic_error when
// the state is already terminated.
StepResult Step(const HopperModel& model, const HopperState& state,
                const Heightfield& hf, std::span<const double> action,
                const Command& cmd = {});

Observation AssembleObs(const HopperModel& model, const HopperState& state,
                        const Heightfield& hf, const ObsSpec& spec,
                        const Command& cmd);

// Gravity direction expressed in the torso frame.
Vec2 GravityInBody(double pitch);

double KineticEnergy(const HopperModel& model, const HopperState& state);
double PotentialEnergy(const HopperModel& model, const HopperState& state);
Vec2 FootPosition(const HopperModel& model, const HopperState& state);
Vec2 CenterOfMass(const HopperModel& model, const HopperState& state);

// Convenience owner of one environment instance.
class HopperEnv {
 public:
  HopperEnv(HopperModel model, ObsSpec spec);

  const Observation& Reset(Heightfield hf, std::uint64_t seed, Command cmd);
  const StepInfo& Step(std::span<const double> action);

  const HopperModel& model() const { return model_; }
  HopperModel& mutable_model() { return model_; }
  const ObsSpec& spec() const { return spec_; }
  const HopperState& state() const { return state_; }
  const Heightfield& terrain() const { return terrain_; }
  const Observation& obs() const { return obs_; }
  const StepInfo& last_info() const { return info_; }
  const Command& command() const { return cmd_; }

 private:
  HopperModel model_;
  ObsSpec spec_;
  Heightfield terrain_;
  HopperState state_;
  Observation obs_;
  StepInfo info_;
  Command cmd_;
};

// Debug trajectory rows: t,x,z,pitch,hip,knee,contacts,reward.
std::string TrajectoryCsvHeader();
std::string TrajectoryCsvRow(const HopperState& state, const StepInfo& info,
                             double reward);

}  // namespace jumper

#endif  // JUMPER_HOPPER_H_
