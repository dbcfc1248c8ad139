#include "jumper/reward.h"

#include <cmath>

namespace jumper {
namespace {

constexpr std::array<std::string_view, kNumRewardTerms> kTermNames = {
    "track_lin_vel", "track_ang_vel",     "termination", "out_bound",
    "out_platform",  "reach_far",         "lin_vel_z",   "ang_vel_xy",
    "orientation",   "joint_torques",     "action_rate", "action_smoothness",
    "joint_power",   "joint_acc",         "joint_deviation",
    "collision",     "stumble",           "feet_edge"};

double Indicator(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

std::string_view RewardTermName(int term) {
  if (term < 0 || term >= kNumRewardTerms) return "unknown";
  return kTermNames[term];
}

std::string_view ObjectiveModeName(ObjectiveMode mode) {
  return mode == ObjectiveMode::kVelocityTracking ? "velocity_tracking"
                                                  : "goal_reaching";
}

RewardBreakdown ComputeReward(const StepInfo& info, const RewardWeights& weights,
                              ObjectiveMode mode, const RewardOptions& options) {
  RewardBreakdown b;
  auto& r = b.raw;
  const bool goal = mode == ObjectiveMode::kGoalReaching;

  // Overspeed past the command is not punished.
  const double lin_err = std::min(info.lin_vel.x(), info.cmd_vx) - info.cmd_vx;
  r[kTrackLinVel] = std::exp(-lin_err * lin_err / options.tracking_sigma);
  const double yaw_err = info.yaw_rate - info.cmd_yaw_rate;
  r[kTrackAngVel] = std::exp(-yaw_err * yaw_err / options.tracking_sigma);

  r[kTermination] =
      Indicator(info.reason == TerminationReason::kNonFootContact);
  r[kOutBound] = Indicator(info.reason == TerminationReason::kOutOfBounds);
  r[kOutPlatform] = Indicator(std::abs(info.torso_x - info.spawn_x) >
                              options.out_platform_radius);
  const double origin = options.reach_far_frame == ReachFarFrame::kFromGoal
                            ? info.goal_x
                            : info.spawn_x;
  r[kReachFar] = std::exp(-std::abs(info.torso_x - origin));

  r[kLinVelZ] = info.lin_vel.y() * info.lin_vel.y();
  r[kAngVelXY] = info.pitch_rate * info.pitch_rate;
  r[kOrientation] = (info.gravity_body - info.g_target).squaredNorm();

  r[kJointTorques] = info.torques.squaredNorm();
  r[kActionRate] = (info.action - info.prev_action).squaredNorm();
  r[kActionSmoothness] =
      (info.action - 2.0 * info.prev_action + info.prev_prev_action)
          .squaredNorm();
  r[kJointPower] = info.torques.cwiseProduct(info.joint_vel).cwiseAbs().sum();
  r[kJointAcc] = info.joint_acc.squaredNorm();
  r[kJointDeviation] = (info.joint_pos - info.q_default).squaredNorm();

  double collisions = 0.0;
  bool stumble = false;
  for (int body = 0; body < kNumBodies; ++body) {
    const Vec2& f = info.contact_forces[body];
    if (body != kFoot) {
      collisions += Indicator(f.norm() > options.collision_threshold);
    }
    stumble = stumble || std::abs(f.x()) > options.stumble_ratio * std::abs(f.y());
  }
  r[kCollision] = collisions;
  r[kStumble] = Indicator(stumble);
  r[kFeetEdge] = info.foot_contact
                     ? std::exp(-info.edge_distance / options.edge_length_scale)
                     : 0.0;

  for (int t = 0; t < kNumRewardTerms; ++t) {
    bool active = true;
    if (t == kTrackLinVel || t == kTrackAngVel) active = !goal;
    if (t == kOutBound || t == kOutPlatform || t == kReachFar) active = goal;
    b.weighted[t] = active ? weights[t] * r[t] : 0.0;
    b.total += b.weighted[t];
  }
  return b;
}

}  // namespace jumper
