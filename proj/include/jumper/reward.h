#ifndef JUMPER_REWARD_H_
#define JUMPER_REWARD_H_

#include <array>
#include <string_view>

#include "jumper/hopper.h"

namespace jumper {

enum RewardTerm : int {
  kTrackLinVel = 0,
  kTrackAngVel,
  kTermination,
  kOutBound,
  kOutPlatform,
  kReachFar,
  kLinVelZ,
  kAngVelXY,
  kOrientation,
  kJointTorques,
  kActionRate,
  kActionSmoothness,
  kJointPower,
  kJointAcc,
  kJointDeviation,
  kCollision,
  kStumble,
  kFeetEdge,
};

inline constexpr int kNumRewardTerms = 18;

std::string_view RewardTermName(int term);

struct RewardWeights {
  std::array<double, kNumRewardTerms> w = {
      1.5,      0.5,    -200.0, 200.0, 10.0,  -0.5,    -0.5, -0.05, -1.0,
      -1.0e-5, -0.01,  -0.01,  -2.0e-5, -2.5e-7, -0.01, -10.0, -1.0, -1.0};

  double& operator[](int term) { return w[term]; }
  double operator[](int term) const { return w[term]; }
  bool operator==(const RewardWeights&) const = default;
};

enum class ObjectiveMode { kVelocityTracking, kGoalReaching };

// Frame of the x displacement inside reach_far.
enum class ReachFarFrame { kFromGoal, kFromSpawn };

struct RewardOptions {
  ReachFarFrame reach_far_frame = ReachFarFrame::kFromGoal;
  double out_platform_radius = 3.0;
  double collision_threshold = 0.1;
  double stumble_ratio = 4.0;
  double edge_length_scale = 0.05;
  double tracking_sigma = 0.25;
};

struct RewardBreakdown {
  std::array<double, kNumRewardTerms> raw{};
  std::array<double, kNumRewardTerms> weighted{};
  double total = 0.0;
};

RewardBreakdown ComputeReward(const StepInfo& info, const RewardWeights& weights,
                              ObjectiveMode mode,
                              const RewardOptions& options = {});

std::string_view ObjectiveModeName(ObjectiveMode mode);

}  // namespace jumper

#endif  // JUMPER_REWARD_H_
