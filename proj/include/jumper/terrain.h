#ifndef JUMPER_TERRAIN_H_
#define JUMPER_TERRAIN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jumper {

enum class TerrainKind { kFlat, kRoughGround, kSlopeStairs, kWideGap, kSteppingStone };

inline constexpr int kNumTerrainKinds = 5;
inline constexpr int kMaxLevel = 9;

// Generator constants.
inline constexpr double kDefaultResolution = 0.05;
inline constexpr double kEdgeThreshold = 0.05;
inline constexpr double kPitDepth = 1.0;
inline constexpr double kNoiseStep = 0.02;
inline constexpr double kStairWidth = 0.3;
inline constexpr double kSlopePlatformWidth = 2.0;
inline constexpr double kStairPlatformWidth = 3.0;
inline constexpr double kGapPlatformWidth = 1.0;
inline constexpr double kFlatPlatformWidth = 1.0;
inline constexpr double kStoneGapJitter = 0.2;

std::string_view TerrainKindName(TerrainKind kind);
// Accepts the names returned by TerrainKindName (case-insensitive).
TerrainKind ParseTerrainKind(std::string_view name);

// Lengths in meters. Fields that do not apply to a kind are zero.
struct TerrainParams {
  double slope_grade = 0.0;
  double stair_height = 0.0;
  double stair_width = 0.0;
  double noise_amplitude = 0.0;
  double gap_width = 0.0;
  double stone_size = 0.0;
  double stone_gap = 0.0;
  double platform_width = 0.0;
  double pit_depth = 0.0;

  bool operator==(const TerrainParams&) const = default;
};

// Elevation profile sampled at x_i = i * resolution.
struct Heightfield {
  TerrainKind kind = TerrainKind::kFlat;
  int level = 0;
  double resolution = kDefaultResolution;
  std::vector<double> heights;
  double extent = 0.0;
  double goal_x = 0.0;
  double spawn_x = 0.0;
  double platform_width = 0.0;
  double pit_depth = 0.0;
  // Cell indices i with |heights[i] - heights[i-1]| >= kEdgeThreshold.
  std::vector<std::size_t> edges;

  // x position of the discontinuity preceding cell i.
  double EdgeX(std::size_t i) const {
    return (static_cast<double>(i) - 0.5) * resolution;
  }
};

// Throws std::invalid_argument when level is outside [0, 9].
TerrainParams LevelParams(TerrainKind kind, int level);

// Smallest extent accepted by Generate for this kind and level.
double MinExtent(TerrainKind kind, int level);

// Deterministic in (kind, level, seed, extent, resolution). Throws
// std::invalid_argument when the extent is too small or the level invalid.
Heightfield Generate(TerrainKind kind, int level, std::uint64_t seed,
                     double extent, double resolution = kDefaultResolution);

// Interpolated height; step semantics across edge cells; x clamped to the
// field.
double HeightAt(const Heightfield& hf, double x);

// Heights at center_x + o relative to the height at center_x.
std::vector<double> SampleHeightmap(const Heightfield& hf, double center_x,
                                    std::span<const double> offsets);

// Distance from x to the nearest edge; +inf when the field has none.
double DistanceToEdge(const Heightfield& hf, double x);

// Empty string when every type invariant holds, otherwise a description of
// the first violation.
std::string CheckInvariants(const Heightfield& hf);

// Plain-text profile: two comment header lines then "x height" rows.
std::string RenderProfile(const Heightfield& hf);

}  // namespace jumper

#endif  // JUMPER_TERRAIN_H_
