#include "jumper/terrain.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "jumper/rng.h"

namespace jumper {
namespace {

constexpr double kEdgeTolerance = 1e-9;

struct StoneAnchor {
  int level;
  double gap;
  double stone_size;
  double stone_gap;
};

// Stepping-stone curriculum rows; levels between rows are interpolated.
constexpr StoneAnchor kStoneAnchors[] = {
    {0, 0.10, 0.50, 0.05},
    {5, 0.35, 0.25, 0.15},
    {9, 0.60, 0.125, 0.25},
};

void CheckLevel(int level) {
  if (level < 0 || level > kMaxLevel) {
    throw std::invalid_argument("terrain level must be in [0, 9], got " +
                                std::to_string(level));
  }
}

double LevelFraction(int level) {
  return static_cast<double>(level) / static_cast<double>(kMaxLevel);
}

std::size_t Cells(double length, double resolution) {
  return static_cast<std::size_t>(std::lround(length / resolution));
}

double TrailingPlatformWidth(TerrainKind kind, const TerrainParams& p) {
  return kind == TerrainKind::kSlopeStairs ? kStairPlatformWidth
                                           : p.platform_width;
}

bool IsEdge(double a, double b) {
  return std::abs(b - a) >= kEdgeThreshold - kEdgeTolerance;
}

void FillRough(Heightfield& hf, const TerrainParams& p, Rng& rng) {
  const std::size_t begin = Cells(p.platform_width, hf.resolution);
  const std::size_t end = Cells(hf.extent - p.platform_width, hf.resolution);
  const double a = p.noise_amplitude;
  for (std::size_t i = begin; i < end && i < hf.heights.size(); ++i) {
    const double u = rng.Uniform(-a, a);
    double q = kNoiseStep * std::round(u / kNoiseStep);
    if (std::abs(q) > a + kEdgeTolerance) q -= std::copysign(kNoiseStep, q);
    hf.heights[i] = q;
  }
}

void FillSlopeStairs(Heightfield& hf, const TerrainParams& p) {
  const double res = hf.resolution;
  const double x0 = p.platform_width;
  const double x2 = hf.extent - kStairPlatformWidth;
  const double x1 = x0 + 0.5 * (x2 - x0);
  const double h1 = p.slope_grade * (x1 - x0);
  const int steps =
      static_cast<int>(std::ceil((x2 - x1) / p.stair_width - kEdgeTolerance));
  for (std::size_t i = 0; i < hf.heights.size(); ++i) {
    const double x = static_cast<double>(i) * res;
    if (x < x0) {
      hf.heights[i] = 0.0;
    } else if (x < x1) {
      hf.heights[i] = p.slope_grade * (x - x0);
    } else if (x < x2) {
      const int k = static_cast<int>(std::floor((x - x1) / p.stair_width)) + 1;
      hf.heights[i] = h1 + k * p.stair_height;
    } else {
      hf.heights[i] = h1 + steps * p.stair_height;
    }
  }
}

void FillPit(Heightfield& hf, std::size_t begin, std::size_t count) {
  const std::size_t end = std::min(begin + count, hf.heights.size());
  for (std::size_t i = begin; i < end; ++i) hf.heights[i] = -hf.pit_depth;
}

void FillWideGap(Heightfield& hf, const TerrainParams& p) {
  const double start = 0.5 * hf.extent - 0.5 * p.gap_width;
  FillPit(hf, Cells(start, hf.resolution), Cells(p.gap_width, hf.resolution));
}

void FillSteppingStones(Heightfield& hf, const TerrainParams& p, Rng& rng) {
  const double res = hf.resolution;
  const std::size_t gap_cells = std::max<std::size_t>(1, Cells(p.gap_width, res));
  const std::size_t stone_cells =
      std::max<std::size_t>(1, Cells(p.stone_size, res));
  const std::size_t trailing = Cells(hf.extent - p.platform_width, res);
  const std::size_t stones_end = trailing - gap_cells;

  std::size_t i = Cells(p.platform_width, res);
  FillPit(hf, i, gap_cells);
  i += gap_cells;
  while (i + stone_cells <= stones_end) {
    i += stone_cells;
    const double jitter = rng.Uniform(-kStoneGapJitter, kStoneGapJitter);
    const std::size_t pit_cells = std::max<std::size_t>(
        1, Cells(p.stone_gap * (1.0 + jitter), res));
    if (i + pit_cells + stone_cells > stones_end) break;
    FillPit(hf, i, pit_cells);
    i += pit_cells;
  }
  // Leftover length extends the trailing platform.
  FillPit(hf, i, gap_cells);
}

}  // namespace

std::string_view TerrainKindName(TerrainKind kind) {
  switch (kind) {
    case TerrainKind::kFlat:
      return "flat";
    case TerrainKind::kRoughGround:
      return "rough";
    case TerrainKind::kSlopeStairs:
      return "stairs";
    case TerrainKind::kWideGap:
      return "gap";
    case TerrainKind::kSteppingStone:
      return "stones";
  }
  return "unknown";
}

TerrainKind ParseTerrainKind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (int k = 0; k < kNumTerrainKinds; ++k) {
    const auto kind = static_cast<TerrainKind>(k);
    if (lower == TerrainKindName(kind)) return kind;
  }
  if (lower == "roughground") return TerrainKind::kRoughGround;
  if (lower == "slopestairs") return TerrainKind::kSlopeStairs;
  if (lower == "widegap") return TerrainKind::kWideGap;
  if (lower == "steppingstone") return TerrainKind::kSteppingStone;
  throw std::invalid_argument("unknown terrain kind '" + std::string(name) +
                              "'");
}

TerrainParams LevelParams(TerrainKind kind, int level) {
  CheckLevel(level);
  const double t = LevelFraction(level);
  TerrainParams p;
  switch (kind) {
    case TerrainKind::kFlat:
      p.platform_width = kFlatPlatformWidth;
      break;
    case TerrainKind::kRoughGround:
      p.noise_amplitude = std::lerp(0.02, 0.1, t);
      p.platform_width = kFlatPlatformWidth;
      break;
    case TerrainKind::kSlopeStairs:
      p.slope_grade = std::lerp(0.0, 0.2, t);
      p.stair_height = std::lerp(0.05, 0.2, t);
      p.stair_width = kStairWidth;
      p.platform_width = kSlopePlatformWidth;
      break;
    case TerrainKind::kWideGap:
      p.gap_width = std::lerp(0.10, 0.60, t);
      p.platform_width = kGapPlatformWidth;
      p.pit_depth = kPitDepth;
      break;
    case TerrainKind::kSteppingStone: {
      const StoneAnchor* lo = &kStoneAnchors[0];
      const StoneAnchor* hi = &kStoneAnchors[1];
      if (level > kStoneAnchors[1].level) {
        lo = &kStoneAnchors[1];
        hi = &kStoneAnchors[2];
      }
      const double s = static_cast<double>(level - lo->level) /
                       static_cast<double>(hi->level - lo->level);
      p.gap_width = std::lerp(lo->gap, hi->gap, s);
      p.stone_size = std::lerp(lo->stone_size, hi->stone_size, s);
      p.stone_gap = std::lerp(lo->stone_gap, hi->stone_gap, s);
      p.platform_width = kGapPlatformWidth;
      p.pit_depth = kPitDepth;
      break;
    }
  }
  return p;
}

double MinExtent(TerrainKind kind, int level) {
  const TerrainParams p = LevelParams(kind, level);
  double min_extent = 2.0 * p.platform_width + 1.0;
  if (kind == TerrainKind::kSlopeStairs) {
    min_extent = std::max(min_extent,
                          p.platform_width + kStairPlatformWidth + 1.0);
  }
  if (kind == TerrainKind::kSteppingStone) {
    min_extent = std::max(min_extent, 2.0 * p.platform_width +
                                          2.0 * p.gap_width + p.stone_size +
                                          kDefaultResolution);
  }
  return min_extent;
}

Heightfield Generate(TerrainKind kind, int level, std::uint64_t seed,
                     double extent, double resolution) {
  CheckLevel(level);
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("terrain resolution must be positive");
  }
  const double min_extent = MinExtent(kind, level);
  if (!(extent >= min_extent - kEdgeTolerance)) {
    std::ostringstream msg;
    msg << "terrain extent " << extent << " m is below the minimum "
        << min_extent << " m for " << TerrainKindName(kind);
    throw std::invalid_argument(msg.str());
  }
  const TerrainParams p = LevelParams(kind, level);

  Heightfield hf;
  hf.kind = kind;
  hf.level = level;
  hf.resolution = resolution;
  hf.extent = extent;
  hf.platform_width = p.platform_width;
  hf.pit_depth = p.pit_depth;
  hf.heights.assign(Cells(extent, resolution) + 1, 0.0);
  hf.spawn_x = 0.5 * p.platform_width;
  hf.goal_x = extent - 0.5 * TrailingPlatformWidth(kind, p);

  Rng rng(seed ^ (static_cast<std::uint64_t>(kind) << 56) ^
          (static_cast<std::uint64_t>(level) << 48));
  switch (kind) {
    case TerrainKind::kFlat:
      break;
    case TerrainKind::kRoughGround:
      FillRough(hf, p, rng);
      break;
    case TerrainKind::kSlopeStairs:
      FillSlopeStairs(hf, p);
      break;
    case TerrainKind::kWideGap:
      FillWideGap(hf, p);
      break;
    case TerrainKind::kSteppingStone:
      FillSteppingStones(hf, p, rng);
      break;
  }

  for (std::size_t i = 1; i < hf.heights.size(); ++i) {
    if (IsEdge(hf.heights[i - 1], hf.heights[i])) hf.edges.push_back(i);
  }
  return hf;
}

double HeightAt(const Heightfield& hf, double x) {
  const std::size_t n = hf.heights.size();
  if (n == 0) return 0.0;
  const double last_x = static_cast<double>(n - 1) * hf.resolution;
  x = std::clamp(x, 0.0, last_x);
  const double u = x / hf.resolution;
  const auto i = static_cast<std::size_t>(std::floor(u));
  if (i + 1 >= n) return hf.heights[n - 1];
  const double frac = u - static_cast<double>(i);
  const double a = hf.heights[i];
  const double b = hf.heights[i + 1];
  if (IsEdge(a, b)) return frac < 0.5 ? a : b;
  return a + frac * (b - a);
}

std::vector<double> SampleHeightmap(const Heightfield& hf, double center_x,
                                    std::span<const double> offsets) {
  const double base = HeightAt(hf, center_x);
  std::vector<double> out;
  out.reserve(offsets.size());
  for (const double o : offsets) out.push_back(HeightAt(hf, center_x + o) - base);
  return out;
}

double DistanceToEdge(const Heightfield& hf, double x) {
  if (hf.edges.empty()) return std::numeric_limits<double>::infinity();
  // Edge positions are increasing in the cell index.
  const auto it = std::lower_bound(
      hf.edges.begin(), hf.edges.end(), x,
      [&hf](std::size_t idx, double value) { return hf.EdgeX(idx) < value; });
  double best = std::numeric_limits<double>::infinity();
  if (it != hf.edges.end()) best = std::abs(hf.EdgeX(*it) - x);
  if (it != hf.edges.begin()) {
    best = std::min(best, std::abs(hf.EdgeX(*std::prev(it)) - x));
  }
  return best;
}

std::string CheckInvariants(const Heightfield& hf) {
  const double res = hf.resolution;
  const double n = static_cast<double>(hf.heights.size());
  if (std::abs(n * res - hf.extent) > res + kEdgeTolerance) {
    return "heights length does not match the extent";
  }
  if (hf.goal_x < 0.0 || hf.goal_x > hf.extent) return "goal_x outside field";
  if (!(HeightAt(hf, hf.goal_x) > -kPitDepth + 0.01)) {
    return "goal_x is not on solid ground";
  }
  // Spawn platform: every sample inside [spawn - w/2, spawn + w/2] is level.
  const double lo = hf.spawn_x - 0.5 * hf.platform_width;
  const double hi = hf.spawn_x + 0.5 * hf.platform_width;
  if (lo < -kEdgeTolerance) return "spawn platform starts before the field";
  const double h0 = HeightAt(hf, hf.spawn_x);
  for (std::size_t i = 0; i < hf.heights.size(); ++i) {
    const double x = static_cast<double>(i) * res;
    if (x >= lo && x <= hi - 0.5 * res && hf.heights[i] != h0) {
      return "spawn platform is not flat";
    }
  }
  std::size_t expected = 0;
  for (std::size_t i = 1; i < hf.heights.size(); ++i) {
    if (IsEdge(hf.heights[i - 1], hf.heights[i])) {
      if (expected >= hf.edges.size() || hf.edges[expected] != i) {
        return "edge list does not match the discontinuities";
      }
      ++expected;
    }
  }
  if (expected != hf.edges.size()) return "edge list has extra entries";
  return {};
}

std::string RenderProfile(const Heightfield& hf) {
  std::string out;
  char line[128];
  out += "# resolution extent goal_x spawn_x\n";
  std::snprintf(line, sizeof(line), "# %.6f %.6f %.6f %.6f\n", hf.resolution,
                hf.extent, hf.goal_x, hf.spawn_x);
  out += line;
  for (std::size_t i = 0; i < hf.heights.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.6f %.6f\n",
                  static_cast<double>(i) * hf.resolution, hf.heights[i]);
    out += line;
  }
  return out;
}

}  // namespace jumper
