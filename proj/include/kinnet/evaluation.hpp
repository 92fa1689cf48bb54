#pragma once

#include "kinnet/dataset.hpp"
#include "kinnet/motion.hpp"

#include <json.hpp>

#include <array>
#include <limits>
#include <string>
#include <vector>

namespace kinnet {

// Mean over frames and joints of the squared world-position error, with
// positions divided by `height` (the target character's T-pose height).
double mse(const MotionClip& prediction, const MotionClip& truth, double height);
inline double mse(const MotionClip& prediction, const MotionClip& truth) {
  return mse(prediction, truth, truth.skeleton.height());
}

// Height-normalized movement: for every joint the temporal variance of its
// world position (summed over x, y, z), averaged over joints.
double movement_variance(const MotionClip& clip, double height);

inline constexpr std::array<double, 6> kVarianceBinEdges = {
    0.0, 2.5, 5.0, 10.0, 20.0, std::numeric_limits<double>::infinity()};
// Index of the half-open bin [edge_i, edge_{i+1}) holding `variance`.
int variance_bin(double variance);

struct ClipScore {
  std::string id;
  std::string scenario;
  double mse = 0.0;
  double variance = 0.0;
  int bin = 0;
};

struct EvalReport {
  std::vector<ClipScore> clips;

  struct Group {
    std::string label;
    int count = 0;
    double mean_mse = 0.0;
  };

  double mean_mse() const;
  std::vector<Group> by_scenario() const;
  std::vector<Group> by_variance_bin() const;

  nlohmann::json to_json(bool bins = true) const;
  std::string table(bool bins = true) const;
};

ClipScore score_clip(const std::string& id, const MotionClip& prediction,
                     const MotionClip& truth);

// Per-frame local positions of the end effectors (hands, feet, toes).
struct EndEffectorTrack {
  std::vector<std::string> joints;
  std::vector<std::vector<Vec3>> frames;  // frames[t][k]
};
EndEffectorTrack end_effectors(const MotionClip& clip);
// Header: frame then <joint>.x, <joint>.y, <joint>.z per end effector.
std::string write_end_effector_csv(const EndEffectorTrack& track);
EndEffectorTrack parse_end_effector_csv(const std::string& text);

// Sum over t of |y_{t+1} - y_t| for the height (y) of end effector k.
double height_total_variation(const EndEffectorTrack& track, std::size_t k);

}  // namespace kinnet
