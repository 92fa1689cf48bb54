#include "kinnet/evaluation.hpp"

#include "kinnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace kinnet {

double mse(const MotionClip& prediction, const MotionClip& truth, double height) {
  if (prediction.length() != truth.length()) {
    throw Error("clip lengths differ: " + std::to_string(prediction.length()) + " vs " +
                std::to_string(truth.length()));
  }
  if (prediction.skeleton.size() != truth.skeleton.size()) {
    throw Error("joint counts differ");
  }
  if (!(height > 0.0)) {
    throw Error("height must be positive");
  }
  const auto a = world_positions(prediction);
  const auto b = world_positions(truth);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t j = 0; j < a[t].size(); ++j) {
      sum += ((a[t][j] - b[t][j]) / height).squaredNorm();
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

double movement_variance(const MotionClip& clip, double height) {
  const auto p = world_positions(clip);
  const std::size_t T = p.size();
  const std::size_t N = clip.skeleton.size();
  double total = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    // Shifted by the first frame, so a static joint gives exactly 0.
    Vec3 mean = Vec3::Zero();
    double sq = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const Vec3 d = (p[t][j] - p[0][j]) / height;
      mean += d;
      sq += d.squaredNorm();
    }
    mean /= static_cast<double>(T);
    total += std::max(0.0, sq / static_cast<double>(T) - mean.squaredNorm());
  }
  return total / static_cast<double>(N);
}

int variance_bin(double variance) {
  if (!(variance >= 0.0)) {
    throw NumericError("variance must be a non-negative number");
  }
  for (std::size_t i = 1; i < kVarianceBinEdges.size(); ++i) {
    if (variance < kVarianceBinEdges[i]) return static_cast<int>(i - 1);
  }
  return static_cast<int>(kVarianceBinEdges.size() - 2);
}

ClipScore score_clip(const std::string& id, const MotionClip& prediction,
                     const MotionClip& truth) {
  ClipScore s;
  s.id = id;
  s.scenario = truth.info.scenario;
  s.mse = mse(prediction, truth);
  s.variance = movement_variance(truth, truth.skeleton.height());
  s.bin = variance_bin(s.variance);
  return s;
}

double EvalReport::mean_mse() const {
  if (clips.empty()) return 0.0;
  double s = 0.0;
  for (const ClipScore& c : clips) s += c.mse;
  return s / static_cast<double>(clips.size());
}

namespace {

std::string bin_label(int i) {
  char buf[64];
  const double hi = kVarianceBinEdges[i + 1];
  if (std::isinf(hi)) {
    std::snprintf(buf, sizeof buf, "[%g, inf)", kVarianceBinEdges[i]);
  } else {
    std::snprintf(buf, sizeof buf, "[%g, %g)", kVarianceBinEdges[i], hi);
  }
  return buf;
}

}  // namespace

std::vector<EvalReport::Group> EvalReport::by_scenario() const {
  std::map<std::string, Group> groups;
  for (const ClipScore& c : clips) {
    Group& g = groups[c.scenario];
    g.label = c.scenario;
    g.count++;
    g.mean_mse += c.mse;
  }
  std::vector<Group> out;
  for (auto& [_, g] : groups) {
    g.mean_mse /= g.count;
    out.push_back(g);
  }
  return out;
}

std::vector<EvalReport::Group> EvalReport::by_variance_bin() const {
  std::vector<Group> out(kVarianceBinEdges.size() - 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].label = bin_label(static_cast<int>(i));
  for (const ClipScore& c : clips) {
    out[c.bin].count++;
    out[c.bin].mean_mse += c.mse;
  }
  for (Group& g : out) {
    if (g.count > 0) g.mean_mse /= g.count;
  }
  return out;
}

nlohmann::json EvalReport::to_json(bool bins) const {
  nlohmann::json j;
  j["mean_mse"] = mean_mse();
  j["count"] = clips.size();
  auto per_clip = nlohmann::json::array();
  for (const ClipScore& c : clips) {
    per_clip.push_back({{"id", c.id},
                        {"scenario", c.scenario},
                        {"mse", c.mse},
                        {"variance", c.variance},
                        {"bin", c.bin}});
  }
  j["clips"] = per_clip;
  auto sc = nlohmann::json::array();
  for (const Group& g : by_scenario()) {
    sc.push_back({{"scenario", g.label}, {"count", g.count}, {"mean_mse", g.mean_mse}});
  }
  j["scenarios"] = sc;
  if (bins) {
    auto b = nlohmann::json::array();
    const auto groups = by_variance_bin();
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const double hi = kVarianceBinEdges[i + 1];
      b.push_back({{"low", kVarianceBinEdges[i]},
                   {"high", std::isinf(hi) ? nlohmann::json(nullptr) : nlohmann::json(hi)},
                   {"count", groups[i].count},
                   {"mean_mse", groups[i].mean_mse}});
    }
    j["variance_bins"] = b;
  }
  return j;
}

std::string EvalReport::table(bool bins) const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-32s %6s %12s\n", "scenario", "clips", "mse");
  os << line;
  for (const Group& g : by_scenario()) {
    std::snprintf(line, sizeof line, "%-32s %6d %12.6f\n", g.label.c_str(), g.count, g.mean_mse);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-32s %6zu %12.6f\n", "all", clips.size(), mean_mse());
  os << line;
  if (bins) {
    os << "\n";
    std::snprintf(line, sizeof line, "%-32s %6s %12s\n", "movement variance", "clips", "mse");
    os << line;
    for (const Group& g : by_variance_bin()) {
      std::snprintf(line, sizeof line, "%-32s %6d %12.6f\n", g.label.c_str(), g.count,
                    g.mean_mse);
      os << line;
    }
  }
  return os.str();
}

EndEffectorTrack end_effectors(const MotionClip& clip) {
  EndEffectorTrack track;
  std::vector<std::size_t> idx;
  for (std::string_view name : kEndEffectorNames) {
    if (auto i = clip.skeleton.find(name)) {
      track.joints.emplace_back(name);
      idx.push_back(*i);
    }
  }
  if (idx.empty()) {
    throw Error("skeleton '" + clip.skeleton.name() + "' has no end effectors");
  }
  for (const Pose& pose : clip.local) {
    std::vector<Vec3> row;
    for (std::size_t i : idx) row.push_back(pose[i]);
    track.frames.push_back(std::move(row));
  }
  return track;
}

std::string write_end_effector_csv(const EndEffectorTrack& track) {
  std::ostringstream os;
  os << "frame";
  for (const std::string& j : track.joints) os << ',' << j << ".x," << j << ".y," << j << ".z";
  os << '\n';
  char buf[32];
  for (std::size_t t = 0; t < track.frames.size(); ++t) {
    os << t;
    for (const Vec3& p : track.frames[t]) {
      for (int c = 0; c < 3; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", p[c]);
        os << ',' << buf;
      }
    }
    os << '\n';
  }
  return os.str();
}

EndEffectorTrack parse_end_effector_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 1;
  if (!std::getline(is, line)) throw ParseError("empty CSV", 1);
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  const auto header = split(line);
  if (header.empty() || header[0] != "frame" || (header.size() - 1) % 3 != 0) {
    throw ParseError("expected header 'frame,<joint>.x,<joint>.y,<joint>.z,...'", 1);
  }
  EndEffectorTrack track;
  for (std::size_t c = 1; c < header.size(); c += 3) {
    const std::string& h = header[c];
    if (h.size() < 3 || h.compare(h.size() - 2, 2, ".x") != 0) {
      throw ParseError("bad column '" + h + "'", 1);
    }
    track.joints.push_back(h.substr(0, h.size() - 2));
  }
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       lineno);
    }
    std::vector<Vec3> row;
    try {
      for (std::size_t c = 1; c < cells.size(); c += 3) {
        row.emplace_back(std::stod(cells[c]), std::stod(cells[c + 1]), std::stod(cells[c + 2]));
      }
    } catch (const std::exception&) {
      throw ParseError("non-numeric cell", lineno);
    }
    track.frames.push_back(std::move(row));
  }
  return track;
}

double height_total_variation(const EndEffectorTrack& track, std::size_t k) {
  double tv = 0.0;
  for (std::size_t t = 1; t < track.frames.size(); ++t) {
    tv += std::abs(track.frames[t][k].y() - track.frames[t - 1][k].y());
  }
  return tv;
}

}  // namespace kinnet
