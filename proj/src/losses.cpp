#include "kinnet/losses.hpp"

#include "kinnet/errors.hpp"

#include <algorithm>
#include <cmath>

namespace kinnet {

namespace {

double clamp_probability(double p) {
  if (std::isnan(p)) {
    throw NumericError("probability is NaN");
  }
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

double twist_sum(const std::vector<Rotations>& q, double alpha) {
  double s = 0.0;
  for (const Rotations& frame : q) {
    for (const Quaternion& r : frame) {
      const double over = std::max(0.0, std::abs(quat_twist_angle_y(r)) - alpha);
      s += over * over;
    }
  }
  return s;
}

double smooth_sum(const std::vector<std::array<double, 4>>& v) {
  double s = 0.0;
  for (std::size_t t = 1; t < v.size(); ++t) {
    for (int c = 0; c < 4; ++c) {
      const double d = v[t][c] - v[t - 1][c];
      s += d * d;
    }
  }
  return s;
}

}  // namespace

double square_loss(const Sequence& a, const Sequence& b) {
  if (a.size() != b.size()) {
    throw ShapeError("sequence lengths differ: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size()) {
      throw ShapeError("frame widths differ at frame " + std::to_string(t));
    }
    for (std::size_t i = 0; i < a[t].size(); ++i) {
      const double d = a[t][i] - b[t][i];
      s += d * d;
    }
  }
  return s;
}

double cycle_loss(const Sequence& reconstructed, const Sequence& original) {
  return square_loss(original, reconstructed);
}

double twist_loss(const std::vector<Rotations>& q_b, const std::vector<Rotations>& q_a,
                  double alpha) {
  return twist_sum(q_b, alpha) + twist_sum(q_a, alpha);
}

double smoothing_loss(const std::vector<std::array<double, 4>>& v_b,
                      const std::vector<std::array<double, 4>>& v_a) {
  return smooth_sum(v_b) + smooth_sum(v_a);
}

AdversarialTerms adversarial_or_reconstruction_loss(const Sequence& x_b, const Sequence& x_a,
                                                    double r_a, double r_b, bool same_skeleton,
                                                    double beta, bool non_saturating) {
  AdversarialTerms out;
  if (same_skeleton) {
    out.generator = square_loss(x_b, x_a);
    return out;
  }
  const double pa = clamp_probability(r_a);
  const double pb = clamp_probability(r_b);
  out.discriminator = std::log(pa) + std::log(1.0 - pb);
  out.generator = non_saturating ? -beta * std::log(pb) : beta * std::log(1.0 - pb);
  return out;
}

nn::Var sequence_square_error(const std::vector<nn::Var>& a, const std::vector<nn::Var>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("sequence lengths differ: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  nn::Var total = nn::sum_last(nn::square(nn::sub(a[0], b[0])));
  for (std::size_t t = 1; t < a.size(); ++t) {
    total = nn::add(total, nn::sum_last(nn::square(nn::sub(a[t], b[t]))));
  }
  return total;
}

nn::Var twist_penalty(const std::vector<nn::Var>& quats, double alpha) {
  if (quats.empty()) {
    throw ShapeError("empty quaternion sequence");
  }
  nn::Var total;
  for (std::size_t t = 0; t < quats.size(); ++t) {
    const nn::Var over = nn::relu(nn::add_scalar(nn::abs(nn::twist_angles(quats[t])), -alpha));
    const nn::Var s = nn::sum_last(nn::square(over));
    total = t == 0 ? s : nn::add(total, s);
  }
  return total;
}

nn::Var smoothing_penalty(const std::vector<nn::Var>& velocities) {
  if (velocities.size() < 2) {
    throw ShapeError("smoothing needs at least 2 frames");
  }
  nn::Var total;
  for (std::size_t t = 1; t < velocities.size(); ++t) {
    const nn::Var s = nn::sum_last(nn::square(nn::sub(velocities[t], velocities[t - 1])));
    total = t == 1 ? s : nn::add(total, s);
  }
  return total;
}

nn::Var neg_log(nn::Var probability) {
  return nn::scale(nn::log(nn::clamp(probability, kProbabilityClamp, 1.0 - kProbabilityClamp)),
                   -1.0);
}

nn::Var log_one_minus(nn::Var probability) {
  const nn::Var q = nn::add_scalar(nn::scale(probability, -1.0), 1.0);
  return nn::log(nn::clamp(q, kProbabilityClamp, 1.0 - kProbabilityClamp));
}

}  // namespace kinnet
