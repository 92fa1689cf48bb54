#pragma once

#include "kinnet/motion.hpp"
#include "kinnet/nn/ops.hpp"

#include <array>
#include <vector>

namespace kinnet {

struct LossWeights {
  double beta = 0.001;   // adversarial signal strength for the generator
  double alpha = 100.0;  // twist allowance, degrees
  double lambda = 10.0;  // twist weight
  double omega = 0.01;   // smoothing weight
};

// Probabilities are clamped to [kProbabilityClamp, 1 - kProbabilityClamp] before logs.
inline constexpr double kProbabilityClamp = 1e-7;

// Plain scalar forms on frame-major sequences. Squared norms are summed over
// every frame and component.
using Sequence = std::vector<std::vector<double>>;
double cycle_loss(const Sequence& reconstructed, const Sequence& original);
double square_loss(const Sequence& a, const Sequence& b);
// Sum over frames and joints of max(0, |twist| - alpha)^2 for both sequences.
double twist_loss(const std::vector<Rotations>& q_b, const std::vector<Rotations>& q_a,
                  double alpha);
// Squared frame-to-frame velocity change, summed, for both sequences.
double smoothing_loss(const std::vector<std::array<double, 4>>& v_b,
                      const std::vector<std::array<double, 4>>& v_a);

struct AdversarialTerms {
  double generator = 0.0;
  double discriminator = 0.0;  // objective the discriminator maximizes
};
// With same_skeleton the generator gets the square loss |x̂^B - x^A|^2 and the
// discriminator term is 0. Otherwise the discriminator objective is
// log r^A + log(1 - r^B) and the generator term is beta * log(1 - r^B)
// (literal) or -beta * log r^B (non-saturating).
AdversarialTerms adversarial_or_reconstruction_loss(const Sequence& x_b, const Sequence& x_a,
                                                    double r_a, double r_b, bool same_skeleton,
                                                    double beta, bool non_saturating = true);

// Tape forms. Every function returns a [B] vector of per-sequence sums.
nn::Var sequence_square_error(const std::vector<nn::Var>& a, const std::vector<nn::Var>& b);
// quats[t] is [B, 4N]; twist angles in degrees.
nn::Var twist_penalty(const std::vector<nn::Var>& quats, double alpha);
// velocities[t] is [B, 4].
nn::Var smoothing_penalty(const std::vector<nn::Var>& velocities);
// probability [B] -> -log(clamped p) or log(1 - clamped p), elementwise.
nn::Var neg_log(nn::Var probability);
nn::Var log_one_minus(nn::Var probability);

}  // namespace kinnet
