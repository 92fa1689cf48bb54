#pragma once

#include "kinnet/fk.hpp"
#include "kinnet/nn/tape.hpp"

#include <vector>

namespace kinnet::nn {

// Leak used by the discriminator's activations.
inline constexpr double kLeakyReluSlope = 0.2;

enum class Padding { kSame, kValid };

// Where the GRU reset gate acts on the hidden state.
//  kResetBeforeMatmul: n = tanh(Wx_n x + b + Wh_n (r ⊙ h) + b')
//  kResetAfterMatmul:  n = tanh(Wx_n x + b + r ⊙ (Wh_n h + b'))
enum class GruVariant { kResetBeforeMatmul, kResetAfterMatmul };

int conv1d_output_length(int length, int kernel, int stride, Padding padding);

// Linear algebra. Rank-2 operands unless noted.
Var matmul(Var a, Var b);
// x [m,k] * w [k,n] + b [n]
Var affine(Var x, Var w, Var b);

// Elementwise, identical shapes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// a [m,n] + row [n]
Var add_row(Var a, Var row);
Var scale(Var a, double factor);
Var add_scalar(Var a, double value);

Var tanh(Var a);
Var sigmoid(Var a);
Var leaky_relu(Var a, double slope = kLeakyReluSlope);
Var relu(Var a);
Var abs(Var a);
Var square(Var a);
Var sqrt(Var a);
Var log(Var a);
// Gradient passes only where lo <= a <= hi.
Var clamp(Var a, double lo, double hi);
// Inverted dropout: identity outside training mode, else keeps each entry with
// probability `keep` and scales it by 1/keep.
Var dropout(Var a, double keep);

// Shape manipulation along the last axis.
Var concat(const std::vector<Var>& parts);
Var slice(Var a, int begin, int end);
Var reshape(Var a, std::vector<int> shape);
// frames[t] is [B, F]; result is [B, F, T].
Var stack_time(const std::vector<Var>& frames);

// Reductions.
Var sum(Var a);
Var mean(Var a);
Var sum_last(Var a);
Var mean_last(Var a);

// x [B, C, L] -> per (b, c) zero mean and unit variance over L.
Var instance_norm_1d(Var x, double epsilon = 1e-6);
// x [B, C, L] * gamma[c] + beta[c]
Var channel_affine(Var x, Var gamma, Var beta);
// x [B, Cin, L], w [Cout, Cin, K], b [Cout] -> [B, Cout, L'].
Var conv1d(Var x, Var w, Var b, int stride, Padding padding);

// One GRU update. x [B, I], h [B, H], wx [I, 3H], wh [H, 3H], bx/bh [3H];
// gate blocks are ordered (update z, reset r, candidate n) and
// h' = (1 - z) ⊙ n + z ⊙ h.
Var gru_cell(Var x, Var h, Var wx, Var wh, Var bx, Var bh,
             GruVariant variant = GruVariant::kResetBeforeMatmul);

// q [B, 4N] -> per-joint unit quaternions. Throws on degenerate norms.
Var normalize_quaternions(Var q);
// q [B, 4N] unit quaternions -> joint positions [B, 3N]; row b uses skeletons[b].
Var forward_kinematics(Var q, const std::vector<const Skeleton*>& skeletons,
                       Composition mode = Composition::kHierarchical);
// q [B, 4N] -> per-joint twist angles in degrees [B, N].
Var twist_angles(Var q);

}  // namespace kinnet::nn
