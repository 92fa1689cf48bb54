#include "kinnet/nn/ops.hpp"

#include "kinnet/errors.hpp"
#include "kinnet/quat.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace kinnet::nn {

namespace {

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_rank(const char* op, Var a, int rank) {
  if (a.value().rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(a.shape()));
  }
}

// Adds `scale * src` into the gradient buffer of `v` (if it needs one).
void accumulate(Tape& tape, Var v, const Tensor& src, double factor = 1.0) {
  if (Tensor* g = tape.grad_buffer(v.id)) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      (*g)[i] += factor * src[i];
    }
  }
}

template <typename Forward, typename Derivative>
Var unary(Var a, Forward f, Derivative df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = f(x[i]);
  }
  // df(x, y) is evaluated lazily in backward from the stored values.
  const int out_id = static_cast<int>(a.tape->size());
  return a.tape->record(std::move(y), {a}, [a, out_id, df](Tape& tape, const Tensor& g) {
    Tensor* ga = tape.grad_buffer(a.id);
    if (!ga) {
      return;
    }
    const Tensor& x = tape.value(a.id);
    const Tensor& y = tape.value(out_id);
    for (std::size_t i = 0; i < x.size(); ++i) {
      (*ga)[i] += g[i] * df(x[i], y[i]);
    }
  });
}

}  // namespace

int conv1d_output_length(int length, int kernel, int stride, Padding padding) {
  if (padding == Padding::kSame) {
    return (length + stride - 1) / stride;
  }
  if (length < kernel) {
    return 0;
  }
  return (length - kernel) / stride + 1;
}

Var matmul(Var a, Var b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: shape mismatch " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  Tensor y({a.dim(0), b.dim(1)});
  y.matrix().noalias() = a.value().matrix() * b.value().matrix();
  return a.tape->record(std::move(y), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_buffer(a.id)) {
      ga->matrix().noalias() += g.matrix() * tape.value(b.id).matrix().transpose();
    }
    if (Tensor* gb = tape.grad_buffer(b.id)) {
      gb->matrix().noalias() += tape.value(a.id).matrix().transpose() * g.matrix();
    }
  });
}

Var affine(Var x, Var w, Var b) {
  require_rank("affine", x, 2);
  require_rank("affine", w, 2);
  if (x.dim(1) != w.dim(0) || b.value().size() != static_cast<std::size_t>(w.dim(1))) {
    throw ShapeError("affine: shape mismatch " + shape_string(x.shape()) + " x " +
                     shape_string(w.shape()) + " + " + shape_string(b.shape()));
  }
  Tensor y({x.dim(0), w.dim(1)});
  y.matrix().noalias() = x.value().matrix() * w.value().matrix();
  y.matrix().rowwise() += b.value().matrix().row(0);
  return x.tape->record(std::move(y), {x, w, b}, [x, w, b](Tape& tape, const Tensor& g) {
    if (Tensor* gx = tape.grad_buffer(x.id)) {
      gx->matrix().noalias() += g.matrix() * tape.value(w.id).matrix().transpose();
    }
    if (Tensor* gw = tape.grad_buffer(w.id)) {
      gw->matrix().noalias() += tape.value(x.id).matrix().transpose() * g.matrix();
    }
    if (Tensor* gb = tape.grad_buffer(b.id)) {
      gb->matrix().row(0) += g.matrix().colwise().sum();
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] += b.value()[i];
  }
  return a.tape->record(std::move(y), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    accumulate(tape, a, g);
    accumulate(tape, b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a, b);
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] -= b.value()[i];
  }
  return a.tape->record(std::move(y), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    accumulate(tape, a, g);
    accumulate(tape, b, g, -1.0);
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] *= b.value()[i];
  }
  return a.tape->record(std::move(y), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    const Tensor& av = tape.value(a.id);
    const Tensor& bv = tape.value(b.id);
    if (Tensor* ga = tape.grad_buffer(a.id)) {
      for (std::size_t i = 0; i < ga->size(); ++i) {
        (*ga)[i] += g[i] * bv[i];
      }
    }
    if (Tensor* gb = tape.grad_buffer(b.id)) {
      for (std::size_t i = 0; i < gb->size(); ++i) {
        (*gb)[i] += g[i] * av[i];
      }
    }
  });
}

Var add_row(Var a, Var row) {
  require_rank("add_row", a, 2);
  if (row.value().size() != static_cast<std::size_t>(a.dim(1))) {
    throw ShapeError("add_row: shape mismatch " + shape_string(a.shape()) + " + " +
                     shape_string(row.shape()));
  }
  Tensor y = a.value();
  y.matrix().rowwise() += row.value().matrix().row(0);
  return a.tape->record(std::move(y), {a, row}, [a, row](Tape& tape, const Tensor& g) {
    accumulate(tape, a, g);
    if (Tensor* gr = tape.grad_buffer(row.id)) {
      gr->matrix().row(0) += g.matrix().colwise().sum();
    }
  });
}

Var scale(Var a, double factor) {
  Tensor y = a.value();
  for (double& v : y.values()) {
    v *= factor;
  }
  return a.tape->record(std::move(y), {a},
                        [a, factor](Tape& tape, const Tensor& g) { accumulate(tape, a, g, factor); });
}

Var add_scalar(Var a, double value) {
  Tensor y = a.value();
  for (double& v : y.values()) {
    v += value;
  }
  return a.tape->record(std::move(y), {a},
                        [a](Tape& tape, const Tensor& g) { accumulate(tape, a, g); });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var leaky_relu(Var a, double slope) {
  return unary(
      a, [slope](double x) { return x > 0.0 ? x : slope * x; },
      [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sqrt(Var a) {
  for (double v : a.value().values()) {
    if (v < 0.0) {
      throw NumericError("sqrt of negative value");
    }
  }
  return unary(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) {
      throw NumericError("log of non-positive value");
    }
  }
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var dropout(Var a, double keep) {
  if (!(keep > 0.0 && keep <= 1.0)) {
    throw Error("dropout keep probability must be in (0, 1]");
  }
  if (!a.tape->training() || keep == 1.0) {
    return a;
  }
  auto mask = std::make_shared<std::vector<double>>(a.value().size());
  std::bernoulli_distribution draw(keep);
  Rng& rng = a.tape->rng();
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) {
    (*mask)[i] = draw(rng) ? 1.0 / keep : 0.0;
    y[i] *= (*mask)[i];
  }
  return a.tape->record(std::move(y), {a}, [a, mask](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_buffer(a.id)) {
      for (std::size_t i = 0; i < ga->size(); ++i) {
        (*ga)[i] += g[i] * (*mask)[i];
      }
    }
  });
}

Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) {
    throw ShapeError("concat of zero tensors");
  }
  const int rank = parts[0].value().rank();
  const int rows = rank == 1 ? 1 : parts[0].dim(0);
  if (rank != 1 && rank != 2) {
    throw ShapeError("concat supports rank 1 or 2, got " + shape_string(parts[0].shape()));
  }
  std::vector<int> widths;
  int total = 0;
  for (const Var& p : parts) {
    if (p.value().rank() != rank || (rank == 2 && p.dim(0) != rows)) {
      throw ShapeError("concat: shape mismatch " + shape_string(parts[0].shape()) + " vs " +
                       shape_string(p.shape()));
    }
    widths.push_back(p.dim(-1));
    total += p.dim(-1);
  }
  Tensor y(rank == 1 ? std::vector<int>{total} : std::vector<int>{rows, total});
  auto ym = y.matrix();
  int col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    ym.middleCols(col, widths[k]) = parts[k].value().matrix();
    col += widths[k];
  }
  return parts[0].tape->record(std::move(y), parts, [parts, widths](Tape& tape, const Tensor& g) {
    auto gm = g.matrix();
    int col = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (Tensor* gp = tape.grad_buffer(parts[k].id)) {
        gp->matrix() += gm.middleCols(col, widths[k]);
      }
      col += widths[k];
    }
  });
}

Var slice(Var a, int begin, int end) {
  const int width = a.dim(-1);
  if (begin < 0 || end > width || begin >= end) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range for " + shape_string(a.shape()));
  }
  std::vector<int> shape = a.shape();
  shape.back() = end - begin;
  Tensor y(shape);
  const std::size_t rows = a.value().size() / width;
  const int out_width = end - begin;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().data() + r * width + begin, out_width, y.data() + r * out_width);
  }
  return a.tape->record(std::move(y), {a},
                        [a, begin, width, out_width, rows](Tape& tape, const Tensor& g) {
                          if (Tensor* ga = tape.grad_buffer(a.id)) {
                            for (std::size_t r = 0; r < rows; ++r) {
                              for (int c = 0; c < out_width; ++c) {
                                (*ga)[r * width + begin + c] += g[r * out_width + c];
                              }
                            }
                          }
                        });
}

Var reshape(Var a, std::vector<int> shape) {
  Tensor y = a.value();
  y.reshape(std::move(shape));
  return a.tape->record(std::move(y), {a},
                        [a](Tape& tape, const Tensor& g) { accumulate(tape, a, g); });
}

Var stack_time(const std::vector<Var>& frames) {
  if (frames.empty()) {
    throw ShapeError("stack_time of zero frames");
  }
  require_rank("stack_time", frames[0], 2);
  const int batch = frames[0].dim(0);
  const int features = frames[0].dim(1);
  const int steps = static_cast<int>(frames.size());
  for (const Var& f : frames) {
    if (f.shape() != frames[0].shape()) {
      throw ShapeError("stack_time: shape mismatch " + shape_string(frames[0].shape()) + " vs " +
                       shape_string(f.shape()));
    }
  }
  Tensor y({batch, features, steps});
  for (int t = 0; t < steps; ++t) {
    const Tensor& v = frames[t].value();
    for (int b = 0; b < batch; ++b) {
      for (int c = 0; c < features; ++c) {
        y[(static_cast<std::size_t>(b) * features + c) * steps + t] = v[b * features + c];
      }
    }
  }
  return frames[0].tape->record(
      std::move(y), frames, [frames, batch, features, steps](Tape& tape, const Tensor& g) {
        for (int t = 0; t < steps; ++t) {
          if (Tensor* gf = tape.grad_buffer(frames[t].id)) {
            for (int b = 0; b < batch; ++b) {
              for (int c = 0; c < features; ++c) {
                (*gf)[b * features + c] += g[(static_cast<std::size_t>(b) * features + c) * steps + t];
              }
            }
          }
        }
      });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) {
    s += v;
  }
  return a.tape->record(Tensor::scalar(s), {a}, [a](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_buffer(a.id)) {
      for (double& v : ga->values()) {
        v += g[0];
      }
    }
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var sum_last(Var a) {
  const int width = a.dim(-1);
  std::vector<int> shape = a.shape();
  shape.pop_back();
  if (shape.empty()) {
    shape.push_back(1);
  }
  Tensor y(shape);
  const std::size_t rows = a.value().size() / width;
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < width; ++c) {
      s += a.value()[r * width + c];
    }
    y[r] = s;
  }
  return a.tape->record(std::move(y), {a}, [a, width, rows](Tape& tape, const Tensor& g) {
    if (Tensor* ga = tape.grad_buffer(a.id)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (int c = 0; c < width; ++c) {
          (*ga)[r * width + c] += g[r];
        }
      }
    }
  });
}

Var mean_last(Var a) {
  return scale(sum_last(a), 1.0 / a.dim(-1));
}

Var instance_norm_1d(Var x, double epsilon) {
  require_rank("instance_norm_1d", x, 3);
  const int batch = x.dim(0);
  const int channels = x.dim(1);
  const int length = x.dim(2);
  Tensor y(x.shape());
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(batch) * channels);
  const Tensor& xv = x.value();
  for (int bc = 0; bc < batch * channels; ++bc) {
    const double* row = xv.data() + static_cast<std::size_t>(bc) * length;
    double mu = 0.0;
    for (int l = 0; l < length; ++l) {
      mu += row[l];
    }
    mu /= length;
    double var = 0.0;
    for (int l = 0; l < length; ++l) {
      var += (row[l] - mu) * (row[l] - mu);
    }
    var /= length;
    const double is = 1.0 / std::sqrt(var + epsilon);
    (*inv_std)[bc] = is;
    for (int l = 0; l < length; ++l) {
      y[static_cast<std::size_t>(bc) * length + l] = (row[l] - mu) * is;
    }
  }
  const int out_id = static_cast<int>(x.tape->size());
  return x.tape->record(
      std::move(y), {x},
      [x, out_id, inv_std, batch, channels, length](Tape& tape, const Tensor& g) {
        Tensor* gx = tape.grad_buffer(x.id);
        if (!gx) {
          return;
        }
        const Tensor& yv = tape.value(out_id);
        for (int bc = 0; bc < batch * channels; ++bc) {
          const std::size_t base = static_cast<std::size_t>(bc) * length;
          double mean_g = 0.0;
          double mean_gy = 0.0;
          for (int l = 0; l < length; ++l) {
            mean_g += g[base + l];
            mean_gy += g[base + l] * yv[base + l];
          }
          mean_g /= length;
          mean_gy /= length;
          for (int l = 0; l < length; ++l) {
            (*gx)[base + l] += (*inv_std)[bc] * (g[base + l] - mean_g - yv[base + l] * mean_gy);
          }
        }
      });
}

Var channel_affine(Var x, Var gamma, Var beta) {
  require_rank("channel_affine", x, 3);
  const int batch = x.dim(0);
  const int channels = x.dim(1);
  const int length = x.dim(2);
  if (gamma.value().size() != static_cast<std::size_t>(channels) ||
      beta.value().size() != static_cast<std::size_t>(channels)) {
    throw ShapeError("channel_affine: shape mismatch " + shape_string(x.shape()) + " with " +
                     shape_string(gamma.shape()));
  }
  Tensor y(x.shape());
  for (int b = 0; b < batch; ++b) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t base = (static_cast<std::size_t>(b) * channels + c) * length;
      for (int l = 0; l < length; ++l) {
        y[base + l] = x.value()[base + l] * gamma.value()[c] + beta.value()[c];
      }
    }
  }
  return x.tape->record(
      std::move(y), {x, gamma, beta},
      [x, gamma, beta, batch, channels, length](Tape& tape, const Tensor& g) {
        Tensor* gx = tape.grad_buffer(x.id);
        Tensor* gg = tape.grad_buffer(gamma.id);
        Tensor* gb = tape.grad_buffer(beta.id);
        const Tensor& xv = tape.value(x.id);
        const Tensor& gv = tape.value(gamma.id);
        for (int b = 0; b < batch; ++b) {
          for (int c = 0; c < channels; ++c) {
            const std::size_t base = (static_cast<std::size_t>(b) * channels + c) * length;
            for (int l = 0; l < length; ++l) {
              if (gx) (*gx)[base + l] += g[base + l] * gv[c];
              if (gg) (*gg)[c] += g[base + l] * xv[base + l];
              if (gb) (*gb)[c] += g[base + l];
            }
          }
        }
      });
}

Var conv1d(Var x, Var w, Var b, int stride, Padding padding) {
  require_rank("conv1d", x, 3);
  require_rank("conv1d", w, 3);
  const int batch = x.dim(0);
  const int in_ch = x.dim(1);
  const int length = x.dim(2);
  const int out_ch = w.dim(0);
  const int kernel = w.dim(2);
  if (w.dim(1) != in_ch || b.value().size() != static_cast<std::size_t>(out_ch)) {
    throw ShapeError("conv1d: shape mismatch input " + shape_string(x.shape()) + " weights " +
                     shape_string(w.shape()) + " bias " + shape_string(b.shape()));
  }
  if (stride < 1) {
    throw Error("conv1d stride must be positive");
  }
  const int out_len = conv1d_output_length(length, kernel, stride, padding);
  if (out_len < 1) {
    throw ShapeError("conv1d: input length " + std::to_string(length) +
                     " too short for kernel " + std::to_string(kernel));
  }
  int pad_left = 0;
  if (padding == Padding::kSame) {
    const int pad_total = std::max((out_len - 1) * stride + kernel - length, 0);
    pad_left = pad_total / 2;
  }

  // Column buffer per batch item: [in_ch * kernel, out_len].
  const int patch = in_ch * kernel;
  auto columns = std::make_shared<std::vector<MatrixR>>(batch, MatrixR::Zero(patch, out_len));
  for (int bi = 0; bi < batch; ++bi) {
    MatrixR& col = (*columns)[bi];
    for (int c = 0; c < in_ch; ++c) {
      const double* src = x.value().data() + (static_cast<std::size_t>(bi) * in_ch + c) * length;
      for (int k = 0; k < kernel; ++k) {
        for (int o = 0; o < out_len; ++o) {
          const int pos = o * stride + k - pad_left;
          if (pos >= 0 && pos < length) {
            col(c * kernel + k, o) = src[pos];
          }
        }
      }
    }
  }
  ConstMatrixMap weights(w.value().data(), out_ch, patch);
  Tensor y({batch, out_ch, out_len});
  for (int bi = 0; bi < batch; ++bi) {
    MatrixMap out(y.data() + static_cast<std::size_t>(bi) * out_ch * out_len, out_ch, out_len);
    out.noalias() = weights * (*columns)[bi];
    for (int c = 0; c < out_ch; ++c) {
      out.row(c).array() += b.value()[c];
    }
  }
  return x.tape->record(
      std::move(y), {x, w, b},
      [x, w, b, columns, batch, in_ch, length, out_ch, kernel, out_len, stride, pad_left,
       patch](Tape& tape, const Tensor& g) {
        Tensor* gx = tape.grad_buffer(x.id);
        Tensor* gw = tape.grad_buffer(w.id);
        Tensor* gb = tape.grad_buffer(b.id);
        ConstMatrixMap weights(tape.value(w.id).data(), out_ch, patch);
        for (int bi = 0; bi < batch; ++bi) {
          ConstMatrixMap go(g.data() + static_cast<std::size_t>(bi) * out_ch * out_len, out_ch,
                            out_len);
          if (gw) {
            MatrixMap(gw->data(), out_ch, patch).noalias() += go * (*columns)[bi].transpose();
          }
          if (gb) {
            for (int c = 0; c < out_ch; ++c) {
              (*gb)[c] += go.row(c).sum();
            }
          }
          if (gx) {
            const MatrixR dcol = weights.transpose() * go;
            for (int c = 0; c < in_ch; ++c) {
              double* dst = gx->data() + (static_cast<std::size_t>(bi) * in_ch + c) * length;
              for (int k = 0; k < kernel; ++k) {
                for (int o = 0; o < out_len; ++o) {
                  const int pos = o * stride + k - pad_left;
                  if (pos >= 0 && pos < length) {
                    dst[pos] += dcol(c * kernel + k, o);
                  }
                }
              }
            }
          }
        }
      });
}

Var gru_cell(Var x, Var h, Var wx, Var wh, Var bx, Var bh, GruVariant variant) {
  require_rank("gru_cell", x, 2);
  require_rank("gru_cell", h, 2);
  const int batch = x.dim(0);
  const int hidden = h.dim(1);
  if (h.dim(0) != batch || wx.value().rank() != 2 || wx.dim(0) != x.dim(1) ||
      wx.dim(1) != 3 * hidden || wh.value().rank() != 2 || wh.dim(0) != hidden ||
      wh.dim(1) != 3 * hidden || bx.value().size() != static_cast<std::size_t>(3 * hidden) ||
      bh.value().size() != static_cast<std::size_t>(3 * hidden)) {
    throw ShapeError("gru_cell: shape mismatch x " + shape_string(x.shape()) + " h " +
                     shape_string(h.shape()) + " wx " + shape_string(wx.shape()) + " wh " +
                     shape_string(wh.shape()));
  }

  struct Saved {
    MatrixR z, r, n, gated;  // gated: r ⊙ h (before) or Wh_n h + b (after)
  };
  auto saved = std::make_shared<Saved>();
  const auto xm = x.value().matrix();
  const auto hm = h.value().matrix();
  const auto wxm = wx.value().matrix();
  const auto whm = wh.value().matrix();
  const auto bxr = bx.value().matrix().row(0);
  const auto bhr = bh.value().matrix().row(0);

  MatrixR xw = xm * wxm;
  xw.rowwise() += bxr;
  MatrixR hzr = hm * whm.leftCols(2 * hidden);
  hzr.rowwise() += bhr.head(2 * hidden);
  auto sigm = [](const MatrixR& a) -> MatrixR {
    return (1.0 / (1.0 + (-a.array()).exp())).matrix();
  };
  saved->z = sigm(xw.leftCols(hidden) + hzr.leftCols(hidden));
  saved->r = sigm(xw.middleCols(hidden, hidden) + hzr.rightCols(hidden));
  MatrixR pre_n;
  if (variant == GruVariant::kResetBeforeMatmul) {
    saved->gated = (saved->r.array() * hm.array()).matrix();
    pre_n = saved->gated * whm.rightCols(hidden);
    pre_n.rowwise() += bhr.tail(hidden);
    pre_n += xw.rightCols(hidden);
  } else {
    saved->gated = hm * whm.rightCols(hidden);
    saved->gated.rowwise() += bhr.tail(hidden);
    pre_n = xw.rightCols(hidden) + (saved->r.array() * saved->gated.array()).matrix();
  }
  saved->n = pre_n.array().tanh().matrix();

  Tensor out({batch, hidden});
  out.matrix() = ((1.0 - saved->z.array()) * saved->n.array() + saved->z.array() * hm.array())
                     .matrix();

  return x.tape->record(
      std::move(out), {x, h, wx, wh, bx, bh},
      [x, h, wx, wh, bx, bh, saved, hidden, variant](Tape& tape, const Tensor& g) {
        const auto gm = g.matrix();
        const auto xm = tape.value(x.id).matrix();
        const auto hm = tape.value(h.id).matrix();
        const auto wxm = tape.value(wx.id).matrix();
        const auto whm = tape.value(wh.id).matrix();
        const MatrixR& z = saved->z;
        const MatrixR& r = saved->r;
        const MatrixR& n = saved->n;

        const MatrixR dz = (gm.array() * (hm.array() - n.array())).matrix();
        const MatrixR dn = (gm.array() * (1.0 - z.array())).matrix();
        MatrixR dh = (gm.array() * z.array()).matrix();
        const MatrixR da_n = (dn.array() * (1.0 - n.array().square())).matrix();

        MatrixR dr;
        MatrixR d_hidden_n;  // gradient into Wh_n's output path
        if (variant == GruVariant::kResetBeforeMatmul) {
          const MatrixR d_gated = da_n * whm.rightCols(hidden).transpose();
          dr = (d_gated.array() * hm.array()).matrix();
          dh += (d_gated.array() * r.array()).matrix();
          d_hidden_n = da_n;
        } else {
          d_hidden_n = (da_n.array() * r.array()).matrix();
          dr = (da_n.array() * saved->gated.array()).matrix();
          dh += d_hidden_n * whm.rightCols(hidden).transpose();
        }
        const MatrixR da_z = (dz.array() * z.array() * (1.0 - z.array())).matrix();
        const MatrixR da_r = (dr.array() * r.array() * (1.0 - r.array())).matrix();

        MatrixR da_x(gm.rows(), 3 * hidden);
        da_x << da_z, da_r, da_n;
        MatrixR da_zr(gm.rows(), 2 * hidden);
        da_zr << da_z, da_r;

        dh += da_zr * whm.leftCols(2 * hidden).transpose();

        if (Tensor* gx = tape.grad_buffer(x.id)) {
          gx->matrix().noalias() += da_x * wxm.transpose();
        }
        if (Tensor* gh = tape.grad_buffer(h.id)) {
          gh->matrix() += dh;
        }
        if (Tensor* gwx = tape.grad_buffer(wx.id)) {
          gwx->matrix().noalias() += xm.transpose() * da_x;
        }
        if (Tensor* gbx = tape.grad_buffer(bx.id)) {
          gbx->matrix().row(0) += da_x.colwise().sum();
        }
        if (Tensor* gwh = tape.grad_buffer(wh.id)) {
          auto gwhm = gwh->matrix();
          gwhm.leftCols(2 * hidden).noalias() += hm.transpose() * da_zr;
          if (variant == GruVariant::kResetBeforeMatmul) {
            gwhm.rightCols(hidden).noalias() += saved->gated.transpose() * d_hidden_n;
          } else {
            gwhm.rightCols(hidden).noalias() += hm.transpose() * d_hidden_n;
          }
        }
        if (Tensor* gbh = tape.grad_buffer(bh.id)) {
          auto row = gbh->matrix().row(0);
          row.head(2 * hidden) += da_zr.colwise().sum();
          row.tail(hidden) += d_hidden_n.colwise().sum();
        }
      });
}

Var normalize_quaternions(Var q) {
  require_rank("normalize_quaternions", q, 2);
  if (q.dim(1) % 4 != 0) {
    throw ShapeError("normalize_quaternions: width " + std::to_string(q.dim(1)) +
                     " is not a multiple of 4");
  }
  const std::size_t groups = q.value().size() / 4;
  Tensor y(q.shape());
  for (std::size_t g = 0; g < groups; ++g) {
    const Vec4 v = Eigen::Map<const Vec4>(q.value().data() + 4 * g);
    Eigen::Map<Vec4>(y.data() + 4 * g) = quat_normalize(v).vec();
  }
  return q.tape->record(std::move(y), {q}, [q, groups](Tape& tape, const Tensor& g) {
    if (Tensor* gq = tape.grad_buffer(q.id)) {
      for (std::size_t k = 0; k < groups; ++k) {
        const Vec4 v = Eigen::Map<const Vec4>(tape.value(q.id).data() + 4 * k);
        const Vec4 up = Eigen::Map<const Vec4>(g.data() + 4 * k);
        Eigen::Map<Vec4>(gq->data() + 4 * k) += quat_normalize_grad(v, up);
      }
    }
  });
}

Var forward_kinematics(Var q, const std::vector<const Skeleton*>& skeletons, Composition mode) {
  require_rank("forward_kinematics", q, 2);
  const int batch = q.dim(0);
  if (static_cast<int>(skeletons.size()) != batch) {
    throw ShapeError("forward_kinematics: " + std::to_string(skeletons.size()) +
                     " skeletons for batch of " + std::to_string(batch));
  }
  const int joints = q.dim(1) / 4;
  for (const Skeleton* s : skeletons) {
    if (static_cast<int>(s->size()) != joints || q.dim(1) != 4 * joints) {
      throw Error("joint/rotation arity mismatch");
    }
  }
  Tensor y({batch, 3 * joints});
  for (int b = 0; b < batch; ++b) {
    fk_forward_flat(q.value().data() + 4 * joints * b, *skeletons[b], mode,
                    y.data() + 3 * joints * b);
  }
  return q.tape->record(std::move(y), {q}, [q, skeletons, mode, batch, joints](Tape& tape,
                                                                               const Tensor& g) {
    if (Tensor* gq = tape.grad_buffer(q.id)) {
      for (int b = 0; b < batch; ++b) {
        fk_backward_flat(tape.value(q.id).data() + 4 * joints * b, *skeletons[b], mode,
                         g.data() + 3 * joints * b, gq->data() + 4 * joints * b);
      }
    }
  });
}

Var twist_angles(Var q) {
  require_rank("twist_angles", q, 2);
  if (q.dim(1) % 4 != 0) {
    throw ShapeError("twist_angles: width is not a multiple of 4");
  }
  const int batch = q.dim(0);
  const int joints = q.dim(1) / 4;
  Tensor y({batch, joints});
  for (int k = 0; k < batch * joints; ++k) {
    const Quaternion quat = Quaternion::from_vec(Eigen::Map<const Vec4>(q.value().data() + 4 * k));
    y[k] = quat_twist_angle_y(quat);
  }
  return q.tape->record(std::move(y), {q}, [q, batch, joints](Tape& tape, const Tensor& g) {
    if (Tensor* gq = tape.grad_buffer(q.id)) {
      for (int k = 0; k < batch * joints; ++k) {
        const Quaternion quat =
            Quaternion::from_vec(Eigen::Map<const Vec4>(tape.value(q.id).data() + 4 * k));
        const Quaternion d = quat_twist_angle_y_grad(quat);
        (*gq)[4 * k] += g[k] * d.r;
        (*gq)[4 * k + 1] += g[k] * d.i;
        (*gq)[4 * k + 2] += g[k] * d.j;
        (*gq)[4 * k + 3] += g[k] * d.k;
      }
    }
  });
}

}  // namespace kinnet::nn
