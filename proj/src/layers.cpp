#include "hsigan/layers.hpp"

#include <algorithm>
#include <cmath>

#include "hsigan/errors.hpp"

namespace hsigan {

namespace {

struct AxisGeom {
  int out = 0;
  int pad = 0;  // padding before (asymmetric remainder goes after)
};

// "Same" geometry for a strided conv: out = ceil(in/s).
AxisGeom conv_axis(int in, int k, int s) {
  AxisGeom g;
  g.out = (in + s - 1) / s;
  const int pad_total = std::max((g.out - 1) * s + k - in, 0);
  g.pad = pad_total / 2;
  return g;
}

// Adjoint geometry: out = in * s, pads matching conv_axis(in*s, k, s).
AxisGeom transposed_axis(int in, int k, int s) {
  AxisGeom g;
  g.out = in * s;
  g.pad = std::max(k - s, 0) / 2;
  return g;
}

void check_conv_shapes(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                       int expected_bias_len, const char* who) {
  if (input.rank() != 4) throw ShapeError(std::string(who) + ": input must be rank 4, got " + input.shape_str());
  if (kernel.rank() != 5) throw ShapeError(std::string(who) + ": kernel must be rank 5, got " + kernel.shape_str());
  if (bias.numel() > 0 && bias.numel() != expected_bias_len)
    throw ShapeError(std::string(who) + ": bias length " + std::to_string(bias.numel()) +
                     " != " + std::to_string(expected_bias_len));
}

}  // namespace

void apply_activation(Tensor& t, Act act, double slope) {
  switch (act) {
    case Act::None:
      return;
    case Act::Relu:
      for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = t[i] > 0.0 ? t[i] : 0.0;
      return;
    case Act::Lrelu:
      if (slope <= 0.0 || slope >= 1.0) throw ParamError("lrelu: slope must be in (0,1)");
      for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = t[i] > 0.0 ? t[i] : slope * t[i];
      return;
    case Act::Tanh:
      for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = std::tanh(t[i]);
      return;
  }
}

Tensor lrelu(const Tensor& x, double slope) {
  Tensor y = x;
  apply_activation(y, Act::Lrelu, slope);
  return y;
}

Tensor activation_grad(const Tensor& x_pre, const Tensor& dy, Act act, double slope) {
  Tensor dx = dy;
  switch (act) {
    case Act::None:
      return dx;
    case Act::Relu:
      for (std::int64_t i = 0; i < dx.numel(); ++i)
        if (x_pre[i] <= 0.0) dx[i] = 0.0;
      return dx;
    case Act::Lrelu:
      for (std::int64_t i = 0; i < dx.numel(); ++i)
        if (x_pre[i] <= 0.0) dx[i] *= slope;
      return dx;
    case Act::Tanh:
      for (std::int64_t i = 0; i < dx.numel(); ++i) {
        const double t = std::tanh(x_pre[i]);
        dx[i] *= 1.0 - t * t;
      }
      return dx;
  }
  return dx;
}

Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias, Stride3 stride) {
  const int ci = kernel.dim(3), co = kernel.dim(4);
  check_conv_shapes(input, kernel, bias, co, "conv3d");
  if (input.dim(3) != ci)
    throw ShapeError("conv3d: input channels " + std::to_string(input.dim(3)) +
                     " != kernel c_in " + std::to_string(ci));
  if (stride.sh < 1 || stride.sw < 1 || stride.sb < 1) throw ParamError("conv3d: stride must be >= 1");

  const int h = input.dim(0), w = input.dim(1), b = input.dim(2);
  const int kh = kernel.dim(0), kw = kernel.dim(1), kb = kernel.dim(2);
  const AxisGeom gh = conv_axis(h, kh, stride.sh);
  const AxisGeom gw = conv_axis(w, kw, stride.sw);
  const AxisGeom gb = conv_axis(b, kb, stride.sb);

  Tensor out({gh.out, gw.out, gb.out, co});
  const double* in = input.data();
  const double* K = kernel.data();
  double* o = out.data();

  for (int oy = 0; oy < gh.out; ++oy) {
    for (int ox = 0; ox < gw.out; ++ox) {
      for (int oz = 0; oz < gb.out; ++oz) {
        double* acc = o + ((static_cast<std::int64_t>(oy) * gw.out + ox) * gb.out + oz) * co;
        if (bias.numel() > 0) {
          for (int c = 0; c < co; ++c) acc[c] = bias[c];
        }
        const int y0 = oy * stride.sh - gh.pad;
        const int x0 = ox * stride.sw - gw.pad;
        const int z0 = oz * stride.sb - gb.pad;
        for (int ky = 0; ky < kh; ++ky) {
          const int y = y0 + ky;
          if (y < 0 || y >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int x = x0 + kx;
            if (x < 0 || x >= w) continue;
            for (int kz = 0; kz < kb; ++kz) {
              const int z = z0 + kz;
              if (z < 0 || z >= b) continue;
              const double* in_p = in + ((static_cast<std::int64_t>(y) * w + x) * b + z) * ci;
              const double* k_p = K + ((static_cast<std::int64_t>(ky) * kw + kx) * kb + kz) * ci * co;
              for (int c_in = 0; c_in < ci; ++c_in) {
                const double a = in_p[c_in];
                const double* kk = k_p + static_cast<std::int64_t>(c_in) * co;
                for (int c = 0; c < co; ++c) acc[c] += a * kk[c];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

void conv3d_backward(const Tensor& input, const Tensor& kernel, Stride3 stride,
                     const Tensor& dout, Tensor* dinput, Tensor* dkernel, Tensor* dbias) {
  const int h = input.dim(0), w = input.dim(1), b = input.dim(2);
  const int ci = kernel.dim(3), co = kernel.dim(4);
  const int kh = kernel.dim(0), kw = kernel.dim(1), kb = kernel.dim(2);
  const AxisGeom gh = conv_axis(h, kh, stride.sh);
  const AxisGeom gw = conv_axis(w, kw, stride.sw);
  const AxisGeom gb = conv_axis(b, kb, stride.sb);
  if (dout.rank() != 4 || dout.dim(0) != gh.out || dout.dim(1) != gw.out ||
      dout.dim(2) != gb.out || dout.dim(3) != co)
    throw ShapeError("conv3d_backward: dout shape " + dout.shape_str() + " mismatch");

  if (dinput) *dinput = Tensor(input.shape());
  if (dkernel) *dkernel = Tensor(kernel.shape());
  if (dbias) *dbias = Tensor({co});

  const double* in = input.data();
  const double* K = kernel.data();
  const double* go = dout.data();

  for (int oy = 0; oy < gh.out; ++oy) {
    for (int ox = 0; ox < gw.out; ++ox) {
      for (int oz = 0; oz < gb.out; ++oz) {
        const double* g = go + ((static_cast<std::int64_t>(oy) * gw.out + ox) * gb.out + oz) * co;
        if (dbias) {
          double* db = dbias->data();
          for (int c = 0; c < co; ++c) db[c] += g[c];
        }
        if (!dinput && !dkernel) continue;
        const int y0 = oy * stride.sh - gh.pad;
        const int x0 = ox * stride.sw - gw.pad;
        const int z0 = oz * stride.sb - gb.pad;
        for (int ky = 0; ky < kh; ++ky) {
          const int y = y0 + ky;
          if (y < 0 || y >= h) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int x = x0 + kx;
            if (x < 0 || x >= w) continue;
            for (int kz = 0; kz < kb; ++kz) {
              const int z = z0 + kz;
              if (z < 0 || z >= b) continue;
              const std::int64_t in_off = ((static_cast<std::int64_t>(y) * w + x) * b + z) * ci;
              const std::int64_t k_off = ((static_cast<std::int64_t>(ky) * kw + kx) * kb + kz) * ci * co;
              if (dinput) {
                double* di = dinput->data() + in_off;
                for (int c_in = 0; c_in < ci; ++c_in) {
                  const double* kk = K + k_off + static_cast<std::int64_t>(c_in) * co;
                  double s = 0.0;
                  for (int c = 0; c < co; ++c) s += kk[c] * g[c];
                  di[c_in] += s;
                }
              }
              if (dkernel) {
                const double* in_p = in + in_off;
                double* dk = dkernel->data() + k_off;
                for (int c_in = 0; c_in < ci; ++c_in) {
                  const double a = in_p[c_in];
                  double* dkk = dk + static_cast<std::int64_t>(c_in) * co;
                  for (int c = 0; c < co; ++c) dkk[c] += a * g[c];
                }
              }
            }
          }
        }
      }
    }
  }
}

Tensor transposed_conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                         Stride3 stride) {
  const int ci = kernel.dim(3), co = kernel.dim(4);
  check_conv_shapes(input, kernel, bias, ci, "transposed_conv3d");
  if (input.dim(3) != co)
    throw ShapeError("transposed_conv3d: input channels " + std::to_string(input.dim(3)) +
                     " != kernel c_out " + std::to_string(co));
  if (stride.sh < 1 || stride.sw < 1 || stride.sb < 1)
    throw ParamError("transposed_conv3d: stride must be >= 1");

  const int h = input.dim(0), w = input.dim(1), b = input.dim(2);
  const int kh = kernel.dim(0), kw = kernel.dim(1), kb = kernel.dim(2);
  const AxisGeom gh = transposed_axis(h, kh, stride.sh);
  const AxisGeom gw = transposed_axis(w, kw, stride.sw);
  const AxisGeom gb = transposed_axis(b, kb, stride.sb);

  Tensor out({gh.out, gw.out, gb.out, ci});
  double* o = out.data();
  if (bias.numel() > 0) {
    const std::int64_t positions = static_cast<std::int64_t>(gh.out) * gw.out * gb.out;
    for (std::int64_t p = 0; p < positions; ++p)
      for (int c = 0; c < ci; ++c) o[p * ci + c] = bias[c];
  }

  const double* in = input.data();
  const double* K = kernel.data();

  // Scatter form of the adjoint: every (source position, kernel offset) pair
  // lands on out position q = p*stride - pad + k.
  for (int py = 0; py < h; ++py) {
    for (int px = 0; px < w; ++px) {
      for (int pz = 0; pz < b; ++pz) {
        const double* in_p = in + ((static_cast<std::int64_t>(py) * w + px) * b + pz) * co;
        const int y0 = py * stride.sh - gh.pad;
        const int x0 = px * stride.sw - gw.pad;
        const int z0 = pz * stride.sb - gb.pad;
        for (int ky = 0; ky < kh; ++ky) {
          const int y = y0 + ky;
          if (y < 0 || y >= gh.out) continue;
          for (int kx = 0; kx < kw; ++kx) {
            const int x = x0 + kx;
            if (x < 0 || x >= gw.out) continue;
            for (int kz = 0; kz < kb; ++kz) {
              const int z = z0 + kz;
              if (z < 0 || z >= gb.out) continue;
              double* o_p = o + ((static_cast<std::int64_t>(y) * gw.out + x) * gb.out + z) * ci;
              const double* k_p = K + ((static_cast<std::int64_t>(ky) * kw + kx) * kb + kz) * ci * co;
              for (int c_in = 0; c_in < ci; ++c_in) {
                const double* kk = k_p + static_cast<std::int64_t>(c_in) * co;
                double s = 0.0;
                for (int c = 0; c < co; ++c) s += in_p[c] * kk[c];
                o_p[c_in] += s;
              }
            }
          }
        }
      }
    }
  }
  return out;
}

void transposed_conv3d_backward(const Tensor& input, const Tensor& kernel, Stride3 stride,
                                const Tensor& dout, Tensor* dinput, Tensor* dkernel,
                                Tensor* dbias) {
  const int ci = kernel.dim(3), co = kernel.dim(4);
  const int h = input.dim(0), w = input.dim(1), b = input.dim(2);
  const AxisGeom gh = transposed_axis(h, kernel.dim(0), stride.sh);
  const AxisGeom gw = transposed_axis(w, kernel.dim(1), stride.sw);
  const AxisGeom gb = transposed_axis(b, kernel.dim(2), stride.sb);
  if (dout.rank() != 4 || dout.dim(0) != gh.out || dout.dim(1) != gw.out ||
      dout.dim(2) != gb.out || dout.dim(3) != ci)
    throw ShapeError("transposed_conv3d_backward: dout shape " + dout.shape_str() + " mismatch");

  // The adjoint of the adjoint is the forward conv, so the input gradient is
  // a plain conv of dout; the kernel gradient reuses the conv kernel-gradient
  // loop with the operand roles swapped.
  if (dinput) *dinput = conv3d(dout, kernel, Tensor(), stride);
  if (dkernel) {
    Tensor dk;
    conv3d_backward(dout, kernel, stride, input, nullptr, &dk, nullptr);
    *dkernel = std::move(dk);
  }
  if (dbias) {
    *dbias = Tensor({ci});
    const std::int64_t positions = static_cast<std::int64_t>(gh.out) * gw.out * gb.out;
    double* db = dbias->data();
    const double* g = dout.data();
    for (std::int64_t p = 0; p < positions; ++p)
      for (int c = 0; c < ci; ++c) db[c] += g[p * ci + c];
  }
}

Tensor conv_forward(const Tensor& input, const ConvLayerParams& params, Act act,
                    double lrelu_slope) {
  if (params.mode != ConvLayerParams::Mode::Conv)
    throw ParamError("conv_forward: layer mode is not Conv");
  Tensor out = conv3d(input, params.kernel, params.bias, params.stride);
  apply_activation(out, act, lrelu_slope);
  return out;
}

Tensor transposed_conv_forward(const Tensor& input, const ConvLayerParams& params, Act act) {
  if (params.mode != ConvLayerParams::Mode::Transposed)
    throw ParamError("transposed_conv_forward: layer mode is not Transposed");
  Tensor out = transposed_conv3d(input, params.kernel, params.bias, params.stride);
  apply_activation(out, act, 0.2);
  return out;
}

Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2) throw ShapeError("dense: weight must be rank 2");
  const int n = w.dim(0), m = w.dim(1);
  if (x.numel() != n)
    throw ShapeError("dense: input length " + std::to_string(x.numel()) + " != " + std::to_string(n));
  if (b.numel() > 0 && b.numel() != m) throw ShapeError("dense: bias length mismatch");
  Tensor y({m});
  for (int j = 0; j < m; ++j) y[j] = b.numel() > 0 ? b[j] : 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = x[i];
    const double* wr = w.data() + static_cast<std::int64_t>(i) * m;
    for (int j = 0; j < m; ++j) y[j] += a * wr[j];
  }
  return y;
}

void dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor* dw,
                    Tensor* db) {
  const int n = w.dim(0), m = w.dim(1);
  if (dx) {
    *dx = Tensor(x.shape());
    for (int i = 0; i < n; ++i) {
      const double* wr = w.data() + static_cast<std::int64_t>(i) * m;
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += wr[j] * dy[j];
      (*dx)[i] = s;
    }
  }
  if (dw) {
    *dw = Tensor(w.shape());
    for (int i = 0; i < n; ++i) {
      const double a = x[i];
      double* dwr = dw->data() + static_cast<std::int64_t>(i) * m;
      for (int j = 0; j < m; ++j) dwr[j] += a * dy[j];
    }
  }
  if (db) *db = dy;
}

Tensor global_avg_pool(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("global_avg_pool: expected rank 4");
  const std::int64_t positions = static_cast<std::int64_t>(x.dim(0)) * x.dim(1) * x.dim(2);
  const int c = x.dim(3);
  Tensor y({c});
  for (std::int64_t p = 0; p < positions; ++p)
    for (int j = 0; j < c; ++j) y[j] += x[p * c + j];
  for (int j = 0; j < c; ++j) y[j] /= static_cast<double>(positions);
  return y;
}

Tensor global_avg_pool_backward(const std::vector<int>& x_shape, const Tensor& dy) {
  Tensor dx(x_shape);
  const std::int64_t positions = static_cast<std::int64_t>(x_shape[0]) * x_shape[1] * x_shape[2];
  const int c = x_shape[3];
  const double inv = 1.0 / static_cast<double>(positions);
  for (std::int64_t p = 0; p < positions; ++p)
    for (int j = 0; j < c; ++j) dx[p * c + j] = dy[j] * inv;
  return dx;
}

Tensor center_spectral_pool(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("center_spectral_pool: expected rank 4");
  const int h = x.dim(0), w = x.dim(1), b = x.dim(2), c = x.dim(3);
  const int cy = h / 2, cx = w / 2;
  Tensor y({c});
  for (int z = 0; z < b; ++z)
    for (int j = 0; j < c; ++j) y[j] += x.at4(cy, cx, z, j);
  for (int j = 0; j < c; ++j) y[j] /= static_cast<double>(b);
  return y;
}

Tensor center_spectral_pool_backward(const std::vector<int>& x_shape, const Tensor& dy) {
  Tensor dx(x_shape);
  const int h = x_shape[0], w = x_shape[1], b = x_shape[2], c = x_shape[3];
  const int cy = h / 2, cx = w / 2;
  const double inv = 1.0 / static_cast<double>(b);
  for (int z = 0; z < b; ++z)
    for (int j = 0; j < c; ++j) dx.at4(cy, cx, z, j) = dy[j] * inv;
  return dx;
}

double logsumexp(const double* v, int n) {
  double m = v[0];
  for (int i = 1; i < n; ++i) m = std::max(m, v[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

Tensor softmax(const Tensor& logits) {
  if (logits.rank() < 1) throw ShapeError("softmax: need rank >= 1");
  const int last = logits.dim(logits.rank() - 1);
  const std::int64_t rows = logits.numel() / last;
  Tensor out(logits.shape());
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* v = logits.data() + r * last;
    double* o = out.data() + r * last;
    double m = v[0];
    for (int i = 1; i < last; ++i) m = std::max(m, v[i]);
    double s = 0.0;
    for (int i = 0; i < last; ++i) {
      o[i] = std::exp(v[i] - m);
      s += o[i];
    }
    const double inv = 1.0 / s;
    for (int i = 0; i < last; ++i) o[i] *= inv;
  }
  return out;
}

}  // namespace hsigan
