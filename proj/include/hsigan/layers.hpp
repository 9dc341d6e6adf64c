#pragma once

#include <vector>

#include "hsigan/tensor.hpp"

namespace hsigan {

enum class Act { None, Relu, Lrelu, Tanh };

struct Stride3 {
  int sh = 1, sw = 1, sb = 1;
};

// One convolutional layer. Kernel layout is (kh, kw, kb, c_in, c_out);
// kh=kw=1 gives a pure spectral layer, kb=1 a pure spatial one.
//
// mode=Conv maps c_in -> c_out channels with "same" zero padding and stride
// downsampling (output extent = ceil(input/stride)). mode=Transposed is the
// exact adjoint of the Conv map with identical kernel/stride, so it runs
// c_out -> c_in and multiplies every data extent by its stride. Bias length
// therefore equals c_out for Conv and c_in for Transposed.
struct ConvLayerParams {
  enum class Mode { Conv, Transposed };
  Tensor kernel;
  Tensor bias;
  Stride3 stride;
  Mode mode = Mode::Conv;
};

// Activations (elementwise). Slope applies to Lrelu only.
void apply_activation(Tensor& t, Act act, double slope);
Tensor lrelu(const Tensor& x, double slope);
// dx = dy * act'(x_pre) where x_pre is the pre-activation input.
Tensor activation_grad(const Tensor& x_pre, const Tensor& dy, Act act, double slope);

// Core 3-D cross-correlation over an (h, w, b, c_in) tensor.
Tensor conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias, Stride3 stride);
// Gradients; any output pointer may be null to skip that gradient.
void conv3d_backward(const Tensor& input, const Tensor& kernel, Stride3 stride,
                     const Tensor& dout, Tensor* dinput, Tensor* dkernel, Tensor* dbias);

// Adjoint map: input (h, w, b, c_out) -> output (h*sh, w*sw, b*sb, c_in).
Tensor transposed_conv3d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
                         Stride3 stride);
void transposed_conv3d_backward(const Tensor& input, const Tensor& kernel, Stride3 stride,
                                const Tensor& dout, Tensor* dinput, Tensor* dkernel,
                                Tensor* dbias);

// Spec-level layer ops: conv/transposed-conv plus bias plus activation.
Tensor conv_forward(const Tensor& input, const ConvLayerParams& params, Act act,
                    double lrelu_slope = 0.2);
Tensor transposed_conv_forward(const Tensor& input, const ConvLayerParams& params, Act act);

// Dense layer: x(n) * W(n,m) + b(m).
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);
void dense_backward(const Tensor& x, const Tensor& w, const Tensor& dy, Tensor* dx, Tensor* dw,
                    Tensor* db);

// (h, w, b, c) -> (c), mean over all data positions.
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const std::vector<int>& x_shape, const Tensor& dy);
// (h, w, b, c) -> (c), mean over the spectral axis at the center pixel only.
Tensor center_spectral_pool(const Tensor& x);
Tensor center_spectral_pool_backward(const std::vector<int>& x_shape, const Tensor& dy);

// Numerically stable softmax over the last axis (max-subtraction).
Tensor softmax(const Tensor& logits);
double logsumexp(const double* v, int n);

}  // namespace hsigan
