#include "hsigan/optimizer.hpp"

#include <cmath>

#include "hsigan/errors.hpp"

namespace hsigan {

void Adam::step(ParamSet& params, const std::vector<const Tensor*>& grads) {
  if (static_cast<int>(grads.size()) != params.size())
    throw ShapeError("adam: gradient list size mismatch");
  if (m_.empty()) {
    for (const auto& p : params.values) {
      m_.emplace_back(p.shape());
      v_.emplace_back(p.shape());
    }
  }
  for (int i = 0; i < params.size(); ++i) {
    if (grads[static_cast<std::size_t>(i)] &&
        !grads[static_cast<std::size_t>(i)]->same_shape(params[i]))
      throw ShapeError("adam: gradient shape mismatch for " +
                       params.names[static_cast<std::size_t>(i)]);
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));

  for (int i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    Tensor& m = m_[static_cast<std::size_t>(i)];
    Tensor& v = v_[static_cast<std::size_t>(i)];
    const Tensor* g = grads[static_cast<std::size_t>(i)];
    for (std::int64_t j = 0; j < p.numel(); ++j) {
      const double gj = g ? (*g)[j] : 0.0;
      if (!std::isfinite(gj))
        throw NumericError("adam: non-finite gradient in " +
                           params.names[static_cast<std::size_t>(i)]);
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace hsigan
