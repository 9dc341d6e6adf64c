#include "hsigan/tape.hpp"

#include <map>
#include <utility>

#include "hsigan/errors.hpp"
#include "hsigan/losses.hpp"

namespace hsigan {

namespace {

void accumulate(Tensor& dst, const Tensor& src) {
  if (dst.numel() == 0) {
    dst = src;
    return;
  }
  for (std::int64_t i = 0; i < dst.numel(); ++i) dst[i] += src[i];
}

}  // namespace

struct Tape::Impl {
  struct Slot {
    Tensor value;
    Tensor grad;  // empty until reached in backward
    bool requires_grad = false;
  };

  struct Step {
    // Reads the output slot's grad, adds contributions to input slots.
    virtual ~Step() = default;
    virtual void run(Impl& t) = 0;
  };

  std::vector<Slot> slots;
  std::vector<std::unique_ptr<Step>> steps;
  std::map<int, int> param_slots;  // caller key -> slot id
  bool consumed = false;

  int push(Tensor value, bool wants_grad) {
    slots.push_back({std::move(value), Tensor(), wants_grad});
    return static_cast<int>(slots.size()) - 1;
  }

  Slot& at(int id) { return slots[static_cast<std::size_t>(id)]; }
  const Tensor& val(int id) const { return slots[static_cast<std::size_t>(id)].value; }
  bool reached(int id) const { return slots[static_cast<std::size_t>(id)].grad.numel() > 0; }
  void add_grad(int id, const Tensor& g) { accumulate(at(id).grad, g); }
};

namespace {

using Impl = Tape::Impl;

struct ConvStep final : Impl::Step {
  int x, kernel, bias, out;
  Stride3 stride;
  bool transposed;
  void run(Impl& t) override {
    if (!t.reached(out)) return;
    const Tensor& g = t.at(out).grad;
    Tensor dx, dk, db;
    const bool need_x = t.at(x).requires_grad;
    const bool need_k = t.at(kernel).requires_grad;
    const bool need_b = bias >= 0 && t.at(bias).requires_grad;
    if (!need_x && !need_k && !need_b) return;
    if (transposed) {
      transposed_conv3d_backward(t.val(x), t.val(kernel), stride, g, need_x ? &dx : nullptr,
                                 need_k ? &dk : nullptr, need_b ? &db : nullptr);
    } else {
      conv3d_backward(t.val(x), t.val(kernel), stride, g, need_x ? &dx : nullptr,
                      need_k ? &dk : nullptr, need_b ? &db : nullptr);
    }
    if (need_x) t.add_grad(x, dx);
    if (need_k) t.add_grad(kernel, dk);
    if (need_b) t.add_grad(bias, db);
  }
};

struct DenseStep final : Impl::Step {
  int x, w, b, out;
  void run(Impl& t) override {
    if (!t.reached(out)) return;
    const Tensor& g = t.at(out).grad;
    Tensor dx, dw, db;
    const bool need_x = t.at(x).requires_grad;
    const bool need_w = t.at(w).requires_grad;
    const bool need_b = b >= 0 && t.at(b).requires_grad;
    if (!need_x && !need_w && !need_b) return;
    dense_backward(t.val(x), t.val(w), g, need_x ? &dx : nullptr, need_w ? &dw : nullptr,
                   need_b ? &db : nullptr);
    if (need_x) t.add_grad(x, dx);
    if (need_w) t.add_grad(w, dw);
    if (need_b) t.add_grad(b, db);
  }
};

struct ActStep final : Impl::Step {
  int x, out;
  Act act;
  double slope;
  void run(Impl& t) override {
    if (!t.reached(out) || !t.at(x).requires_grad) return;
    t.add_grad(x, activation_grad(t.val(x), t.at(out).grad, act, slope));
  }
};

struct ReshapeStep final : Impl::Step {
  int x, out;
  void run(Impl& t) override {
    if (!t.reached(out) || !t.at(x).requires_grad) return;
    t.add_grad(x, t.at(out).grad.reshaped(t.val(x).shape()));
  }
};

struct PoolStep final : Impl::Step {
  int x, out;
  bool center;
  void run(Impl& t) override {
    if (!t.reached(out) || !t.at(x).requires_grad) return;
    const Tensor& g = t.at(out).grad;
    t.add_grad(x, center ? center_spectral_pool_backward(t.val(x).shape(), g)
                         : global_avg_pool_backward(t.val(x).shape(), g));
  }
};

struct LossStep final : Impl::Step {
  enum Kind { Supervised, UnsupReal, UnsupFake } kind;
  int logits, out, label, num_classes;
  void run(Impl& t) override {
    if (!t.reached(out) || !t.at(logits).requires_grad) return;
    const double scale = t.at(out).grad[0];
    Tensor g;
    switch (kind) {
      case Supervised: g = loss_supervised_grad(t.val(logits), label, num_classes); break;
      case UnsupReal: g = loss_unsup_real_grad(t.val(logits), num_classes); break;
      case UnsupFake: g = loss_unsup_fake_grad(t.val(logits), num_classes); break;
    }
    for (std::int64_t i = 0; i < g.numel(); ++i) g[i] *= scale;
    t.add_grad(logits, g);
  }
};

struct ReduceScalarsStep final : Impl::Step {
  std::vector<int> ids;
  int out;
  bool mean;
  void run(Impl& t) override {
    if (!t.reached(out)) return;
    const double w = t.at(out).grad[0] * (mean ? 1.0 / static_cast<double>(ids.size()) : 1.0);
    for (int id : ids)
      if (t.at(id).requires_grad) t.add_grad(id, Tensor::scalar(w));
  }
};

struct MeanTensorsStep final : Impl::Step {
  std::vector<int> ids;
  int out;
  void run(Impl& t) override {
    if (!t.reached(out)) return;
    const Tensor& g = t.at(out).grad;
    const double inv = 1.0 / static_cast<double>(ids.size());
    for (int id : ids) {
      if (!t.at(id).requires_grad) continue;
      Tensor gi(t.val(id).shape());
      for (std::int64_t i = 0; i < gi.numel(); ++i) gi[i] = g[i] * inv;
      t.add_grad(id, gi);
    }
  }
};

struct SquaredDistanceStep final : Impl::Step {
  int a, b, out;
  void run(Impl& t) override {
    if (!t.reached(out)) return;
    const double scale = t.at(out).grad[0];
    const Tensor& va = t.val(a);
    const Tensor& vb = t.val(b);
    if (t.at(a).requires_grad) {
      Tensor g(va.shape());
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = 2.0 * scale * (va[i] - vb[i]);
      t.add_grad(a, g);
    }
    if (t.at(b).requires_grad) {
      Tensor g(vb.shape());
      for (std::int64_t i = 0; i < g.numel(); ++i) g[i] = -2.0 * scale * (va[i] - vb[i]);
      t.add_grad(b, g);
    }
  }
};

}  // namespace

Tape::Tape() : impl_(std::make_unique<Impl>()) {}
Tape::~Tape() = default;

int Tape::input(Tensor value) { return impl_->push(std::move(value), false); }

int Tape::param(int key, const Tensor& value) {
  const int id = impl_->push(value, true);
  impl_->param_slots[key] = id;
  return id;
}

int Tape::conv(int x, int kernel, int bias, Stride3 stride) {
  const Tensor b = bias >= 0 ? impl_->val(bias) : Tensor();
  Tensor out = conv3d(impl_->val(x), impl_->val(kernel), b, stride);
  const bool req = impl_->at(x).requires_grad || impl_->at(kernel).requires_grad ||
                   (bias >= 0 && impl_->at(bias).requires_grad);
  const int out_id = impl_->push(std::move(out), req);
  auto step = std::make_unique<ConvStep>();
  step->x = x;
  step->kernel = kernel;
  step->bias = bias;
  step->out = out_id;
  step->stride = stride;
  step->transposed = false;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::transposed_conv(int x, int kernel, int bias, Stride3 stride) {
  const Tensor b = bias >= 0 ? impl_->val(bias) : Tensor();
  Tensor out = transposed_conv3d(impl_->val(x), impl_->val(kernel), b, stride);
  const bool req = impl_->at(x).requires_grad || impl_->at(kernel).requires_grad ||
                   (bias >= 0 && impl_->at(bias).requires_grad);
  const int out_id = impl_->push(std::move(out), req);
  auto step = std::make_unique<ConvStep>();
  step->x = x;
  step->kernel = kernel;
  step->bias = bias;
  step->out = out_id;
  step->stride = stride;
  step->transposed = true;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::dense_op(int x, int w, int b) {
  Tensor out = dense(impl_->val(x), impl_->val(w), b >= 0 ? impl_->val(b) : Tensor());
  const bool req = impl_->at(x).requires_grad || impl_->at(w).requires_grad ||
                   (b >= 0 && impl_->at(b).requires_grad);
  const int out_id = impl_->push(std::move(out), req);
  auto step = std::make_unique<DenseStep>();
  step->x = x;
  step->w = w;
  step->b = b;
  step->out = out_id;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::activation(int x, Act act, double slope) {
  Tensor out = impl_->val(x);
  apply_activation(out, act, slope);
  const int out_id = impl_->push(std::move(out), impl_->at(x).requires_grad);
  auto step = std::make_unique<ActStep>();
  step->x = x;
  step->out = out_id;
  step->act = act;
  step->slope = slope;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::reshape(int x, std::vector<int> shape) {
  Tensor out = impl_->val(x).reshaped(std::move(shape));
  const int out_id = impl_->push(std::move(out), impl_->at(x).requires_grad);
  auto step = std::make_unique<ReshapeStep>();
  step->x = x;
  step->out = out_id;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::global_pool(int x) {
  const int out_id = impl_->push(global_avg_pool(impl_->val(x)), impl_->at(x).requires_grad);
  auto step = std::make_unique<PoolStep>();
  step->x = x;
  step->out = out_id;
  step->center = false;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::center_pool(int x) {
  const int out_id = impl_->push(center_spectral_pool(impl_->val(x)), impl_->at(x).requires_grad);
  auto step = std::make_unique<PoolStep>();
  step->x = x;
  step->out = out_id;
  step->center = true;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::loss_supervised_op(int logits, int label, int num_classes) {
  const double v = loss_supervised(impl_->val(logits), label, num_classes);
  const int out_id = impl_->push(Tensor::scalar(v), impl_->at(logits).requires_grad);
  auto step = std::make_unique<LossStep>();
  step->kind = LossStep::Supervised;
  step->logits = logits;
  step->out = out_id;
  step->label = label;
  step->num_classes = num_classes;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::loss_unsup_real_op(int logits, int num_classes) {
  const double v = loss_unsup_real(impl_->val(logits), num_classes);
  const int out_id = impl_->push(Tensor::scalar(v), impl_->at(logits).requires_grad);
  auto step = std::make_unique<LossStep>();
  step->kind = LossStep::UnsupReal;
  step->logits = logits;
  step->out = out_id;
  step->label = 0;
  step->num_classes = num_classes;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::loss_unsup_fake_op(int logits, int num_classes) {
  const double v = loss_unsup_fake(impl_->val(logits), num_classes);
  const int out_id = impl_->push(Tensor::scalar(v), impl_->at(logits).requires_grad);
  auto step = std::make_unique<LossStep>();
  step->kind = LossStep::UnsupFake;
  step->logits = logits;
  step->out = out_id;
  step->label = 0;
  step->num_classes = num_classes;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::sum_scalars(std::vector<int> ids) {
  if (ids.empty()) throw ParamError("sum_scalars: empty list");
  double s = 0.0;
  bool req = false;
  for (int id : ids) {
    s += impl_->val(id)[0];
    req = req || impl_->at(id).requires_grad;
  }
  const int out_id = impl_->push(Tensor::scalar(s), req);
  auto step = std::make_unique<ReduceScalarsStep>();
  step->ids = std::move(ids);
  step->out = out_id;
  step->mean = false;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::mean_scalars(std::vector<int> ids) {
  if (ids.empty()) throw ParamError("mean_scalars: empty list");
  double s = 0.0;
  bool req = false;
  for (int id : ids) {
    s += impl_->val(id)[0];
    req = req || impl_->at(id).requires_grad;
  }
  const int out_id = impl_->push(Tensor::scalar(s / static_cast<double>(ids.size())), req);
  auto step = std::make_unique<ReduceScalarsStep>();
  step->ids = std::move(ids);
  step->out = out_id;
  step->mean = true;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::mean_tensors(std::vector<int> ids) {
  if (ids.empty()) throw ParamError("mean_tensors: empty list");
  Tensor m(impl_->val(ids[0]).shape());
  bool req = false;
  for (int id : ids) {
    const Tensor& v = impl_->val(id);
    if (!v.same_shape(m)) throw ShapeError("mean_tensors: shape mismatch");
    for (std::int64_t i = 0; i < m.numel(); ++i) m[i] += v[i];
    req = req || impl_->at(id).requires_grad;
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (std::int64_t i = 0; i < m.numel(); ++i) m[i] *= inv;
  const int out_id = impl_->push(std::move(m), req);
  auto step = std::make_unique<MeanTensorsStep>();
  step->ids = std::move(ids);
  step->out = out_id;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

int Tape::squared_distance(int a, int b) {
  const Tensor& va = impl_->val(a);
  const Tensor& vb = impl_->val(b);
  if (!va.same_shape(vb)) throw ShapeError("squared_distance: shape mismatch");
  double s = 0.0;
  for (std::int64_t i = 0; i < va.numel(); ++i) {
    const double d = va[i] - vb[i];
    s += d * d;
  }
  const int out_id =
      impl_->push(Tensor::scalar(s), impl_->at(a).requires_grad || impl_->at(b).requires_grad);
  auto step = std::make_unique<SquaredDistanceStep>();
  step->a = a;
  step->b = b;
  step->out = out_id;
  impl_->steps.push_back(std::move(step));
  return out_id;
}

const Tensor& Tape::value(int id) const { return impl_->val(id); }

Tensor Tape::grad(int id) const {
  const auto& slot = impl_->slots[static_cast<std::size_t>(id)];
  if (slot.grad.numel() > 0) return slot.grad;
  return Tensor(slot.value.shape());
}

const Tensor* Tape::grad_for_key(int key) const {
  const auto it = impl_->param_slots.find(key);
  if (it == impl_->param_slots.end()) return nullptr;
  const auto& slot = impl_->slots[static_cast<std::size_t>(it->second)];
  return slot.grad.numel() > 0 ? &slot.grad : nullptr;
}

void Tape::backward(int loss_id) {
  if (impl_->val(loss_id).numel() != 1)
    throw ParamError("backward: seed-less backward needs a scalar slot");
  backward(loss_id, Tensor::scalar(1.0));
}

void Tape::backward(int output_id, const Tensor& output_grad) {
  if (impl_->consumed) throw StateError("backward: tape already consumed");
  if (!impl_->val(output_id).same_shape(output_grad))
    throw ShapeError("backward: seed gradient shape mismatch");
  impl_->consumed = true;
  impl_->add_grad(output_id, output_grad);
  for (auto it = impl_->steps.rbegin(); it != impl_->steps.rend(); ++it) (*it)->run(*impl_);
}

std::size_t Tape::num_ops() const { return impl_->steps.size(); }

}  // namespace hsigan
