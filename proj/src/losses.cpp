#include "hsigan/losses.hpp"

#include <cmath>

#include "hsigan/errors.hpp"
#include "hsigan/layers.hpp"

namespace hsigan {

namespace {

void check_logits(const Tensor& logits, int num_classes, const char* who) {
  if (logits.numel() != num_classes + 1)
    throw ShapeError(std::string(who) + ": expected K+1=" + std::to_string(num_classes + 1) +
                     " logits, got " + std::to_string(logits.numel()));
}

}  // namespace

double loss_supervised(const Tensor& logits, int label, int num_classes) {
  check_logits(logits, num_classes, "loss_supervised");
  if (label < 1 || label > num_classes)
    throw ParamError("loss_supervised: label " + std::to_string(label) + " outside 1.." +
                     std::to_string(num_classes));
  return logsumexp(logits.data(), num_classes) - logits[label - 1];
}

Tensor loss_supervised_grad(const Tensor& logits, int label, int num_classes) {
  check_logits(logits, num_classes, "loss_supervised_grad");
  Tensor g({num_classes + 1});
  const double lse = logsumexp(logits.data(), num_classes);
  for (int i = 0; i < num_classes; ++i) g[i] = std::exp(logits[i] - lse);
  g[label - 1] -= 1.0;
  return g;  // fake-logit entry stays exactly zero
}

double loss_unsup_real(const Tensor& logits, int num_classes) {
  check_logits(logits, num_classes, "loss_unsup_real");
  return logsumexp(logits.data(), num_classes + 1) - logsumexp(logits.data(), num_classes);
}

Tensor loss_unsup_real_grad(const Tensor& logits, int num_classes) {
  check_logits(logits, num_classes, "loss_unsup_real_grad");
  Tensor g({num_classes + 1});
  const double lse_all = logsumexp(logits.data(), num_classes + 1);
  const double lse_real = logsumexp(logits.data(), num_classes);
  for (int i = 0; i <= num_classes; ++i) g[i] = std::exp(logits[i] - lse_all);
  for (int i = 0; i < num_classes; ++i) g[i] -= std::exp(logits[i] - lse_real);
  return g;
}

double loss_unsup_fake(const Tensor& logits, int num_classes) {
  check_logits(logits, num_classes, "loss_unsup_fake");
  return logsumexp(logits.data(), num_classes + 1) - logits[num_classes];
}

Tensor loss_unsup_fake_grad(const Tensor& logits, int num_classes) {
  check_logits(logits, num_classes, "loss_unsup_fake_grad");
  Tensor g({num_classes + 1});
  const double lse_all = logsumexp(logits.data(), num_classes + 1);
  for (int i = 0; i <= num_classes; ++i) g[i] = std::exp(logits[i] - lse_all);
  g[num_classes] -= 1.0;
  return g;
}

double total_loss(double l1, double l2, double l3) { return l1 + l2 + l3; }

double feature_matching_loss(const Tensor& real_features, const Tensor& fake_features) {
  if (real_features.rank() != 2 || fake_features.rank() != 2 ||
      real_features.dim(1) != fake_features.dim(1))
    throw ShapeError("feature_matching_loss: expected (n, c) matrices with equal c, got " +
                     real_features.shape_str() + " and " + fake_features.shape_str());
  const int c = real_features.dim(1);
  const int nr = real_features.dim(0), nf = fake_features.dim(0);
  if (nr == 0 || nf == 0) throw ShapeError("feature_matching_loss: empty batch");
  double loss = 0.0;
  for (int j = 0; j < c; ++j) {
    double mr = 0.0, mf = 0.0;
    for (int i = 0; i < nr; ++i) mr += real_features.at2(i, j);
    for (int i = 0; i < nf; ++i) mf += fake_features.at2(i, j);
    const double d = mr / nr - mf / nf;
    loss += d * d;
  }
  return loss;
}

}  // namespace hsigan
