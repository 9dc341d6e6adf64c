#pragma once

#include "hsigan/tensor.hpp"

namespace hsigan {

// Semi-supervised GAN losses over K+1 logits (classes 1..K real, index K
// fake). All are computed in log-space so finite logits can never produce
// log(0).

// -log P(y | real, y <= K): renormalized over the first K classes, so the
// fake logit never contributes.
double loss_supervised(const Tensor& logits, int label, int num_classes);
Tensor loss_supervised_grad(const Tensor& logits, int label, int num_classes);

// -log(1 - p_fake) = logsumexp(l_1..K+1) - logsumexp(l_1..K).
double loss_unsup_real(const Tensor& logits, int num_classes);
Tensor loss_unsup_real_grad(const Tensor& logits, int num_classes);

// -log p_fake = logsumexp(l_1..K+1) - l_fake.
double loss_unsup_fake(const Tensor& logits, int num_classes);
Tensor loss_unsup_fake_grad(const Tensor& logits, int num_classes);

double total_loss(double l1, double l2, double l3);

// Squared L2 distance between the batch-mean rows of two (n, c) matrices.
double feature_matching_loss(const Tensor& real_features, const Tensor& fake_features);

}  // namespace hsigan
