#pragma once

#include <memory>
#include <vector>

#include "hsigan/layers.hpp"
#include "hsigan/tensor.hpp"

namespace hsigan {

// Define-by-run gradient tape for feed-forward chains. Every op computes its
// output eagerly and appends an explicit backward step; backward() replays
// the steps in exact reverse order, accumulating gradients per slot.
//
// Leaves are either inputs (constants, no gradient requested) or parameters
// (identified by a caller-side integer key). Gradient work is skipped for
// subtrees that contain no parameters.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int input(Tensor value);
  int param(int key, const Tensor& value);

  // conv/transposed_conv take slot ids for kernel and bias; bias may be -1.
  int conv(int x, int kernel, int bias, Stride3 stride);
  int transposed_conv(int x, int kernel, int bias, Stride3 stride);
  int dense_op(int x, int w, int b);
  int activation(int x, Act act, double slope = 0.2);
  int reshape(int x, std::vector<int> shape);
  int global_pool(int x);
  int center_pool(int x);

  // Scalar loss nodes over K+1 logits.
  int loss_supervised_op(int logits, int label, int num_classes);
  int loss_unsup_real_op(int logits, int num_classes);
  int loss_unsup_fake_op(int logits, int num_classes);

  int sum_scalars(std::vector<int> ids);
  int mean_scalars(std::vector<int> ids);
  // Stacks equal-shape tensors into (n, c) rows and averages them: (c,).
  int mean_tensors(std::vector<int> ids);
  int squared_distance(int a, int b);

  const Tensor& value(int id) const;
  // Gradient of a slot after backward(); zero tensor if the slot was never
  // reached.
  Tensor grad(int id) const;
  // Accumulated parameter gradient by caller key; nullptr if the parameter
  // never influenced the loss.
  const Tensor* grad_for_key(int key) const;

  // Seeds d(loss)=1 for a scalar slot and replays the tape. A tape can only
  // be consumed once; a second call is a state error.
  void backward(int loss_id);
  // Seeds an explicit output gradient instead of 1.
  void backward(int output_id, const Tensor& output_grad);

  std::size_t num_ops() const;

  struct Impl;  // implementation detail, defined in tape.cpp

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace hsigan
