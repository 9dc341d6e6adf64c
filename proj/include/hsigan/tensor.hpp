#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hsigan/errors.hpp"

namespace hsigan {

// Dense row-major n-d array of doubles. Row-major means the last extent
// varies fastest; all layer code relies on that layout.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(numel_of(shape_)), 0.0);
  }

  Tensor(std::vector<int> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (numel_of(shape_) != static_cast<std::int64_t>(data_.size()))
      throw ShapeError("tensor: shape/data length mismatch");
  }

  static Tensor full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = value;
    return t;
  }

  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const std::vector<int>& shape() const { return shape_; }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  double& at4(int a, int b, int c, int d) {
    return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d)];
  }
  double at4(int a, int b, int c, int d) const {
    return data_[static_cast<std::size_t>(((static_cast<std::int64_t>(a) * shape_[1] + b) * shape_[2] + c) * shape_[3] + d)];
  }
  double& at3(int a, int b, int c) {
    return data_[static_cast<std::size_t>((static_cast<std::int64_t>(a) * shape_[1] + b) * shape_[2] + c)];
  }
  double at3(int a, int b, int c) const {
    return data_[static_cast<std::size_t>((static_cast<std::int64_t>(a) * shape_[1] + b) * shape_[2] + c)];
  }
  double& at2(int a, int b) { return data_[static_cast<std::size_t>(static_cast<std::int64_t>(a) * shape_[1] + b)]; }
  double at2(int a, int b) const { return data_[static_cast<std::size_t>(static_cast<std::int64_t>(a) * shape_[1] + b)]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  // Reinterpret the buffer under a new shape with the same element count.
  Tensor reshaped(std::vector<int> new_shape) const {
    if (numel_of(new_shape) != numel())
      throw ShapeError("tensor: reshape element count mismatch, " + shape_str() + " -> " +
                       shape_str(new_shape));
    return Tensor(std::move(new_shape), data_);
  }

  bool all_finite() const {
    for (double x : data_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  std::string shape_str() const { return shape_str(shape_); }

  static std::string shape_str(const std::vector<int>& s) {
    std::string out = "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(s[i]);
    }
    return out + ")";
  }

  static std::int64_t numel_of(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
      if (d < 0) throw ShapeError("tensor: negative extent");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

inline double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace hsigan
