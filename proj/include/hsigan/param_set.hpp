#pragma once

#include <string>
#include <vector>

#include "hsigan/errors.hpp"
#include "hsigan/tensor.hpp"

namespace hsigan {

// Flat ordered collection of named parameters. Order is registration order
// and defines checkpoint layout and optimizer slot indices.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Tensor> values;

  int add(const std::string& name, Tensor t) {
    names.push_back(name);
    values.push_back(std::move(t));
    return static_cast<int>(values.size()) - 1;
  }

  int size() const { return static_cast<int>(values.size()); }

  Tensor& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  const Tensor& operator[](int i) const { return values[static_cast<std::size_t>(i)]; }

  std::int64_t total_elements() const {
    std::int64_t n = 0;
    for (const auto& t : values) n += t.numel();
    return n;
  }
};

}  // namespace hsigan
