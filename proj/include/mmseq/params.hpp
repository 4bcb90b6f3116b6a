#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mmseq/linalg.hpp"

namespace mmseq {

// Handle into a ParameterStore. Bias vectors are stored as n x 1 matrices.
struct ParamId {
  std::size_t index = static_cast<std::size_t>(-1);
  bool valid() const { return index != static_cast<std::size_t>(-1); }
};

// Named collection of weight matrices and bias vectors. Values only;
// gradient buffers live in a shape-matched Gradients object so that
// per-item buffers can be reduced in a fixed order.
class ParameterStore {
 public:
  ParamId add(std::string name, std::size_t rows, std::size_t cols);

  std::size_t count() const { return entries_.size(); }
  std::size_t coord_count() const;

  Matrix& value(ParamId id);
  const Matrix& value(ParamId id) const;
  Matrix& value_at(std::size_t i) { return entries_[i].value; }
  const Matrix& value_at(std::size_t i) const { return entries_[i].value; }
  const std::string& name_at(std::size_t i) const { return entries_[i].name; }
  ParamId find(std::string_view name) const;

 private:
  struct Entry {
    std::string name;
    Matrix value;
  };
  std::vector<Entry> entries_;
};

// Gradient buffers paired with a ParameterStore, one matrix per parameter.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterStore& store) { reshape(store); }

  void reshape(const ParameterStore& store);
  void zero();
  // Elementwise += in fixed parameter order.
  void add(const Gradients& other);

  std::size_t count() const { return grads_.size(); }
  Matrix& at(ParamId id) { return grads_[id.index]; }
  const Matrix& at(ParamId id) const { return grads_[id.index]; }
  Matrix& at_index(std::size_t i) { return grads_[i]; }
  const Matrix& at_index(std::size_t i) const { return grads_[i]; }

  // Index of the first parameter holding a non-finite gradient, or count().
  std::size_t first_non_finite() const;

 private:
  std::vector<Matrix> grads_;
};

}  // namespace mmseq
