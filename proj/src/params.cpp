#include "mmseq/params.hpp"

#include <cmath>

#include "mmseq/error.hpp"

namespace mmseq {

ParamId ParameterStore::add(std::string name, std::size_t rows, std::size_t cols) {
  if (rows < 1 || cols < 1) {
    throw ShapeError("ParameterStore: parameter '" + name + "' must have positive dimensions");
  }
  if (find(name).valid()) {
    throw ConfigError("ParameterStore: duplicate parameter name '" + name + "'");
  }
  entries_.push_back({std::move(name), Matrix(rows, cols)});
  return ParamId{entries_.size() - 1};
}

std::size_t ParameterStore::coord_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.data.size();
  return n;
}

Matrix& ParameterStore::value(ParamId id) { return entries_[id.index].value; }

const Matrix& ParameterStore::value(ParamId id) const { return entries_[id.index].value; }

ParamId ParameterStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return ParamId{i};
  }
  return ParamId{};
}

void Gradients::reshape(const ParameterStore& store) {
  grads_.resize(store.count());
  for (std::size_t i = 0; i < store.count(); ++i) {
    const Matrix& v = store.value_at(i);
    if (!grads_[i].same_shape(v)) grads_[i] = Matrix(v.rows, v.cols);
  }
}

void Gradients::zero() {
  for (Matrix& g : grads_) std::fill(g.data.begin(), g.data.end(), 0.0);
}

void Gradients::add(const Gradients& other) {
  if (other.grads_.size() != grads_.size()) {
    throw ShapeError("Gradients::add: buffer counts differ");
  }
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    Matrix& a = grads_[i];
    const Matrix& b = other.grads_[i];
    for (std::size_t k = 0; k < a.data.size(); ++k) a.data[k] += b.data[k];
  }
}

std::size_t Gradients::first_non_finite() const {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    if (!all_finite(grads_[i])) return i;
  }
  return grads_.size();
}

}  // namespace mmseq
