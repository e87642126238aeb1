#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "heatcast/common.hpp"

namespace heatcast {

// Dense row-major shape, at most 4 axes (batch, channel, row, col).
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int64_t> dims) {
    if (dims.size() > 4) throw std::invalid_argument("Shape: more than 4 axes");
    for (int64_t d : dims) {
      if (d <= 0) throw std::invalid_argument("Shape: non-positive dim");
      dims_[ndim_++] = d;
    }
  }

  int ndim() const { return ndim_; }
  int64_t operator[](int i) const { return dims_[i]; }

  int64_t numel() const {
    int64_t n = 1;
    for (int i = 0; i < ndim_; ++i) n *= dims_[i];
    return n;
  }

  bool operator==(const Shape& o) const {
    if (ndim_ != o.ndim_) return false;
    for (int i = 0; i < ndim_; ++i)
      if (dims_[i] != o.dims_[i]) return false;
    return true;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }

  std::string str() const {
    std::string s = "(";
    for (int i = 0; i < ndim_; ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + ")";
  }

 private:
  std::array<int64_t, 4> dims_{1, 1, 1, 1};
  int ndim_ = 0;
};

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty until a backward pass touches this tensor
  bool requires_grad = false;
};

// Value-semantics handle onto a shared dense buffer. Forward ops never
// mutate inputs; the optimizer mutates parameter values in place between
// forward passes.
template <typename T>
class Tensor {
 public:
  using scalar_type = T;

  Tensor() = default;

  static Tensor zeros(const Shape& s) { return full(s, T(0)); }

  static Tensor full(const Shape& s, T v) {
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = s;
    t.impl_->values.assign(size_t(s.numel()), v);
    return t;
  }

  static Tensor from_vector(const Shape& s, std::vector<T> v) {
    if (int64_t(v.size()) != s.numel()) {
      throw std::invalid_argument("Tensor::from_vector: size mismatch " +
                                  s.str());
    }
    Tensor t;
    t.impl_ = std::make_shared<TensorImpl<T>>();
    t.impl_->shape = s;
    t.impl_->values = std::move(v);
    return t;
  }

  static Tensor scalar(T v) { return full(Shape{1}, v); }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int64_t numel() const { return impl_->shape.numel(); }

  T* data() { return impl_->values.data(); }
  const T* data() const { return impl_->values.data(); }
  std::vector<T>& values() { return impl_->values; }
  const std::vector<T>& values() const { return impl_->values; }

  T item() const {
    if (numel() != 1) throw std::logic_error("Tensor::item: not a scalar");
    return impl_->values[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool b) {
    impl_->requires_grad = b;
    return *this;
  }

  bool has_grad() const { return !impl_->grad.empty(); }

  // Zero-filled on first use; accumulated into by backward closures. The
  // handle is shared, so gradient state is reachable through const handles
  // (backward closures capture const copies of their inputs).
  std::vector<T>& ensure_grad() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), T(0));
    return impl_->grad;
  }
  std::vector<T>& grad() { return impl_->grad; }
  const std::vector<T>& grad() const { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }

  std::shared_ptr<TensorImpl<T>> impl() const { return impl_; }

  // Convenience element access for tests and small code paths.
  T& at(std::initializer_list<int64_t> idx) {
    return impl_->values[offset(idx)];
  }
  T at(std::initializer_list<int64_t> idx) const {
    return impl_->values[offset(idx)];
  }

  Tensor<T> clone() const {
    Tensor<T> t = from_vector(shape(), impl_->values);
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> v(impl_->values.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = U(impl_->values[i]);
    return Tensor<U>::from_vector(shape(), std::move(v));
  }

 private:
  size_t offset(std::initializer_list<int64_t> idx) const {
    const Shape& s = impl_->shape;
    if (int(idx.size()) != s.ndim())
      throw std::logic_error("Tensor::at: rank mismatch");
    size_t off = 0;
    int i = 0;
    for (int64_t v : idx) {
      if (v < 0 || v >= s[i]) throw std::out_of_range("Tensor::at");
      off = off * size_t(s[i]) + size_t(v);
      ++i;
    }
    return off;
  }

  std::shared_ptr<TensorImpl<T>> impl_;
};

}  // namespace heatcast
