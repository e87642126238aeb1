#pragma once

#include <map>
#include <string>
#include <vector>

#include "heatcast/tensor.hpp"

namespace heatcast {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

// Ordered collection of named parameter tensors. Iteration order is the
// registration order, which checkpoints and optimizer state rely on.
template <typename T>
class ParamSet {
 public:
  Tensor<T>& add(const std::string& name, Tensor<T> t) {
    if (index_.count(name))
      throw std::logic_error("ParamSet: duplicate parameter '" + name + "'");
    index_[name] = items_.size();
    items_.push_back(NamedTensor<T>{name, std::move(t)});
    return items_.back().tensor;
  }

  bool has(const std::string& name) const { return index_.count(name) > 0; }

  Tensor<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::logic_error("ParamSet: unknown parameter '" + name + "'");
    return items_[it->second].tensor;
  }
  const Tensor<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      throw std::logic_error("ParamSet: unknown parameter '" + name + "'");
    return items_[it->second].tensor;
  }

  size_t size() const { return items_.size(); }
  NamedTensor<T>& operator[](size_t i) { return items_[i]; }
  const NamedTensor<T>& operator[](size_t i) const { return items_[i]; }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  int64_t total_scalars() const {
    int64_t n = 0;
    for (const auto& item : items_) n += item.tensor.numel();
    return n;
  }

  void set_requires_grad(bool b) {
    for (auto& item : items_) item.tensor.set_requires_grad(b);
  }

  void zero_grad() {
    for (auto& item : items_) item.tensor.zero_grad();
  }

  ParamSet clone() const {
    ParamSet out;
    for (const auto& item : items_) out.add(item.name, item.tensor.clone());
    return out;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& item : items_)
      out.add(item.name, item.tensor.template cast<U>());
    return out;
  }

 private:
  std::vector<NamedTensor<T>> items_;
  std::map<std::string, size_t> index_;
};

}  // namespace heatcast
