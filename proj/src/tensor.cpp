#include "codesuggest/tensor.hpp"

#include <algorithm>

#include "codesuggest/error.hpp"

namespace codesuggest::tensor {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
Array<T>::Array(Shape shape, T fill) : shape_(std::move(shape)) {
  if (shape_.empty() || shape_.size() > 3) {
    throw Error(ErrorCode::ShapeMismatch, "arrays have rank 1 to 3, got " + shape_string(shape_));
  }
  data_.assign(shape_size(shape_), fill);
}

template <typename T>
Array<T>::Array(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_.empty() || shape_.size() > 3 || shape_size(shape_) != data_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "value count does not match shape " + shape_string(shape_));
  }
}

template <typename T>
void Array<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
void Array<T>::reshape(Shape shape) {
  if (shape.empty() || shape.size() > 3 || shape_size(shape) != data_.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

template <typename T>
Parameter<T>& ParameterSet<T>::add(const std::string& name, Shape shape) {
  if (has(name)) throw Error(ErrorCode::BadConfig, "duplicate parameter " + name);
  Array<T> value(shape);
  Array<T> grad(std::move(shape));
  params_.push_back(Parameter<T>{name, std::move(value), std::move(grad)});
  return params_.back();
}

template <typename T>
Parameter<T>& ParameterSet<T>::get(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::BadFormat, "no parameter named " + name);
}

template <typename T>
const Parameter<T>& ParameterSet<T>::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::BadFormat, "no parameter named " + name);
}

template <typename T>
bool ParameterSet<T>::has(const std::string& name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const auto& p) { return p.name == name; });
}

template <typename T>
std::size_t ParameterSet<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& p : params_) p.grad.fill(T(0));
}

template <typename T>
void ParameterSet<T>::init_uniform(std::mt19937_64& rng, double range) {
  std::uniform_real_distribution<double> dist(-range, range);
  for (auto& p : params_) {
    for (auto& v : p.value.values()) v = static_cast<T>(dist(rng));
  }
}

template class Array<float>;
template class Array<double>;
template class ParameterSet<float>;
template class ParameterSet<double>;

}  // namespace codesuggest::tensor
