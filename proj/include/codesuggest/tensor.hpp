#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace codesuggest::tensor {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of rank 1 to 3. Element type is float for
/// training and double for gradient checks.
template <typename T>
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, T fill = T(0));
  Array(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  /// 2-D view: leading axis by the product of the rest. Rank-1 arrays are
  /// a single row.
  std::size_t rows() const { return shape_.empty() ? 0 : shape_.size() == 1 ? 1 : shape_[0]; }
  std::size_t cols() const { return rows() == 0 ? 0 : data_.size() / rows(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  std::span<T> row(std::size_t r) { return std::span<T>(data_).subspan(r * cols(), cols()); }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data_).subspan(r * cols(), cols());
  }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  void fill(T value);
  void reshape(Shape shape);

  template <typename U>
  Array<U> cast() const {
    return Array<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
struct Parameter {
  std::string name;
  Array<T> value;
  Array<T> grad;
};

/// Ordered, named parameter registry with gradient buffers.
template <typename T>
class ParameterSet {
 public:
  Parameter<T>& add(const std::string& name, Shape shape);
  Parameter<T>& get(const std::string& name);
  const Parameter<T>& get(const std::string& name) const;
  bool has(const std::string& name) const;

  std::vector<Parameter<T>>& all() { return params_; }
  const std::vector<Parameter<T>>& all() const { return params_; }
  std::size_t element_count() const;

  void zero_grad();
  /// Uniform in (-range, range), parameters visited in registration order.
  void init_uniform(std::mt19937_64& rng, double range);

 private:
  std::vector<Parameter<T>> params_;
};

}  // namespace codesuggest::tensor
