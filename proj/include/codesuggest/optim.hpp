#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "codesuggest/tensor.hpp"

namespace codesuggest::tensor {

template <typename T>
double global_norm(const ParameterSet<T>& params);

/// Scales every gradient by max_norm/g when the global L2 norm g exceeds
/// max_norm. Returns g.
template <typename T>
double clip_by_global_norm(ParameterSet<T>& params, double max_norm);

/// p <- p - lr * g for every parameter.
template <typename T>
void sgd_step(ParameterSet<T>& params, double lr);

inline double decay_lr(double lr, double factor) { return lr * factor; }

struct SampledNegatives {
  std::vector<int> ids;
  std::size_t tries = 0;  // draws made, including rejected ones
};

/// Log-uniform (Zipfian) proposal over ids sorted by descending frequency:
/// p(i) = log((i+2)/(i+1)) / log(V+1).
class LogUniformSampler {
 public:
  explicit LogUniformSampler(std::size_t vocab_size);

  std::size_t vocab_size() const { return vocab_size_; }
  double probability(int id) const;
  int draw(std::mt19937_64& rng) const;
  /// `count` distinct ids, none of them in `exclude`.
  SampledNegatives sample(std::size_t count, const std::vector<int>& exclude, std::mt19937_64& rng) const;
  /// Expected number of times `id` appears in `tries` draws.
  double expected_count(int id, std::size_t tries) const;

 private:
  std::size_t vocab_size_;
  double log_range_;
};

/// Central-difference gradient check of one parameter. `loss(true)` must
/// run backward into the parameter set's gradient buffers; `loss(false)`
/// only evaluates. Relative error is |a - n| / max(|a|, |n|, 1e-6).
double finite_difference_check(ParameterSet<double>& params, const std::string& name,
                               const std::function<double(bool)>& loss, double epsilon = 1e-5);

}  // namespace codesuggest::tensor
