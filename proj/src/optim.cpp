#include "codesuggest/optim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "codesuggest/error.hpp"

namespace codesuggest::tensor {

template <typename T>
double global_norm(const ParameterSet<T>& params) {
  double total = 0.0;
  for (const auto& p : params.all()) {
    for (T g : p.grad.values()) total += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(total);
}

template <typename T>
double clip_by_global_norm(ParameterSet<T>& params, double max_norm) {
  double norm = global_norm(params);
  if (norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto& p : params.all()) {
      for (T& g : p.grad.values()) g *= scale;
    }
  }
  return norm;
}

template <typename T>
void sgd_step(ParameterSet<T>& params, double lr) {
  const T rate = static_cast<T>(lr);
  for (auto& p : params.all()) {
    auto value = p.value.values();
    auto grad = p.grad.values();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= rate * grad[i];
  }
}

template double global_norm(const ParameterSet<float>&);
template double global_norm(const ParameterSet<double>&);
template double clip_by_global_norm(ParameterSet<float>&, double);
template double clip_by_global_norm(ParameterSet<double>&, double);
template void sgd_step(ParameterSet<float>&, double);
template void sgd_step(ParameterSet<double>&, double);

LogUniformSampler::LogUniformSampler(std::size_t vocab_size)
    : vocab_size_(vocab_size), log_range_(std::log(static_cast<double>(vocab_size) + 1.0)) {
  if (vocab_size == 0) throw Error(ErrorCode::BadConfig, "sampler needs a nonempty vocabulary");
}

double LogUniformSampler::probability(int id) const {
  return std::log((id + 2.0) / (id + 1.0)) / log_range_;
}

int LogUniformSampler::draw(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto id = static_cast<long>(std::floor(std::exp(uniform(rng) * log_range_))) - 1;
  return static_cast<int>(std::clamp<long>(id, 0, static_cast<long>(vocab_size_) - 1));
}

SampledNegatives LogUniformSampler::sample(std::size_t count, const std::vector<int>& exclude,
                                           std::mt19937_64& rng) const {
  std::unordered_set<int> blocked(exclude.begin(), exclude.end());
  if (count + blocked.size() > vocab_size_) {
    throw Error(ErrorCode::BadConfig, "sample size exceeds the ids available for sampling");
  }
  SampledNegatives out;
  out.ids.reserve(count);
  while (out.ids.size() < count) {
    int id = draw(rng);
    ++out.tries;
    if (blocked.insert(id).second) out.ids.push_back(id);
  }
  return out;
}

double LogUniformSampler::expected_count(int id, std::size_t tries) const {
  double p = probability(id);
  return -std::expm1(static_cast<double>(tries) * std::log1p(-p));
}

double finite_difference_check(ParameterSet<double>& params, const std::string& name,
                               const std::function<double(bool)>& loss, double epsilon) {
  params.zero_grad();
  loss(true);
  Parameter<double>& p = params.get(name);
  const Array<double> analytic = p.grad;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double saved = p.value[i];
    p.value[i] = saved + epsilon;
    double up = loss(false);
    p.value[i] = saved - epsilon;
    double down = loss(false);
    p.value[i] = saved;
    double numeric = (up - down) / (2.0 * epsilon);
    double a = analytic[i];
    double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace codesuggest::tensor
