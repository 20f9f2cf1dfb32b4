#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "codesuggest/corpus.hpp"
#include "codesuggest/ngram.hpp"
#include "codesuggest/neural.hpp"

namespace codesuggest::eval {

/// 0-based rank of `target`: ids with higher probability, plus ids of equal
/// probability and smaller index.
std::size_t target_rank(std::span<const double> dist, int target);

struct Bucket {
  std::size_t count = 0;
  std::size_t hits1 = 0;
  std::size_t hits5 = 0;

  double accuracy() const;     // percent
  double accuracy_at5() const; // percent
};

struct MetricsReport {
  std::string name;  // partition or model label
  double nll = 0.0;  // summed natural-log negative log-likelihood
  Bucket all;
  Bucket ids;
  Bucket other;

  double perplexity() const;
};

class Accumulator {
 public:
  void add(std::span<const double> dist, int target, bool identifier);
  /// Probability-only update for perplexity (no ranking).
  void add_probability(double p, bool identifier);
  void merge(const Accumulator& other);
  MetricsReport report(std::string name = {}) const;

 private:
  MetricsReport totals_;
};

double perplexity(double nll, std::size_t count);

MetricsReport evaluate(neural::Model<float>& model, const std::vector<corpus::EncodedFile>& files,
                       std::size_t lanes, std::size_t unroll, std::string name = {});
MetricsReport evaluate(const ngram::NgramModel& model, const std::vector<corpus::EncodedFile>& files,
                       std::string name = {});

/// Structured report: one object per row with PP, Acc and Acc@5 columns.
std::string report_json(const std::vector<MetricsReport>& rows);
/// Human-readable table with PP / Acc (All, IDs, Other) / Acc@5 (All, IDs, Other).
std::string report_table(const std::vector<MetricsReport>& rows);

}  // namespace codesuggest::eval
