#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace codesuggest::ngram {

/// Per-order discounts for counts 1, 2 and 3+.
struct Discounts {
  std::array<double, 3> d{0.75, 0.75, 0.75};
  std::array<long, 4> count_of_counts{0, 0, 0, 0};  // n1..n4
  bool degenerate = false;                          // some discount fell back to 0.75

  double for_count(long c) const { return c <= 0 ? 0.0 : d[static_cast<std::size_t>(std::min<long>(c, 3) - 1)]; }
};

/// Count-of-counts estimate. D_k uses the closed form when n1..n_{k+1} are
/// all positive, else 0.75; the result is clamped to [0, k].
Discounts estimate_discounts(std::array<long, 4> count_of_counts);

/// Interpolated Modified Kneser-Ney model. The highest order uses raw
/// counts, lower orders continuation counts; order 1 interpolates with the
/// uniform distribution over the vocabulary.
class NgramModel {
 public:
  NgramModel() = default;

  /// Each inner vector is one file; n-grams never cross files.
  static NgramModel train(const std::vector<std::vector<int>>& files, int order,
                          std::size_t vocab_size);

  int order() const { return order_; }
  std::size_t vocab_size() const { return vocab_size_; }
  const Discounts& discounts(int m) const { return levels_.at(static_cast<std::size_t>(m - 1)).discounts; }

  /// Natural-log probability of `token` after `context`; only the last
  /// order-1 context ids are used.
  double logprob(std::span<const int> context, int token) const;
  double prob(std::span<const int> context, int token) const;
  /// Full next-token distribution (size vocab_size).
  void distribution(std::span<const int> context, std::vector<double>& out) const;

  /// Count (raw or continuation, as used by the smoothing) of an n-gram.
  long count(std::span<const int> gram) const;

  /// exp of the mean negative log-likelihood over every token after the
  /// first of each file.
  double perplexity(const std::vector<std::vector<int>>& files) const;

  /// Text dump: header with discounts, then per-order "context\ttoken\tcount".
  std::string serialize() const;
  static NgramModel parse(std::string_view contents);

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<int>& key) const noexcept;
  };
  struct ContextStats {
    std::vector<std::pair<int, long>> successors;  // sorted by token id
    long total = 0;
    std::array<long, 3> buckets{0, 0, 0};  // successors with count 1, 2, 3+
  };
  struct Level {
    std::unordered_map<std::vector<int>, ContextStats, KeyHash> contexts;
    Discounts discounts;
  };

  void finalize();
  const ContextStats* find(int m, std::span<const int> context) const;
  double level_prob(int m, std::span<const int> context, int token) const;

  int order_ = 0;
  std::size_t vocab_size_ = 0;
  std::vector<Level> levels_;  // levels_[m-1] holds order m
  std::vector<double> unigram_;
};

}  // namespace codesuggest::ngram
