#pragma once

#include <cstdint>
#include <vector>

namespace testdata {

// Interpolated modified Kneser-Ney by brute force: every count is found by
// scanning the corpus. Highest order uses raw counts, lower orders the
// number of distinct left neighbours, order 0 is uniform.
class MknOracle {
 public:
  MknOracle(std::vector<std::vector<int>> files, int order, int vocab);

  double prob(const std::vector<int>& context, int token) const;
  double perplexity() const;
  double discount(int m, int k) const;  // k = 1, 2, 3 (3+)

 private:
  long raw_count(const std::vector<int>& gram) const;
  long continuation_count(const std::vector<int>& gram) const;
  long count(int m, const std::vector<int>& gram) const;
  double level(int m, const std::vector<int>& context, int token) const;

  std::vector<std::vector<int>> files_;
  int order_;
  int vocab_;
  std::vector<std::vector<double>> discounts_;  // [m-1][k-1]
};

// Small corpus of `tokens` ids over `vocab` symbols, split into `files`,
// with enough repetition that every count-of-count bucket is populated.
std::vector<std::vector<int>> toy_corpus(std::uint64_t seed, int tokens, int vocab, int files);

}  // namespace testdata
