#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "codesuggest/corpus.hpp"
#include "codesuggest/neural.hpp"

namespace codesuggest::neural {

/// Per vocabulary id: 1 when the token is an anonymous name such as
/// "function3" or "var12".
std::vector<std::uint8_t> anonymous_ids(const corpus::Vocabulary& vocab);

struct Hypothesis {
  std::vector<int> tokens;
  double logprob = 0.0;
};

/// Feeds `context` through a fresh single-lane state.
template <typename T>
std::vector<double> prime(Model<T>& model, DecodeState<T>& state, const std::vector<int>& context,
                          const std::vector<std::uint8_t>& intro);

/// Length-m beam search after `context`; beam 1 is the greedy chain. Ties go
/// to the lexicographically smaller token sequence. A generated anonymous
/// name not seen before in the hypothesis counts as an introduction.
/// Returns the final beam, best first.
template <typename T>
std::vector<Hypothesis> suggest(Model<T>& model, const std::vector<int>& context,
                                const std::vector<std::uint8_t>& intro, std::size_t m, std::size_t beam,
                                const std::vector<std::uint8_t>& anonymous = {});

struct TraceRecord {
  int input = 0;
  std::optional<std::array<double, 2>> lambda;  // absent while memory is empty
  std::vector<std::pair<int, double>> slots;    // (token id, alpha), oldest first
  std::vector<std::pair<int, double>> top;      // five most likely next tokens
};

template <typename T>
std::vector<TraceRecord> trace(Model<T>& model, const std::vector<int>& context,
                               const std::vector<std::uint8_t>& intro);

/// Most likely `n` ids, probability descending then id ascending.
std::vector<std::pair<int, double>> top_tokens(const std::vector<double>& dist, std::size_t n);

std::string trace_jsonl(const std::vector<TraceRecord>& records, const corpus::Vocabulary& vocab);
/// Text matrix: one line per step, `width` tab-separated alpha columns.
std::string trace_heatmap(const std::vector<TraceRecord>& records, std::size_t width);

}  // namespace codesuggest::neural
