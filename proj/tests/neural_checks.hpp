#pragma once

#include <cstdint>
#include <vector>

#include "codesuggest/corpus.hpp"
#include "codesuggest/neural.hpp"

namespace testdata {

using codesuggest::neural::Architecture;

// Largest relative error between analytic and central-difference gradients
// over every parameter, 64-bit, k=8, |V|=20, K=3, sequences of 12 tokens.
double gradient_error(Architecture arch, std::size_t sampled = 0);

struct InvariantStats {
  std::size_t steps = 0;
  std::size_t mixed = 0;         // pointer rows with a non-empty memory
  double sum_error = 0.0;        // max |sum(dist) - 1|
  double mix_error = 0.0;        // max |y* - (l0 y + l1 i)|
  double absent_mass = 0.0;      // max mass of i outside m_t
  double pinned_error = 0.0;     // max |y* - y| for rows with empty memory
};

InvariantStats distribution_invariants(Architecture arch, std::size_t steps, std::uint64_t seed);

// Random encoded files with identifier introductions.
std::vector<codesuggest::corpus::EncodedFile> random_files(std::uint64_t seed, std::size_t count, std::size_t vocab,
                                                           std::size_t min_len, std::size_t max_len);

// Largest relative perplexity difference between a single pass over each
// file and the same file cut into short segments with carried state.
double state_carry_gap(Architecture arch);

struct BeamOracle {
  std::vector<int> beam_tokens;
  double beam_logprob = 0.0;
  std::vector<int> exhaustive_tokens;
  double exhaustive_logprob = 0.0;
  std::vector<int> greedy_tokens;
  std::size_t continuations = 0;
};

// Hand-built |V|=3 model; beam width 2, three tokens after context [0].
BeamOracle beam_oracle();

// The hand-built |V|=3 model itself.
codesuggest::neural::Model<double> three_token_model();

}  // namespace testdata
