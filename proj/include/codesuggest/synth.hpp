#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codesuggest/pynorm.hpp"

namespace codesuggest::synth {

struct Options {
  std::size_t files = 300;
  std::size_t min_distance = 60;
  std::size_t max_distance = 100;
  std::size_t reuses = 4;       // per introduced identifier
  std::size_t max_blocks = 3;   // identifiers per file, each of a distinct group
  std::size_t name_range = 20;  // anonymous indices drawn from 1..name_range
  std::uint64_t seed = 1;
};

struct Reuse {
  std::size_t position = 0;  // token index of the re-use
  std::size_t intro = 0;     // token index of the introduction
  std::size_t previous = 0;  // token index of the previous occurrence
  std::string token;
};

struct File {
  std::string name;
  pynorm::NormalizedFile normalized;
  std::vector<Reuse> reuses;
};

/// Files whose identifiers are introduced once and re-used, each re-use a
/// distance in [min_distance, max_distance] after the previous occurrence
/// and announced by a group cue ("return" function, "raise" class, "yield"
/// variable). Filler between re-uses holds no identifiers and no cues.
std::vector<File> generate(const Options& options);

/// "position\tintro\tprevious\ttoken" per re-use.
std::string write_truth(const File& file);

}  // namespace codesuggest::synth
