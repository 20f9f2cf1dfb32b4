#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "codesuggest/corpus.hpp"
#include "codesuggest/pynorm.hpp"
#include "codesuggest/synth.hpp"

namespace codesuggest::pipeline {

namespace fs = std::filesystem;

struct NormalizeSummary {
  std::size_t written = 0;
  std::vector<std::string> failures;  // "path: diagnostic"
};

/// Normalizes every .py file below `input` into `output`, mirroring the
/// tree: name.py becomes name.norm (token stream) plus name.sym (symbols).
NormalizeSummary normalize_tree(const fs::path& input, const fs::path& output,
                                pynorm::Numbering numbering = pynorm::Numbering::sequential());

struct CorpusEntry {
  std::string project;  // first path component below the corpus root
  std::string name;     // path below the root without extension
  fs::path norm;
};

/// Every .norm file below `root`, sorted by name.
std::vector<CorpusEntry> list_corpus(const fs::path& root);

/// Reads a .norm stream and its .sym sidecar (absent sidecar = no symbols).
pynorm::NormalizedFile load_file(const fs::path& norm);

struct VocabBuild {
  corpus::Vocabulary vocab;
  corpus::ProjectSplit split;
};

/// Splits projects, then builds the vocabulary on the training projects.
VocabBuild build_vocabulary(const fs::path& root, std::array<double, 3> ratios, std::uint64_t seed,
                            long min_count = 5, std::size_t max_size = 0);

std::vector<corpus::EncodedFile> load_partition(const fs::path& root, const corpus::ProjectSplit& split,
                                                corpus::Partition partition, const corpus::Vocabulary& vocab);

/// Writes synth files as <out>/p<i % projects>/<name>.{norm,sym,truth}.
void write_synth(const std::vector<synth::File>& files, const fs::path& output, std::size_t projects);

}  // namespace codesuggest::pipeline
