#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "codesuggest/neural.hpp"
#include "codesuggest/train.hpp"

namespace codesuggest::cli {

/// Everything a run needs besides its data. `lanes` 0 means the
/// architecture default (30 for the pointer model, 75 otherwise).
struct RunConfig {
  neural::ModelConfig model;
  neural::TrainOptions train;
  std::size_t vocab_cap = 0;  // 0 = no cap
  std::size_t min_count = 5;
  std::string corpus;
  std::string vocab;
  std::string checkpoint;
  std::string report;

  RunConfig();
  /// Sets one field from its key=value spelling; BadConfig on unknown keys
  /// or unparsable values.
  void set(std::string_view key, std::string_view value);
  /// Resolves architecture defaults and checks ranges.
  void finalize();

  /// Snapshot stored in checkpoints; output paths are left out so a rerun
  /// to another location produces the same bytes.
  std::string to_json() const;
  static RunConfig from_json(std::string_view text);
};

/// "key = value" lines; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_config_file(std::string_view text);

std::size_t default_lanes(neural::Architecture arch);

struct Checkpoint {
  int version = 1;
  RunConfig config;
  std::string vocab_digest;
  neural::Model<float> model;
};

/// Magic line, one-line structured header, then per array: u32 name length,
/// name, u32 rank, u32 dims, float32 values; all little-endian.
std::string write_checkpoint(const neural::Model<float>& model, const RunConfig& config,
                             const std::string& vocab_digest);
Checkpoint read_checkpoint(std::string_view bytes);
/// VocabMismatch unless the digests agree.
void check_vocab(const Checkpoint& checkpoint, const std::string& vocab_digest);

}  // namespace codesuggest::cli
