#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "codesuggest/pynorm.hpp"

namespace codesuggest::corpus {

inline constexpr std::string_view kOovToken = "$OOV$";
inline constexpr std::string_view kNumToken = "$NUM$";

/// Token <-> id bijection. Ids are dense and ordered by descending corpus
/// frequency (ties by token text), which the log-uniform sampler relies on.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Tokens with frequency below min_count are left out and later encode
  /// as $OOV$. max_size (0 = unlimited) caps |V| including the specials.
  static Vocabulary build(const std::vector<std::vector<std::string>>& files, long min_count = 5,
                          std::size_t max_size = 0);

  std::size_t size() const { return tokens_.size(); }
  int id(std::string_view token) const;  // $OOV$ id when unknown
  bool contains(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  long count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  int oov_id() const { return id(kOovToken); }
  int num_id() const { return id(kNumToken); }

  /// "token\tid\tcount" per line, token escaped.
  std::string serialize() const;
  static Vocabulary parse(std::string_view contents);
  /// Hex FNV-1a digest of the serialized form.
  std::string digest() const;

 private:
  std::vector<std::string> tokens_;
  std::vector<long> counts_;
  std::unordered_map<std::string, int> index_;
};

/// Model-level token sequence of a normalized file (ENDMARKER dropped).
std::vector<std::string> model_tokens(const pynorm::NormalizedFile& file);

struct EncodedFile {
  std::string name;
  std::vector<int> ids;
  std::vector<std::uint8_t> intro;       // position introduces an identifier
  std::vector<std::uint8_t> identifier;  // token counts in the IDs bucket

  std::size_t size() const { return ids.size(); }
};

EncodedFile encode(const pynorm::NormalizedFile& file, const Vocabulary& vocab,
                   std::string name = {});

/// Encoded corpus file: header "count\tintro positions", then the ids.
std::string write_encoded(const EncodedFile& file);
EncodedFile read_encoded(std::string_view contents, int oov_id);

enum class Partition { Train, Dev, Test };
const char* partition_name(Partition p);
Partition parse_partition(std::string_view name);

struct ProjectSplit {
  std::map<std::string, Partition> assignment;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};

  std::vector<std::string> members(Partition p) const;
  std::string serialize() const;  // "project\tpartition" per line
  static ProjectSplit parse(std::string_view contents);
};

/// Deterministic project-level split. Throws TooFewProjects when a split
/// with a positive ratio would receive no project.
ProjectSplit split_projects(std::vector<std::string> projects, std::array<double, 3> ratios,
                            std::uint64_t seed);

/// One TBPTT segment; per-position arrays are lane-major [lanes x steps].
struct Segment {
  std::size_t lanes = 0;
  std::size_t steps = 0;  // capacity L
  std::size_t length = 0; // steps that hold at least one valid position
  std::vector<int> inputs;
  std::vector<int> targets;
  std::vector<std::uint8_t> valid;        // input position exists
  std::vector<std::uint8_t> target_mask;  // target exists (not the last token of a file)
  std::vector<std::uint8_t> reset;        // first token of a file
  std::vector<std::uint8_t> intro;
  std::vector<int> intro_ids;             // input id where intro is set, else -1
  std::vector<std::uint8_t> target_identifier;
  std::vector<int> file_index;            // -1 for padding

  std::size_t at(std::size_t lane, std::size_t step) const { return lane * steps + step; }
};

/// Packs whole files into lanes (greedy, longest file first, onto the
/// lane with the smallest total) and cuts the lanes into segments of L.
class BatchStream {
 public:
  BatchStream(const std::vector<EncodedFile>& files, std::size_t lanes, std::size_t unroll);

  std::size_t lanes() const { return lanes_; }
  std::size_t unroll() const { return unroll_; }
  std::size_t segment_count() const { return segments_; }
  Segment segment(std::size_t index) const;
  /// Files in lane order, for inspection.
  const std::vector<std::vector<std::size_t>>& lane_files() const { return lane_files_; }

 private:
  struct Position {
    std::size_t file;
    std::size_t offset;
  };
  const std::vector<EncodedFile>* files_;
  std::size_t lanes_;
  std::size_t unroll_;
  std::size_t segments_ = 0;
  std::vector<std::vector<std::size_t>> lane_files_;
  std::vector<std::vector<Position>> lane_positions_;
};

}  // namespace codesuggest::corpus
