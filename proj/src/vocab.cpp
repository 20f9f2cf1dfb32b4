#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

#include "codesuggest/corpus.hpp"
#include "codesuggest/error.hpp"
#include "codesuggest/textio.hpp"

namespace codesuggest::corpus {

namespace {

template <typename Int>
Int parse_int(std::string_view field, const char* what) {
  Int value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::BadFormat, std::string("bad integer in ") + what);
  }
  return value;
}

std::vector<std::string_view> lines_of(std::string_view contents) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    lines.push_back(contents.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

}  // namespace

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& files, long min_count,
                             std::size_t max_size) {
  if (min_count < 1) throw Error(ErrorCode::BadConfig, "min_count must be >= 1");
  std::unordered_map<std::string, long> freq;
  std::size_t total = 0;
  for (const auto& file : files) {
    for (const auto& tok : file) ++freq[tok];
    total += file.size();
  }
  if (total == 0) throw Error(ErrorCode::EmptyCorpus, "no tokens to build a vocabulary from");

  long oov_count = 0;
  std::vector<std::pair<std::string, long>> kept;
  for (auto& [tok, n] : freq) {
    if (tok == kOovToken || tok == kNumToken) continue;
    if (n >= min_count) {
      kept.emplace_back(tok, n);
    } else {
      oov_count += n;
    }
  }
  auto by_freq = [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  };
  std::sort(kept.begin(), kept.end(), by_freq);
  if (max_size > 0) {
    std::size_t room = max_size > 2 ? max_size - 2 : 0;
    for (std::size_t i = room; i < kept.size(); ++i) oov_count += kept[i].second;
    if (kept.size() > room) kept.resize(room);
  }
  auto num_it = freq.find(std::string(kNumToken));
  auto oov_it = freq.find(std::string(kOovToken));
  kept.emplace_back(std::string(kNumToken), num_it == freq.end() ? 0 : num_it->second);
  kept.emplace_back(std::string(kOovToken), oov_count + (oov_it == freq.end() ? 0 : oov_it->second));
  std::sort(kept.begin(), kept.end(), by_freq);

  Vocabulary v;
  for (auto& [tok, n] : kept) {
    v.index_.emplace(tok, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(tok);
    v.counts_.push_back(n);
  }
  return v;
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  return index_.at(std::string(kOovToken));
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += escape_field(tokens_[i]);
    out += '\t';
    out += std::to_string(i);
    out += '\t';
    out += std::to_string(counts_[i]);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view contents) {
  Vocabulary v;
  for (auto line : lines_of(contents)) {
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) throw Error(ErrorCode::BadFormat, "vocabulary line needs 3 fields");
    auto id = parse_int<std::size_t>(fields[1], "vocabulary");
    if (id != v.tokens_.size()) throw Error(ErrorCode::BadFormat, "vocabulary ids must be dense");
    std::string tok = unescape_field(fields[0]);
    if (!v.index_.emplace(tok, static_cast<int>(id)).second) {
      throw Error(ErrorCode::BadFormat, "duplicate vocabulary token");
    }
    v.tokens_.push_back(std::move(tok));
    v.counts_.push_back(parse_int<long>(fields[2], "vocabulary"));
  }
  if (!v.contains(kOovToken) || !v.contains(kNumToken)) {
    throw Error(ErrorCode::BadFormat, "vocabulary lacks $OOV$ or $NUM$");
  }
  return v;
}

std::string Vocabulary::digest() const { return hex64(fnv1a64(serialize())); }

std::vector<std::string> model_tokens(const pynorm::NormalizedFile& file) {
  std::vector<std::string> out;
  out.reserve(file.tokens.size());
  for (const auto& t : file.tokens) {
    if (t.kind == pylex::TokenKind::EndMarker) continue;
    out.push_back(pylex::model_text(t));
  }
  return out;
}

EncodedFile encode(const pynorm::NormalizedFile& file, const Vocabulary& vocab, std::string name) {
  EncodedFile out;
  out.name = std::move(name);
  auto anon = file.anon_names();
  const int oov = vocab.oov_id();
  for (std::size_t i = 0; i < file.tokens.size(); ++i) {
    const auto& t = file.tokens[i];
    if (t.kind == pylex::TokenKind::EndMarker) continue;
    int id = vocab.id(pylex::model_text(t));
    out.ids.push_back(id);
    out.intro.push_back(file.intro_positions.count(i) ? 1 : 0);
    out.identifier.push_back(id != oov && anon.count(t.text) ? 1 : 0);
  }
  return out;
}

std::string write_encoded(const EncodedFile& file) {
  std::string out = std::to_string(file.ids.size()) + '\t';
  bool first = true;
  for (std::size_t i = 0; i < file.intro.size(); ++i) {
    if (!file.intro[i]) continue;
    if (!first) out += ' ';
    out += std::to_string(i);
    first = false;
  }
  out += '\n';
  for (std::size_t i = 0; i < file.ids.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(file.ids[i]);
  }
  out += '\n';
  return out;
}

EncodedFile read_encoded(std::string_view contents, int oov_id) {
  auto lines = lines_of(contents);
  if (lines.empty()) throw Error(ErrorCode::BadFormat, "empty encoded file");
  auto header = split_tabs(lines[0]);
  if (header.size() != 2) throw Error(ErrorCode::BadFormat, "encoded header needs 2 fields");
  EncodedFile out;
  auto count = parse_int<std::size_t>(header[0], "encoded header");
  if (lines.size() > 1) {
    for (const auto& f : split_ws(lines[1])) out.ids.push_back(parse_int<int>(f, "encoded ids"));
  }
  if (out.ids.size() != count) throw Error(ErrorCode::BadFormat, "encoded token count mismatch");
  out.intro.assign(count, 0);
  out.identifier.assign(count, 0);
  std::vector<int> intro_ids;
  for (const auto& f : split_ws(header[1])) {
    auto pos = parse_int<std::size_t>(f, "encoded intro positions");
    if (pos >= count) throw Error(ErrorCode::BadFormat, "intro position out of range");
    out.intro[pos] = 1;
    intro_ids.push_back(out.ids[pos]);
  }
  // Every binding's anonymous name occurs at its introduction, so the ids
  // seen at intro positions are exactly the identifier ids of this file.
  for (std::size_t i = 0; i < count; ++i) {
    int id = out.ids[i];
    out.identifier[i] =
        id != oov_id && std::find(intro_ids.begin(), intro_ids.end(), id) != intro_ids.end();
  }
  return out;
}

const char* partition_name(Partition p) {
  switch (p) {
    case Partition::Train: return "train";
    case Partition::Dev: return "dev";
    case Partition::Test: return "test";
  }
  return "?";
}

Partition parse_partition(std::string_view name) {
  if (name == "train") return Partition::Train;
  if (name == "dev") return Partition::Dev;
  if (name == "test") return Partition::Test;
  throw Error(ErrorCode::BadConfig, "unknown partition '" + std::string(name) + "'");
}

std::vector<std::string> ProjectSplit::members(Partition p) const {
  std::vector<std::string> out;
  for (const auto& [project, part] : assignment) {
    if (part == p) out.push_back(project);
  }
  return out;
}

std::string ProjectSplit::serialize() const {
  std::string out;
  for (const auto& [project, part] : assignment) {
    out += escape_field(project);
    out += '\t';
    out += partition_name(part);
    out += '\n';
  }
  return out;
}

ProjectSplit ProjectSplit::parse(std::string_view contents) {
  ProjectSplit split;
  for (auto line : lines_of(contents)) {
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2) throw Error(ErrorCode::BadFormat, "split line needs 2 fields");
    split.assignment[unescape_field(fields[0])] = parse_partition(fields[1]);
  }
  return split;
}

ProjectSplit split_projects(std::vector<std::string> projects, std::array<double, 3> ratios,
                            std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw Error(ErrorCode::BadConfig, "split ratios must be non-negative and sum to 1");
  }
  std::sort(projects.begin(), projects.end());
  projects.erase(std::unique(projects.begin(), projects.end()), projects.end());
  const auto n = projects.size();
  auto n_dev = static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n)));
  auto n_test = static_cast<std::size_t>(std::llround(ratios[2] * static_cast<double>(n)));
  if (n_dev + n_test > n) throw Error(ErrorCode::TooFewProjects, "not enough projects");
  std::size_t n_train = n - n_dev - n_test;
  std::array<std::size_t, 3> sizes{n_train, n_dev, n_test};
  for (std::size_t k = 0; k < 3; ++k) {
    if (ratios[k] > 0 && sizes[k] == 0) {
      throw Error(ErrorCode::TooFewProjects,
                  std::to_string(n) + " projects leave the " +
                      partition_name(static_cast<Partition>(k)) + " split empty");
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(projects.begin(), projects.end(), rng);
  ProjectSplit split;
  split.ratios = ratios;
  for (std::size_t i = 0; i < n; ++i) {
    Partition p = i < n_train ? Partition::Train
                  : i < n_train + n_dev ? Partition::Dev
                                        : Partition::Test;
    split.assignment[projects[i]] = p;
  }
  return split;
}

}  // namespace codesuggest::corpus
