#include "doctest.h"

#include <string>
#include <vector>

#include "codesuggest/corpus.hpp"
#include "codesuggest/error.hpp"
#include "codesuggest/pylex.hpp"
#include "codesuggest/pynorm.hpp"

using namespace codesuggest;
using namespace codesuggest::corpus;

namespace {

std::vector<std::string> repeat(const std::string& token, int n) { return std::vector<std::string>(static_cast<std::size_t>(n), token); }

EncodedFile synthetic(std::size_t length, int base) {
  EncodedFile f;
  for (std::size_t i = 0; i < length; ++i) {
    f.ids.push_back(base + static_cast<int>(i));
    f.intro.push_back(i == 1);
    f.identifier.push_back(0);
  }
  return f;
}

}  // namespace

TEST_CASE("frequency threshold") {
  auto file = repeat("foo", 4);
  auto bar = repeat("bar", 5);
  file.insert(file.end(), bar.begin(), bar.end());
  auto vocab = Vocabulary::build({file}, 5);
  CHECK(vocab.contains("bar"));
  CHECK_FALSE(vocab.contains("foo"));
  CHECK(vocab.id("foo") == vocab.oov_id());
  CHECK(vocab.id("bar") != vocab.oov_id());
  CHECK(vocab.contains(kOovToken));
  CHECK(vocab.contains(kNumToken));
  CHECK(vocab.size() == 3);
}

TEST_CASE("ids are dense and bijective") {
  std::vector<std::string> f;
  for (const char* t : {"a", "b", "c"}) {
    auto r = repeat(t, t[0] == 'a' ? 9 : t[0] == 'b' ? 7 : 8);
    f.insert(f.end(), r.begin(), r.end());
  }
  auto vocab = Vocabulary::build({f}, 1);
  for (std::size_t i = 0; i < vocab.size(); ++i) CHECK(vocab.id(vocab.token(static_cast<int>(i))) == static_cast<int>(i));
  CHECK(vocab.id("a") < vocab.id("c"));
  CHECK(vocab.id("c") < vocab.id("b"));
}

TEST_CASE("empty corpus") { CHECK_THROWS_AS(Vocabulary::build({}, 5), Error); }

TEST_CASE("size cap keeps the most frequent tokens") {
  std::vector<std::string> f;
  for (int i = 0; i < 10; ++i) {
    auto r = repeat("t" + std::to_string(i), 20 - i);
    f.insert(f.end(), r.begin(), r.end());
  }
  auto vocab = Vocabulary::build({f}, 1, 5);
  CHECK(vocab.size() == 5);
  CHECK(vocab.contains("t0"));
  CHECK(vocab.contains("t2"));
  CHECK_FALSE(vocab.contains("t3"));
}

TEST_CASE("vocabulary file round trip") {
  std::vector<std::string> f{"x", "x", "a\tb", "a\tb", "'\\n'", "'\\n'"};
  auto vocab = Vocabulary::build({f}, 2);
  auto copy = Vocabulary::parse(vocab.serialize());
  CHECK(copy.size() == vocab.size());
  CHECK(copy.digest() == vocab.digest());
  CHECK(copy.id("a\tb") == vocab.id("a\tb"));
  CHECK(copy.count(copy.id("x")) == 2);
}

TEST_CASE("encoding only rewrites rare tokens") {
  auto norm = pynorm::normalize(pylex::tokenize("def load(path):\n    return path\nload(1)\nload(2)\n"));
  auto tokens = model_tokens(norm);
  auto vocab = Vocabulary::build({tokens}, 2);
  auto enc = encode(norm, vocab, "f");
  REQUIRE(enc.size() == tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& back = vocab.token(enc.ids[i]);
    CHECK((back == tokens[i] || (back == kOovToken && !vocab.contains(tokens[i]))));
  }
  // intro flags at function1 and arg1
  CHECK(enc.intro[1]);
  CHECK(enc.intro[3]);
  std::size_t intros = 0;
  for (auto v : enc.intro) intros += v;
  CHECK(intros == 2);
  CHECK(enc.identifier[1]);
  CHECK_FALSE(enc.identifier[0]);

  auto copy = read_encoded(write_encoded(enc), vocab.oov_id());
  CHECK(copy.ids == enc.ids);
  CHECK(copy.intro == enc.intro);
}

TEST_CASE("project split") {
  std::vector<std::string> projects;
  for (int i = 0; i < 10; ++i) projects.push_back("p" + std::to_string(i));
  auto split = split_projects(projects, {0.8, 0.1, 0.1}, 7);
  CHECK(split.members(Partition::Train).size() == 8);
  CHECK(split.members(Partition::Dev).size() == 1);
  CHECK(split.members(Partition::Test).size() == 1);
  CHECK(split_projects(projects, {0.8, 0.1, 0.1}, 7).assignment == split.assignment);
  CHECK(ProjectSplit::parse(split.serialize()).assignment == split.assignment);
  CHECK_THROWS_AS(split_projects({"a", "b"}, {0.8, 0.1, 0.1}, 7), Error);
}

TEST_CASE("segmentation of one file") {
  std::vector<EncodedFile> files{synthetic(7, 0)};
  BatchStream stream(files, 1, 3);
  REQUIRE(stream.segment_count() == 3);
  std::vector<std::size_t> lengths;
  std::size_t resets = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    auto seg = stream.segment(s);
    lengths.push_back(seg.length);
    for (std::size_t t = 0; t < seg.steps; ++t) resets += seg.reset[seg.at(0, t)];
    if (s == 0) CHECK(seg.reset[0]);
  }
  CHECK(lengths == std::vector<std::size_t>{3, 3, 1});
  CHECK(resets == 1);
}

TEST_CASE("two files in one lane") {
  std::vector<EncodedFile> files{synthetic(4, 0), synthetic(3, 10)};
  BatchStream stream(files, 1, 10);
  auto seg = stream.segment(0);
  std::vector<std::size_t> reset_at;
  for (std::size_t t = 0; t < seg.steps; ++t) {
    if (seg.reset[seg.at(0, t)]) reset_at.push_back(t);
  }
  CHECK(reset_at == std::vector<std::size_t>{0, 4});
  // the last token of each file has no target
  CHECK_FALSE(seg.target_mask[seg.at(0, 3)]);
  CHECK_FALSE(seg.target_mask[seg.at(0, 6)]);
  CHECK(seg.intro[seg.at(0, 1)]);
  CHECK(seg.intro_ids[seg.at(0, 1)] == 1);
  CHECK(seg.intro_ids[seg.at(0, 0)] == -1);
}

TEST_CASE("targets are inputs shifted within each file") {
  std::vector<EncodedFile> files;
  for (int f = 0; f < 9; ++f) files.push_back(synthetic(static_cast<std::size_t>(3 + 5 * f % 11), 100 * f));
  BatchStream stream(files, 4, 5);
  std::size_t targets = 0;
  std::vector<std::vector<int>> lane_inputs(4), lane_targets(4);
  std::vector<std::vector<int>> lane_mask(4);
  for (std::size_t s = 0; s < stream.segment_count(); ++s) {
    auto seg = stream.segment(s);
    for (std::size_t b = 0; b < seg.lanes; ++b) {
      for (std::size_t t = 0; t < seg.steps; ++t) {
        auto i = seg.at(b, t);
        if (!seg.valid[i]) continue;
        lane_inputs[b].push_back(seg.inputs[i]);
        lane_targets[b].push_back(seg.targets[i]);
        lane_mask[b].push_back(seg.target_mask[i]);
        targets += seg.target_mask[i];
      }
    }
  }
  std::size_t expected = 0;
  for (const auto& f : files) expected += f.size() - 1;
  CHECK(targets == expected);
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t i = 0; i + 1 < lane_inputs[b].size(); ++i) {
      if (lane_mask[b][i]) CHECK(lane_targets[b][i] == lane_inputs[b][i + 1]);
    }
  }
}

TEST_CASE("lane packing balances totals") {
  std::vector<EncodedFile> files{synthetic(10, 0), synthetic(9, 0), synthetic(2, 0), synthetic(1, 0)};
  BatchStream stream(files, 2, 4);
  const auto& lanes = stream.lane_files();
  CHECK(lanes[0] == std::vector<std::size_t>{0, 3});
  CHECK(lanes[1] == std::vector<std::size_t>{1, 2});
}
