#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "codesuggest/checkpoint.hpp"
#include "codesuggest/error.hpp"
#include "codesuggest/pipeline.hpp"
#include "codesuggest/pylex.hpp"
#include "codesuggest/synth.hpp"
#include "json.hpp"

using namespace codesuggest;
namespace fs = std::filesystem;

namespace {

template <typename F>
ErrorCode code_from(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("codesuggest_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("config keys and validation") {
  cli::RunConfig c;
  c.set("arch", "lstm");
  c.set("hidden", "64");
  c.set("lr", "0.5");
  c.set("seed", "42");
  CHECK(c.model.arch == neural::Architecture::Lstm);
  CHECK(c.model.hidden == 64);
  CHECK(c.train.lr == 0.5);
  CHECK(c.train.seed == 42);
  CHECK(code_from([&] { c.set("nonsense", "1"); }) == ErrorCode::BadConfig);
  CHECK(code_from([&] { c.set("hidden", "abc"); }) == ErrorCode::BadConfig);
  CHECK(code_from([&] { c.set("arch", "gru"); }) == ErrorCode::BadConfig);

  auto pairs = cli::parse_config_file("# comment\narch = pointer\n\nmemory=10  # trailing\n");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::make_pair(std::string("arch"), std::string("pointer")));
  CHECK(pairs[1] == std::make_pair(std::string("memory"), std::string("10")));
}

TEST_CASE("lane defaults follow the architecture") {
  cli::RunConfig c;
  c.set("arch", "pointer");
  c.finalize();
  CHECK(c.train.lanes == 30);
  cli::RunConfig d;
  d.set("arch", "attention");
  d.finalize();
  CHECK(d.train.lanes == 75);
}

TEST_CASE("config json round trip leaves paths out") {
  cli::RunConfig c;
  c.set("arch", "attention");
  c.set("memory", "7");
  c.set("dropout", "0.25");
  c.checkpoint = "/some/where.ckpt";
  c.finalize();
  auto text = c.to_json();
  CHECK(text.find("where.ckpt") == std::string::npos);
  auto back = cli::RunConfig::from_json(text);
  CHECK(back.model.arch == neural::Architecture::Attention);
  CHECK(back.model.memory == 7);
  CHECK(back.model.dropout == 0.25);
  CHECK(back.to_json() == text);
}

TEST_CASE("checkpoint round trip") {
  cli::RunConfig c;
  c.model.arch = neural::Architecture::Pointer;
  c.model.vocab_size = 12;
  c.model.hidden = 6;
  c.model.memory = 4;
  c.finalize();
  auto model = neural::Model<float>::create(c.model, 9);
  auto bytes = cli::write_checkpoint(model, c, "abc123");
  auto back = cli::read_checkpoint(bytes);
  CHECK(back.vocab_digest == "abc123");
  CHECK(back.config.model.hidden == 6);
  REQUIRE(back.model.params.all().size() == model.params.all().size());
  for (const auto& p : model.params.all()) {
    const auto& q = back.model.params.get(p.name);
    REQUIRE(q.value.size() == p.value.size());
    for (std::size_t i = 0; i < p.value.size(); ++i) CHECK(q.value[i] == p.value[i]);
  }
  CHECK(cli::write_checkpoint(back.model, back.config, back.vocab_digest) == bytes);

  CHECK(code_from([&] { cli::check_vocab(back, "other"); }) == ErrorCode::VocabMismatch);
  cli::check_vocab(back, "abc123");
  CHECK(code_from([&] { cli::read_checkpoint("garbage"); }) == ErrorCode::BadFormat);
  CHECK(code_from([&] { cli::read_checkpoint(bytes.substr(0, bytes.size() - 3)); }) == ErrorCode::BadFormat);
}

TEST_CASE("synthetic files keep their distances") {
  synth::Options o;
  o.files = 40;
  o.seed = 3;
  auto files = synth::generate(o);
  REQUIRE(files.size() == 40);
  std::size_t reuses = 0;
  for (const auto& f : files) {
    const auto& toks = f.normalized.tokens;
    for (const auto& r : f.reuses) {
      ++reuses;
      CHECK(r.position - r.previous >= o.min_distance);
      CHECK(r.position - r.previous <= o.max_distance);
      CHECK(toks[r.position].text == r.token);
      CHECK(toks[r.intro].text == r.token);
      CHECK(f.normalized.intro_positions.count(r.intro) == 1);
      // nothing between the previous occurrence and the re-use names it
      for (std::size_t i = r.previous + 1; i < r.position; ++i) CHECK(toks[i].text != r.token);
    }
    pylex::validate(toks);
    std::istringstream truth(synth::write_truth(f));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(truth, line)) ++lines;
    CHECK(lines == f.reuses.size());
  }
  CHECK(reuses >= 40);

  auto again = synth::generate(o);
  CHECK(synth::write_truth(again[7]) == synth::write_truth(files[7]));
}

TEST_CASE("pipeline normalizes a tree and builds a split") {
  auto root = scratch("pipeline");
  for (int p = 0; p < 10; ++p) {
    for (int f = 0; f < 2; ++f) {
      std::string src = "def go(count):\n    total = count + " + std::to_string(p) + "\n    return total\n";
      write_file(root / "src" / ("proj" + std::to_string(p)) / ("m" + std::to_string(f) + ".py"), src);
    }
  }
  write_file(root / "src" / "proj0" / "bad.py", "x = 'open\n");
  auto summary = pipeline::normalize_tree(root / "src", root / "norm");
  CHECK(summary.written == 20);
  REQUIRE(summary.failures.size() == 1);
  CHECK(summary.failures[0].find("bad.py") != std::string::npos);

  auto entries = pipeline::list_corpus(root / "norm");
  REQUIRE(entries.size() == 20);
  CHECK(entries[0].project == "proj0");
  auto loaded = pipeline::load_file(entries[0].norm);
  CHECK(loaded.intro_positions.size() == 3);
  CHECK(loaded.tokens[1].text == "function1");

  auto build = pipeline::build_vocabulary(root / "norm", {0.8, 0.1, 0.1}, 1, 1);
  auto train = pipeline::load_partition(root / "norm", build.split, corpus::Partition::Train, build.vocab);
  auto dev = pipeline::load_partition(root / "norm", build.split, corpus::Partition::Dev, build.vocab);
  CHECK(train.size() == 16);
  CHECK(dev.size() == 2);
  fs::remove_all(root);
}

TEST_CASE("synth tree layout") {
  auto root = scratch("synth");
  synth::Options o;
  o.files = 6;
  pipeline::write_synth(synth::generate(o), root, 3);
  std::set<std::string> projects;
  std::size_t truths = 0;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.path().extension() == ".truth") ++truths;
    if (e.is_directory()) projects.insert(e.path().filename().string());
  }
  CHECK(projects == std::set<std::string>{"p0", "p1", "p2"});
  CHECK(truths == 6);
  CHECK(pipeline::list_corpus(root).size() == 6);
  fs::remove_all(root);
}
