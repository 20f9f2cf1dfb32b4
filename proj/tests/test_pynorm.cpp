#include "doctest.h"

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "codesuggest/pylex.hpp"
#include "codesuggest/pynorm.hpp"
#include "norm_goldens.hpp"

using namespace codesuggest;
using namespace codesuggest::pynorm;

namespace {

std::string norm(const std::string& source) {
  return render_model_text(normalize(pylex::tokenize(source)).tokens);
}

}  // namespace

TEST_CASE("golden snippets") {
  for (const auto& g : testdata::norm_goldens()) {
    CAPTURE(g.name);
    CHECK(norm(g.source) == g.expected);
  }
}

TEST_CASE("bindings of a small function") {
  auto analysis = analyze_scopes(pylex::tokenize("def load(path):\n    return path\n"));
  REQUIRE(analysis.bindings.size() == 2);
  CHECK(analysis.bindings[0].original_name == "load");
  CHECK(analysis.bindings[0].group == IdentifierGroup::Function);
  CHECK(analysis.bindings[0].scope_id == 0);
  CHECK(analysis.bindings[1].original_name == "path");
  CHECK(analysis.bindings[1].group == IdentifierGroup::Argument);
  CHECK(analysis.bindings[1].scope_id != 0);
}

TEST_CASE("empty input has no bindings") {
  auto file = normalize(pylex::tokenize(""));
  CHECK(file.symbols.empty());
  CHECK(file.intro_positions.empty());
}

TEST_CASE("identifier targets") {
  auto file = normalize(pylex::tokenize("import os\ndef load(path):\n    return os.path.join(path)\n"));
  std::map<std::string, bool> seen;
  for (const auto& t : file.tokens) seen[t.text] = is_identifier_target(t, file);
  CHECK(seen.at("arg1"));
  CHECK(seen.at("function1"));
  CHECK_FALSE(seen.at("return"));
  CHECK_FALSE(seen.at("os"));
  CHECK_FALSE(seen.at("join"));
}

TEST_CASE("intro positions point at first occurrences") {
  auto file = normalize(pylex::tokenize("x = 1\ny = x\nx = y\n"));
  REQUIRE(file.symbols.size() == 2);
  CHECK(file.intro_positions == std::set<std::size_t>{0, 4});
  for (const auto& b : file.symbols) CHECK(file.intro_positions.count(b.intro_index) == 1);
}

TEST_CASE("token count preserved except comments") {
  std::string src = "# c\nclass A:\n    def f(self, n=3):  # c\n        self.v = n\n        return [self.v for _ in range(n)]\n";
  auto raw = pylex::tokenize(src);
  auto file = normalize(raw);
  CHECK(file.tokens.size() == raw.size());
  for (const auto& t : file.tokens) {
    CHECK(t.kind != pylex::TokenKind::Comment);
    if (t.kind == pylex::TokenKind::Number) CHECK(t.text == "$NUM$");
  }
}

TEST_CASE("sequential numbering is deterministic, seeded numbering keeps uniqueness") {
  std::string src = "a = 1\nb = 2\nc = 3\ndef f(x, y):\n    d = x\n    return d + y\n";
  CHECK(norm(src) == norm(src));
  auto r1 = normalize(pylex::tokenize(src), Numbering::seeded_random(5));
  auto r2 = normalize(pylex::tokenize(src), Numbering::seeded_random(5));
  CHECK(render_model_text(r1.tokens) == render_model_text(r2.tokens));
  std::map<int, std::set<std::string>> per_scope;
  for (const auto& b : r1.symbols) CHECK(per_scope[b.scope_id].insert(b.anon_name).second);
}

TEST_CASE("sidecar round trip") {
  auto file = normalize(pylex::tokenize("class A:\n    def f(self, q):\n        self.q = q\n"));
  auto loaded = load_normalized(pylex::write_stream(file.tokens), write_symbols(file.symbols));
  CHECK(loaded.tokens == file.tokens);
  CHECK(loaded.intro_positions == file.intro_positions);
  REQUIRE(loaded.symbols.size() == file.symbols.size());
  for (std::size_t i = 0; i < file.symbols.size(); ++i) {
    CHECK(loaded.symbols[i].anon_name == file.symbols[i].anon_name);
    CHECK(loaded.symbols[i].group == file.symbols[i].group);
    CHECK(loaded.symbols[i].scope_id == file.symbols[i].scope_id);
    CHECK(loaded.symbols[i].intro_index == file.symbols[i].intro_index);
  }
}

TEST_CASE("fuzz: alpha-consistency and shadowing") {
  std::size_t shadowed = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    auto program = testdata::random_program(seed);
    CAPTURE(seed);
    shadowed += testdata::shadowed_pairs(program);
    auto file = normalize(pylex::tokenize(program.source));
    auto problems = testdata::check_program(program, file);
    CHECK_MESSAGE(problems.empty(), program.source << "\n" << problems);
  }
  CHECK(shadowed > 200);
}
