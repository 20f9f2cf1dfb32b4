#include "codesuggest/synth.hpp"

#include <algorithm>
#include <random>

#include "codesuggest/error.hpp"

namespace codesuggest::synth {

namespace {

using pylex::SourceToken;
using pylex::TokenKind;
using pynorm::IdentifierGroup;

struct Builder {
  pylex::TokenStream tokens;
  int line = 1;
  int col = 0;

  void add(TokenKind kind, std::string text = {}) {
    tokens.push_back(SourceToken{kind, std::move(text), line, col});
    if (kind == TokenKind::Newline) {
      ++line;
      col = 0;
    } else {
      ++col;
    }
  }
  void name(const std::string& s) { add(TokenKind::Name, s); }
  void kw(const std::string& s) { add(TokenKind::Keyword, s); }
  void op(const std::string& s) { add(TokenKind::Operator, s); }
  void num() { add(TokenKind::Number, "$NUM$"); }
  void newline() { add(TokenKind::Newline, ""); }
  std::size_t size() const { return tokens.size(); }
};

/// One filler statement; uses builtins, keywords, operators and numbers only.
void filler_statement(Builder& b, std::mt19937_64& rng) {
  static const char* builtins[] = {"print", "len", "range", "str", "int", "sorted", "abs", "min", "max", "list"};
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  switch (pick(6)) {
    case 0:
      b.name(builtins[pick(10)]);
      b.op("(");
      b.num();
      b.op(")");
      b.newline();
      break;
    case 1:
      b.name(builtins[pick(10)]);
      b.op("(");
      b.op("[");
      b.num();
      b.op(",");
      b.num();
      b.op("]");
      b.op(")");
      b.newline();
      break;
    case 2:
      b.kw("pass");
      b.newline();
      break;
    case 3:
      b.kw("if");
      b.kw(pick(2) ? "True" : "False");
      b.op(":");
      b.newline();
      b.add(TokenKind::Indent);
      b.kw("pass");
      b.newline();
      b.add(TokenKind::Dedent);
      break;
    case 4:
      b.name("print");
      b.op("(");
      b.num();
      b.op(pick(2) ? "+" : "*");
      b.num();
      b.op(")");
      b.newline();
      break;
    default:
      b.kw("assert");
      b.num();
      b.op(pick(2) ? "<" : "==");
      b.num();
      b.newline();
      break;
  }
}

void introduce(Builder& b, IdentifierGroup g, const std::string& name) {
  switch (g) {
    case IdentifierGroup::Function:
      b.kw("def");
      b.name(name);
      b.op("(");
      b.op(")");
      b.op(":");
      b.newline();
      b.add(TokenKind::Indent);
      b.kw("pass");
      b.newline();
      b.add(TokenKind::Dedent);
      break;
    case IdentifierGroup::Class:
      b.kw("class");
      b.name(name);
      b.op(":");
      b.newline();
      b.add(TokenKind::Indent);
      b.kw("pass");
      b.newline();
      b.add(TokenKind::Dedent);
      break;
    default:
      b.name(name);
      b.op("=");
      b.num();
      b.newline();
      break;
  }
}

const char* cue(IdentifierGroup g) {
  switch (g) {
    case IdentifierGroup::Function: return "return";
    case IdentifierGroup::Class: return "raise";
    default: return "yield";
  }
}

}  // namespace

std::vector<File> generate(const Options& o) {
  if (o.min_distance < 20 || o.max_distance > 200 || o.min_distance > o.max_distance) {
    throw Error(ErrorCode::BadConfig, "distance range must lie within [20, 200]");
  }
  if (o.max_blocks == 0 || o.max_blocks > 3 || o.name_range == 0 || o.reuses == 0) {
    throw Error(ErrorCode::BadConfig, "synth needs 1-3 blocks, a positive name range and at least one re-use");
  }
  constexpr std::size_t kLongestStatement = 9;
  if (o.max_distance - o.min_distance < kLongestStatement + 2) {
    throw Error(ErrorCode::BadConfig, "distance range must span at least 11 tokens");
  }
  std::mt19937_64 rng(o.seed);
  const IdentifierGroup groups[] = {IdentifierGroup::Function, IdentifierGroup::Class, IdentifierGroup::Variable};
  std::vector<File> files;
  for (std::size_t f = 0; f < o.files; ++f) {
    File file;
    file.name = "synth" + std::to_string(f);
    Builder b;
    std::vector<IdentifierGroup> order(groups, groups + 3);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t blocks = std::uniform_int_distribution<std::size_t>(1, o.max_blocks)(rng);
    for (std::size_t k = 0; k < blocks; ++k) {
      IdentifierGroup g = order[k];
      std::string name = std::string(pynorm::anon_prefix(g)) +
                         std::to_string(std::uniform_int_distribution<std::size_t>(1, o.name_range)(rng));
      std::size_t intro = b.size() + (g == IdentifierGroup::Variable ? 0 : 1);
      introduce(b, g, name);
      file.normalized.symbols.push_back(pynorm::Binding{{}, g, 0, name, intro});
      file.normalized.intro_positions.insert(intro);
      std::size_t previous = intro;
      for (std::size_t r = 0; r < o.reuses; ++r) {
        // The cue sits right before the name, so the name lands at filler end + 1.
        std::size_t target = std::uniform_int_distribution<std::size_t>(
            o.min_distance, o.max_distance - kLongestStatement)(rng);
        while (b.size() + 1 < previous + target) filler_statement(b, rng);
        b.kw(cue(g));
        std::size_t pos = b.size();
        b.name(name);
        b.newline();
        file.reuses.push_back(Reuse{pos, intro, previous, name});
        previous = pos;
      }
      while (b.size() < previous + 10) filler_statement(b, rng);
    }
    b.add(TokenKind::EndMarker);
    file.normalized.tokens = std::move(b.tokens);
    files.push_back(std::move(file));
  }
  return files;
}

std::string write_truth(const File& file) {
  std::string out;
  for (const auto& r : file.reuses) {
    out += std::to_string(r.position) + '\t' + std::to_string(r.intro) + '\t' + std::to_string(r.previous) + '\t' +
           r.token + '\n';
  }
  return out;
}

}  // namespace codesuggest::synth
