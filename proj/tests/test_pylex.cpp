#include "doctest.h"

#include <string>
#include <vector>

#include "codesuggest/error.hpp"
#include "codesuggest/pylex.hpp"

using namespace codesuggest;
using namespace codesuggest::pylex;

namespace {

std::vector<std::string> kinds(const TokenStream& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(kind_name(t.kind));
  return out;
}

std::vector<std::string> texts(const TokenStream& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

ErrorCode code_of(const std::string& source) {
  try {
    tokenize(source);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error for: " << source);
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("simple assignment") {
  auto tokens = tokenize("x = 1\n");
  CHECK(kinds(tokens) == std::vector<std::string>{"NAME", "OPERATOR", "NUMBER", "NEWLINE", "ENDMARKER"});
  CHECK(texts(tokens) == std::vector<std::string>{"x", "=", "1", "", ""});
  CHECK(tokens[2].line == 1);
  CHECK(tokens[2].col == 4);
}

TEST_CASE("one indent pair per block") {
  auto tokens = tokenize("if a:\n  b\n");
  CHECK(kinds(tokens) == std::vector<std::string>{"KEYWORD", "NAME", "OPERATOR", "NEWLINE", "INDENT", "NAME",
                                                  "NEWLINE", "DEDENT", "ENDMARKER"});
}

TEST_CASE("missing final newline still ends the logical line") {
  auto tokens = tokenize("if a:\n    b");
  CHECK(kinds(tokens) == std::vector<std::string>{"KEYWORD", "NAME", "OPERATOR", "NEWLINE", "INDENT", "NAME",
                                                  "NEWLINE", "DEDENT", "ENDMARKER"});
}

TEST_CASE("lexical errors") {
  CHECK(code_of("'abc") == ErrorCode::UnterminatedString);
  CHECK(code_of("x = '''abc\n\n") == ErrorCode::UnterminatedString);
  CHECK(code_of("if a:\n        b\n    c\n") == ErrorCode::InconsistentIndentation);
  CHECK(code_of("x = 1 ? 2\n") == ErrorCode::InvalidCharacter);
  CHECK(code_of("x = \"\xff\"\n") == ErrorCode::InvalidCharacter);
}

TEST_CASE("continuations produce one logical line") {
  auto paren = tokenize("x = (1,\n     2)\ny = 3\n");
  std::size_t newlines = 0;
  for (const auto& t : paren) newlines += t.kind == TokenKind::Newline;
  CHECK(newlines == 2);

  auto slash = tokenize("x = 1 + \\\n    2\n");
  CHECK(kinds(slash) == std::vector<std::string>{"NAME", "OPERATOR", "NUMBER", "OPERATOR", "NUMBER", "NEWLINE",
                                                 "ENDMARKER"});
}

TEST_CASE("blank and comment-only lines do not indent") {
  auto tokens = tokenize("def f():\n\n    # note\n    return 1\n");
  std::size_t indents = 0;
  for (const auto& t : tokens) indents += t.kind == TokenKind::Indent;
  CHECK(indents == 1);
}

TEST_CASE("comments only with keep_comments") {
  std::string src = "x = 1  # one\n# two\n";
  for (const auto& t : tokenize(src)) CHECK(t.kind != TokenKind::Comment);
  std::size_t comments = 0;
  for (const auto& t : tokenize(src, true)) comments += t.kind == TokenKind::Comment;
  CHECK(comments == 2);
}

TEST_CASE("literals") {
  auto tokens = tokenize("a = 0x1F + 1_000 + 3.5e-2 + 2j + .5\nb = rb'\\x00' + f\"{a}\" + '''x\ny'''\n");
  std::vector<std::string> numbers, strings;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::Number) numbers.push_back(t.text);
    if (t.kind == TokenKind::String) strings.push_back(t.text);
  }
  CHECK(numbers == std::vector<std::string>{"0x1F", "1_000", "3.5e-2", "2j", ".5"});
  CHECK(strings == std::vector<std::string>{"rb'\\x00'", "f\"{a}\"", "'''x\ny'''"});
}

TEST_CASE("operators are maximal munch") {
  auto tokens = tokenize("a **= b // c -> d := e != f ... g\n");
  std::vector<std::string> ops;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::Operator) ops.push_back(t.text);
  }
  CHECK(ops == std::vector<std::string>{"**=", "//", "->", ":=", "!=", "..."});
}

TEST_CASE("keywords are a closed set") {
  CHECK(is_keyword("lambda"));
  CHECK(is_keyword("None"));
  CHECK(is_keyword("async"));
  CHECK_FALSE(is_keyword("print"));
  CHECK_FALSE(is_keyword("self"));
  for (const auto& t : tokenize("async def f(): await g(None)\n")) {
    if (t.kind == TokenKind::Name) CHECK_FALSE(is_keyword(t.text));
  }
}

TEST_CASE("tabs expand to multiples of eight") {
  auto tokens = tokenize("if a:\n\tif b:\n\t    c\n\td\n");
  std::size_t indents = 0;
  for (const auto& t : tokens) indents += t.kind == TokenKind::Indent;
  CHECK(indents == 2);
  CHECK(code_of("if a:\n\tb\n        c\n") == ErrorCode::InconsistentIndentation);
}

TEST_CASE("canonical rendering") {
  CHECK(detokenize(tokenize("x=1")) == "x = 1\n");
  CHECK(detokenize(tokenize("f( a ,b )")) == "f(a, b)\n");
  CHECK(detokenize(tokenize("d = {'k':[1,2]}\n")) == "d = {'k': [1, 2]}\n");
  CHECK(detokenize(tokenize("if a:\n  b\nc\n")) == "if a:\n    b\nc\n");
}

TEST_CASE("detokenize is a fixpoint") {
  const char* sources[] = {
      "def f(a, *args, **kw):\n  return a[1:2] + kw.get('x', -1)\n",
      "class A(B):\n    x = [i for i in range(3) if i]\n    def g(self): return lambda y: y ** 2\n",
      "with open(p) as f, open(q) as g:\n    pass\n",
      "x = (1 +\n  2)\nif x: y = not x\nelse:\n  y = ~x\n",
  };
  for (const char* src : sources) {
    auto tokens = tokenize(src);
    std::string once = detokenize(tokens);
    auto again = tokenize(once);
    CHECK(detokenize(again) == once);
    REQUIRE(again.size() == tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) CHECK(again[i].same_lexeme(tokens[i]));
  }
}

TEST_CASE("whitespace edits keep the token count") {
  auto a = tokenize("x=f(a,b)+[1,2]\n");
  auto b = tokenize("x  =  f( a , b ) + [ 1 , 2 ]\n");
  CHECK(a.size() == b.size());
}

TEST_CASE("unbalanced streams are rejected") {
  TokenStream tokens = tokenize("x = 1\n");
  tokens.insert(tokens.end() - 1, SourceToken{TokenKind::Dedent, "", 2, 0});
  CHECK_THROWS_AS(detokenize(tokens), Error);
  CHECK_THROWS_AS(validate(tokens), Error);
}

TEST_CASE("stream serialization round-trips") {
  auto tokens = tokenize("s = 'a\\tb'\nt = '''x\ny'''\n");
  std::string text = write_stream(tokens);
  CHECK(read_stream(text) == tokens);
  CHECK(model_text(tokens.back()) == "ENDMARKER");
  CHECK(model_text(tokens[3]) == "NEWLINE");
}
