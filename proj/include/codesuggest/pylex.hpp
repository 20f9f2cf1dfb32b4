#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace codesuggest::pylex {

enum class TokenKind {
  Name,
  Number,
  String,
  Operator,
  Keyword,
  Newline,
  Indent,
  Dedent,
  Comment,
  EndMarker,
};

/// Upper-case kind name as used in the token-stream format ("NAME", "INDENT", ...).
const char* kind_name(TokenKind kind);
TokenKind parse_kind(std::string_view name);

struct SourceToken {
  TokenKind kind = TokenKind::EndMarker;
  std::string text;  // verbatim lexeme, empty for INDENT/DEDENT/ENDMARKER
  int line = 1;      // 1-based
  int col = 0;       // 0-based byte column

  bool same_lexeme(const SourceToken& other) const {
    return kind == other.kind && text == other.text;
  }
  friend bool operator==(const SourceToken&, const SourceToken&) = default;
};

using TokenStream = std::vector<SourceToken>;

bool is_keyword(std::string_view word);

/// Lexes Python 3 source. Physical lines joined by brackets or a trailing
/// backslash produce a single logical line (one NEWLINE). Throws
/// codesuggest::Error with UnterminatedString, InconsistentIndentation or
/// InvalidCharacter.
TokenStream tokenize(std::string_view source, bool keep_comments = false);

/// Canonical rendering of a token stream. Same tokens always give the same
/// bytes; throws UnbalancedIndent if INDENT/DEDENT do not balance.
std::string detokenize(const TokenStream& tokens);

/// Checks the stream invariants (balanced indentation, single trailing
/// ENDMARKER). Throws UnbalancedIndent.
void validate(const TokenStream& tokens);

/// Token-stream serialization: one token per line, "KIND\ttext\tline\tcol",
/// with text escaped.
std::string write_stream(const TokenStream& tokens);
TokenStream read_stream(std::string_view contents);

/// Text a token contributes to a language-model sequence: the lexeme, or
/// "NEWLINE" / "INDENT" / "DEDENT" for structural tokens.
std::string model_text(const SourceToken& token);

}  // namespace codesuggest::pylex
