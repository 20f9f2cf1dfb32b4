#include "codesuggest/pylex.hpp"

#include <algorithm>
#include <array>
#include <charconv>

#include "codesuggest/error.hpp"
#include "codesuggest/textio.hpp"

namespace codesuggest::pylex {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest first within each length class; matched greedily.
constexpr std::array<std::string_view, 47> kOperators = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
    ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@=",
    "+",   "-",   "*",   "/",   "%",   "@",  "&",  "|",  "^",  "~",  "<",  ">",
    "(",   ")",   "[",   "]",   "{",   "}",  ",",  ":",  ".",  ";",  "="};

bool is_ident_start(unsigned char ch) {
  return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch == '_' || ch >= 0x80;
}

bool is_ident_char(unsigned char ch) { return is_ident_start(ch) || (ch >= '0' && ch <= '9'); }

bool is_digit(char ch) { return ch >= '0' && ch <= '9'; }

bool is_hex_digit(char ch) {
  return is_digit(ch) || (ch >= 'a' && ch <= 'f') || (ch >= 'A' && ch <= 'F');
}

bool is_string_prefix(std::string_view word) {
  if (word.size() > 2) return false;
  std::string lower;
  for (char ch : word) lower += static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch + 32 : ch);
  return lower == "r" || lower == "u" || lower == "b" || lower == "f" || lower == "br" ||
         lower == "rb" || lower == "fr" || lower == "rf";
}

void validate_utf8(std::string_view source) {
  std::size_t i = 0;
  int line = 1;
  while (i < source.size()) {
    auto ch = static_cast<unsigned char>(source[i]);
    if (ch == '\n') ++line;
    if (ch < 0x80) {
      ++i;
      continue;
    }
    int extra = 0;
    unsigned min_value = 0;
    unsigned value = 0;
    if ((ch & 0xE0) == 0xC0) {
      extra = 1;
      value = ch & 0x1F;
      min_value = 0x80;
    } else if ((ch & 0xF0) == 0xE0) {
      extra = 2;
      value = ch & 0x0F;
      min_value = 0x800;
    } else if ((ch & 0xF8) == 0xF0) {
      extra = 3;
      value = ch & 0x07;
      min_value = 0x10000;
    } else {
      throw Error(ErrorCode::InvalidCharacter, "invalid UTF-8 at line " + std::to_string(line));
    }
    if (i + static_cast<std::size_t>(extra) >= source.size()) {
      throw Error(ErrorCode::InvalidCharacter, "truncated UTF-8 at line " + std::to_string(line));
    }
    for (int k = 1; k <= extra; ++k) {
      auto cont = static_cast<unsigned char>(source[i + static_cast<std::size_t>(k)]);
      if ((cont & 0xC0) != 0x80) {
        throw Error(ErrorCode::InvalidCharacter, "invalid UTF-8 at line " + std::to_string(line));
      }
      value = (value << 6) | (cont & 0x3F);
    }
    if (value < min_value || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) {
      throw Error(ErrorCode::InvalidCharacter, "invalid UTF-8 at line " + std::to_string(line));
    }
    i += static_cast<std::size_t>(extra) + 1;
  }
}

class Lexer {
 public:
  Lexer(std::string_view source, bool keep_comments)
      : src_(source), keep_comments_(keep_comments) {}

  TokenStream run() {
    if (src_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = line_start_ = 3;
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_line_start()) continue;
      }
      scan_token();
    }
    if (!at_line_start_) emit(TokenKind::Newline, "", line_, col());
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::Dedent, "", line_, 0);
    }
    emit(TokenKind::EndMarker, "", line_, 0);
    return std::move(tokens_);
  }

 private:
  struct IndentLevel {
    int tab8 = 0;  // column with tabs expanded to multiples of 8
    int tab1 = 0;  // column with tabs counted as one column
  };

  int col() const { return static_cast<int>(pos_ - line_start_); }

  void emit(TokenKind kind, std::string text, int line, int column) {
    tokens_.push_back(SourceToken{kind, std::move(text), line, column});
  }

  [[noreturn]] void fail(ErrorCode code, const std::string& what) const {
    throw Error(code, what + " at line " + std::to_string(line_) + ", col " + std::to_string(col()));
  }

  bool at_newline() const { return src_[pos_] == '\n' || src_[pos_] == '\r'; }

  void consume_newline() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
    ++pos_;
    ++line_;
    line_start_ = pos_;
  }

  // Measures indentation of a fresh logical line. Returns false when the
  // line was blank or comment-only and has been consumed.
  bool handle_line_start() {
    IndentLevel level;
    while (pos_ < src_.size()) {
      char ch = src_[pos_];
      if (ch == ' ') {
        ++level.tab8;
        ++level.tab1;
      } else if (ch == '\t') {
        level.tab8 = (level.tab8 / 8 + 1) * 8;
        ++level.tab1;
      } else if (ch == '\f') {
        level = IndentLevel{};
      } else {
        break;
      }
      ++pos_;
    }
    if (pos_ >= src_.size()) return false;
    if (at_newline()) {
      consume_newline();
      return false;
    }
    if (src_[pos_] == '#') {
      scan_comment();
      if (pos_ < src_.size()) consume_newline();
      return false;
    }
    if (src_[pos_] == '\\' && pos_ + 1 < src_.size() &&
        (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
      // Continuation from an otherwise empty line; indentation is taken from here.
      ++pos_;
      consume_newline();
      at_line_start_ = false;
      apply_indent(level);
      return false;
    }
    at_line_start_ = false;
    apply_indent(level);
    return true;
  }

  void apply_indent(IndentLevel level) {
    const IndentLevel& top = indents_.back();
    auto order = [](int a, int b) { return (a > b) - (a < b); };
    if (order(level.tab8, top.tab8) != order(level.tab1, top.tab1)) {
      fail(ErrorCode::InconsistentIndentation, "ambiguous mix of tabs and spaces");
    }
    if (level.tab8 > top.tab8) {
      indents_.push_back(level);
      emit(TokenKind::Indent, "", line_, 0);
      return;
    }
    while (indents_.back().tab8 > level.tab8) {
      indents_.pop_back();
      emit(TokenKind::Dedent, "", line_, col());
    }
    if (indents_.back().tab8 != level.tab8 || indents_.back().tab1 != level.tab1) {
      fail(ErrorCode::InconsistentIndentation, "dedent does not match any outer level");
    }
  }

  void scan_comment() {
    std::size_t start = pos_;
    int start_col = col();
    while (pos_ < src_.size() && !at_newline()) ++pos_;
    if (keep_comments_) {
      emit(TokenKind::Comment, std::string(src_.substr(start, pos_ - start)), line_, start_col);
    }
  }

  void scan_token() {
    char ch = src_[pos_];
    if (ch == ' ' || ch == '\t' || ch == '\f') {
      ++pos_;
      return;
    }
    if (at_newline()) {
      if (depth_ == 0) {
        emit(TokenKind::Newline, "", line_, col());
        at_line_start_ = true;
      }
      consume_newline();
      return;
    }
    if (ch == '#') {
      scan_comment();
      return;
    }
    if (ch == '\\') {
      if (pos_ + 1 < src_.size() && (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
        ++pos_;
        consume_newline();
        return;
      }
      fail(ErrorCode::InvalidCharacter, "stray backslash");
    }
    if (is_ident_start(static_cast<unsigned char>(ch))) {
      scan_name();
      return;
    }
    if (is_digit(ch) || (ch == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
      scan_number();
      return;
    }
    if (ch == '"' || ch == '\'') {
      scan_string(pos_, line_, col());
      return;
    }
    scan_operator();
  }

  void scan_name() {
    std::size_t start = pos_;
    int start_col = col();
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    std::string_view word = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') && is_string_prefix(word)) {
      scan_string(start, line_, start_col);
      return;
    }
    emit(is_keyword(word) ? TokenKind::Keyword : TokenKind::Name, std::string(word), line_,
         start_col);
  }

  void scan_number() {
    std::size_t start = pos_;
    int start_col = col();
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() && (pred(src_[pos_]) || src_[pos_] == '_')) ++pos_;
    };
    char next = pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
    if (src_[pos_] == '0' && (next == 'x' || next == 'X')) {
      pos_ += 2;
      digits(is_hex_digit);
    } else if (src_[pos_] == '0' && (next == 'o' || next == 'O' || next == 'b' || next == 'B')) {
      pos_ += 2;
      digits(is_digit);
    } else {
      digits(is_digit);
      if (pos_ < src_.size() && src_[pos_] == '.') {
        ++pos_;
        digits(is_digit);
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t save = pos_;
        ++pos_;
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
        if (pos_ < src_.size() && is_digit(src_[pos_])) {
          digits(is_digit);
        } else {
          pos_ = save;
        }
      }
      if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) ++pos_;
    }
    emit(TokenKind::Number, std::string(src_.substr(start, pos_ - start)), line_, start_col);
  }

  // pos_ is at the opening quote; start marks the prefix start.
  void scan_string(std::size_t start, int start_line, int start_col) {
    char quote = src_[pos_];
    bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= src_.size()) {
        line_ = start_line;
        throw Error(ErrorCode::UnterminatedString,
                    "EOF inside string starting at line " + std::to_string(start_line));
      }
      char ch = src_[pos_];
      if (ch == '\\') {
        ++pos_;
        if (pos_ < src_.size()) {
          if (at_newline()) {
            consume_newline();
          } else {
            ++pos_;
          }
        }
        continue;
      }
      if (ch == '\n' || ch == '\r') {
        if (!triple) {
          throw Error(ErrorCode::UnterminatedString,
                      "end of line inside string starting at line " + std::to_string(start_line));
        }
        consume_newline();
        continue;
      }
      if (ch == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    emit(TokenKind::String, std::string(src_.substr(start, pos_ - start)), start_line, start_col);
  }

  void scan_operator() {
    std::string_view rest = src_.substr(pos_);
    for (std::string_view op : kOperators) {
      if (rest.substr(0, op.size()) == op) {
        if (op == "(" || op == "[" || op == "{") ++depth_;
        if ((op == ")" || op == "]" || op == "}") && depth_ > 0) --depth_;
        emit(TokenKind::Operator, std::string(op), line_, col());
        pos_ += op.size();
        return;
      }
    }
    fail(ErrorCode::InvalidCharacter, "unexpected character '" + std::string(1, src_[pos_]) + "'");
  }

  std::string_view src_;
  bool keep_comments_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
  int line_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  std::vector<IndentLevel> indents_{IndentLevel{}};
  TokenStream tokens_;
};

bool is_open(const SourceToken& t) {
  return t.kind == TokenKind::Operator && (t.text == "(" || t.text == "[" || t.text == "{");
}

bool is_close(const SourceToken& t) {
  return t.kind == TokenKind::Operator && (t.text == ")" || t.text == "]" || t.text == "}");
}

bool is_op(const SourceToken& t, std::string_view text) {
  return t.kind == TokenKind::Operator && t.text == text;
}

// Ends in something that can be called, subscripted or dotted.
bool is_primary_end(const SourceToken& t) {
  return t.kind == TokenKind::Name || t.kind == TokenKind::String || is_close(t);
}

bool needs_space(const SourceToken& prev, const SourceToken& cur) {
  if (is_open(prev) || is_close(cur)) return false;
  if (is_op(cur, ",") || is_op(cur, ":")) return false;
  if (is_op(cur, ".")) return !is_primary_end(prev);
  if (is_op(prev, ".")) return cur.kind == TokenKind::Number;
  if (is_op(cur, "(") || is_op(cur, "[")) return !is_primary_end(prev);
  return true;
}

}  // namespace

const char* kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::Name: return "NAME";
    case TokenKind::Number: return "NUMBER";
    case TokenKind::String: return "STRING";
    case TokenKind::Operator: return "OPERATOR";
    case TokenKind::Keyword: return "KEYWORD";
    case TokenKind::Newline: return "NEWLINE";
    case TokenKind::Indent: return "INDENT";
    case TokenKind::Dedent: return "DEDENT";
    case TokenKind::Comment: return "COMMENT";
    case TokenKind::EndMarker: return "ENDMARKER";
  }
  return "?";
}

TokenKind parse_kind(std::string_view name) {
  for (auto kind : {TokenKind::Name, TokenKind::Number, TokenKind::String, TokenKind::Operator,
                    TokenKind::Keyword, TokenKind::Newline, TokenKind::Indent, TokenKind::Dedent,
                    TokenKind::Comment, TokenKind::EndMarker}) {
    if (name == kind_name(kind)) return kind;
  }
  throw Error(ErrorCode::BadFormat, "unknown token kind '" + std::string(name) + "'");
}

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

TokenStream tokenize(std::string_view source, bool keep_comments) {
  validate_utf8(source);
  return Lexer(source, keep_comments).run();
}

void validate(const TokenStream& tokens) {
  int depth = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto kind = tokens[i].kind;
    if (kind == TokenKind::Indent) ++depth;
    if (kind == TokenKind::Dedent && --depth < 0) {
      throw Error(ErrorCode::UnbalancedIndent, "DEDENT below depth zero at token " + std::to_string(i));
    }
    if (kind == TokenKind::EndMarker && i + 1 != tokens.size()) {
      throw Error(ErrorCode::UnbalancedIndent, "ENDMARKER before end of stream");
    }
  }
  if (tokens.empty() || tokens.back().kind != TokenKind::EndMarker) {
    throw Error(ErrorCode::UnbalancedIndent, "stream does not end with ENDMARKER");
  }
  if (depth != 0) throw Error(ErrorCode::UnbalancedIndent, "indentation not closed at ENDMARKER");
}

std::string detokenize(const TokenStream& tokens) {
  validate(tokens);
  std::string out;
  int depth = 0;
  bool line_start = true;
  const SourceToken* prev = nullptr;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const SourceToken& tok = tokens[i];
    switch (tok.kind) {
      case TokenKind::Indent: ++depth; continue;
      case TokenKind::Dedent: --depth; continue;
      case TokenKind::EndMarker:
        if (!line_start) out += '\n';
        continue;
      case TokenKind::Newline:
        out += '\n';
        line_start = true;
        prev = nullptr;
        continue;
      case TokenKind::Comment: {
        if (line_start) {
          out.append(static_cast<std::size_t>(4 * depth), ' ');
          out += tok.text;
          out += '\n';
          continue;
        }
        out += ' ';
        out += tok.text;
        bool ends_line = i + 1 < tokens.size() && tokens[i + 1].kind == TokenKind::Newline;
        if (!ends_line) {
          // Comment inside a bracketed continuation: the logical line goes on.
          out += '\n';
          out.append(static_cast<std::size_t>(4 * depth + 4), ' ');
          prev = nullptr;
        }
        continue;
      }
      default: break;
    }
    if (line_start) {
      out.append(static_cast<std::size_t>(4 * depth), ' ');
      line_start = false;
    } else if (prev != nullptr && needs_space(*prev, tok)) {
      out += ' ';
    }
    out += tok.text;
    prev = &tok;
  }
  return out;
}

std::string write_stream(const TokenStream& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    out += kind_name(tok.kind);
    out += '\t';
    out += escape_field(tok.text);
    out += '\t';
    out += std::to_string(tok.line);
    out += '\t';
    out += std::to_string(tok.col);
    out += '\n';
  }
  return out;
}

TokenStream read_stream(std::string_view contents) {
  TokenStream tokens;
  std::size_t start = 0;
  int lineno = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw Error(ErrorCode::BadFormat, "token stream line " + std::to_string(lineno) +
                                            " does not have 4 fields");
    }
    SourceToken tok;
    tok.kind = parse_kind(fields[0]);
    tok.text = unescape_field(fields[1]);
    auto parse_int = [&](std::string_view field) {
      int value = 0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error(ErrorCode::BadFormat, "bad integer on token stream line " + std::to_string(lineno));
      }
      return value;
    };
    tok.line = parse_int(fields[2]);
    tok.col = parse_int(fields[3]);
    tokens.push_back(std::move(tok));
  }
  return tokens;
}

std::string model_text(const SourceToken& token) {
  switch (token.kind) {
    case TokenKind::Newline: return "NEWLINE";
    case TokenKind::Indent: return "INDENT";
    case TokenKind::Dedent: return "DEDENT";
    case TokenKind::EndMarker: return "ENDMARKER";
    default: return token.text;
  }
}

}  // namespace codesuggest::pylex
