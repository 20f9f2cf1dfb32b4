#include "codesuggest/textio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "codesuggest/error.hpp"

namespace codesuggest {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnterminatedString: return "UnterminatedString";
    case ErrorCode::InconsistentIndentation: return "InconsistentIndentation";
    case ErrorCode::InvalidCharacter: return "InvalidCharacter";
    case ErrorCode::UnbalancedIndent: return "UnbalancedIndent";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::TooFewProjects: return "TooFewProjects";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::VocabMismatch: return "VocabMismatch";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::BadFormat: return "BadFormat";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char ch : text) {
    switch (ch) {
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string unescape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\' || i + 1 == text.size()) {
      out += text[i];
      continue;
    }
    switch (text[++i]) {
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      case '\\': out += '\\'; break;
      default:
        throw Error(ErrorCode::BadFormat, "unknown escape sequence in field");
    }
  }
  return out;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (unsigned char ch : data) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace codesuggest
