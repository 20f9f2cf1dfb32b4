#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codesuggest/pylex.hpp"

namespace codesuggest::pynorm {

enum class IdentifierGroup { Class, Variable, Argument, Attribute, Function };

const char* group_name(IdentifierGroup group);
IdentifierGroup parse_group(std::string_view name);
/// Prefix of anonymous names: "class", "var", "arg", "attribute", "function".
const char* anon_prefix(IdentifierGroup group);

struct Binding {
  std::string original_name;  // empty when loaded from a sidecar file
  IdentifierGroup group = IdentifierGroup::Variable;
  int scope_id = 0;
  std::string anon_name;
  std::size_t intro_index = 0;
};

enum class ScopeKind { Module, Class, Function, Lambda, Comprehension };

struct Scope {
  int id = 0;
  int parent = -1;
  ScopeKind kind = ScopeKind::Module;
  std::size_t begin = 0;  // token range [begin, end) in which names resolve here
  std::size_t end = 0;
  std::string receiver;   // first parameter of a method, kept verbatim
};

struct ScopeAnalysis {
  std::vector<Scope> scopes;
  std::vector<Binding> bindings;  // anon_name filled in by normalize()
  /// Per input token: index into bindings, or -1 when untouched.
  std::vector<int> resolution;
};

/// Structural scope pass over a token stream. Never throws on odd input;
/// constructs it does not understand simply produce no bindings.
ScopeAnalysis analyze_scopes(const pylex::TokenStream& tokens);

struct Numbering {
  enum class Mode { Sequential, SeededRandom } mode = Mode::Sequential;
  std::uint64_t seed = 0;

  static Numbering sequential() { return {}; }
  static Numbering seeded_random(std::uint64_t seed) { return {Mode::SeededRandom, seed}; }
};

struct NormalizedFile {
  pylex::TokenStream tokens;
  std::vector<Binding> symbols;
  std::set<std::size_t> intro_positions;

  /// Anonymous names, for identifier-target classification.
  std::set<std::string> anon_names() const;
};

NormalizedFile normalize(const pylex::TokenStream& tokens,
                         Numbering numbering = Numbering::sequential());

bool is_identifier_target(const pylex::SourceToken& token, const NormalizedFile& file);

/// Space-separated model text of a normalized file, ENDMARKER omitted
/// ("def function1 ( arg1 ) : NEWLINE INDENT ...").
std::string render_model_text(const pylex::TokenStream& tokens);

/// Sidecar format: "anon_name\tgroup\tscope_id\tintro_index" per binding.
std::string write_symbols(const std::vector<Binding>& symbols);
std::vector<Binding> read_symbols(std::string_view contents);

/// Rebuilds a NormalizedFile from its token stream and sidecar.
NormalizedFile load_normalized(std::string_view stream, std::string_view symbols);

}  // namespace codesuggest::pynorm
