#include "codesuggest/pynorm.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <map>
#include <random>
#include <unordered_map>

#include "codesuggest/error.hpp"
#include "codesuggest/textio.hpp"

namespace codesuggest::pynorm {

using pylex::SourceToken;
using pylex::TokenKind;
using pylex::TokenStream;

namespace {

bool is_dunder(std::string_view name) {
  return name.size() > 4 && name.substr(0, 2) == "__" && name.substr(name.size() - 2) == "__";
}

// Working view over the comment-free stream; positions index `toks`,
// `orig[p]` maps back to the caller's token index.
class ScopeBuilder {
 public:
  explicit ScopeBuilder(const TokenStream& tokens) : source_(tokens) {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i].kind == TokenKind::Comment) continue;
      toks_.push_back(&tokens[i]);
      orig_.push_back(i);
    }
    compute_brackets();
  }

  ScopeAnalysis run() {
    scopes_.push_back(ScopeData{Scope{0, -1, ScopeKind::Module, 0, toks_.size(), {}}, {}, {}, {}, false});
    block_stack_.push_back(BlockFrame{0, 0, false});
    site_binding_.assign(toks_.size(), -1);
    import_token_.assign(toks_.size(), false);
    walk();
    resolve();
    return finish();
  }

 private:
  struct ScopeData {
    Scope scope;
    std::vector<std::string> globals;
    std::vector<std::string> nonlocals;
    std::unordered_map<std::string, int> names;  // original name -> binding
    bool expression = false;                     // lambda/comprehension: whole-region visibility
  };

  struct BlockFrame {
    int scope_id;
    int body_depth;
    bool inline_body;
  };

  struct PendingBinding {
    std::string name;
    IdentifierGroup group;
    int scope_id;
    std::size_t site;  // filtered position
  };

  const SourceToken& tok(std::size_t p) const { return *toks_[p]; }

  bool is_op(std::size_t p, std::string_view text) const {
    return p < toks_.size() && tok(p).kind == TokenKind::Operator && tok(p).text == text;
  }
  bool is_kw(std::size_t p, std::string_view text) const {
    return p < toks_.size() && tok(p).kind == TokenKind::Keyword && tok(p).text == text;
  }
  bool is_name(std::size_t p) const { return p < toks_.size() && tok(p).kind == TokenKind::Name; }

  void compute_brackets() {
    match_.assign(toks_.size(), -1);
    enclosing_.assign(toks_.size(), -1);
    depth_.assign(toks_.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t p = 0; p < toks_.size(); ++p) {
      const auto& t = tok(p);
      bool open = t.kind == TokenKind::Operator && (t.text == "(" || t.text == "[" || t.text == "{");
      bool close = t.kind == TokenKind::Operator && (t.text == ")" || t.text == "]" || t.text == "}");
      if (t.kind == TokenKind::Newline) stack.clear();
      if (close && !stack.empty()) {
        match_[stack.back()] = static_cast<long>(p);
        match_[p] = static_cast<long>(stack.back());
        stack.pop_back();
      }
      depth_[p] = static_cast<int>(stack.size());
      enclosing_[p] = stack.empty() ? -1 : static_cast<long>(stack.back());
      if (open) stack.push_back(p);
    }
  }

  int current_scope() const { return block_stack_.back().scope_id; }

  int new_scope(ScopeKind kind, int parent, std::size_t begin, std::size_t end, bool expression) {
    ScopeData data;
    data.scope = Scope{static_cast<int>(scopes_.size()), parent, kind, begin, end, {}};
    data.expression = expression;
    scopes_.push_back(std::move(data));
    return static_cast<int>(scopes_.size()) - 1;
  }

  void add_binding(const std::string& name, IdentifierGroup group, int scope_id, std::size_t site) {
    if (is_dunder(name)) return;
    auto& data = scopes_[static_cast<std::size_t>(scope_id)];
    auto it = data.names.find(name);
    if (it != data.names.end()) {
      if (site_binding_[site] < 0) site_binding_[site] = it->second;
      return;
    }
    int index = static_cast<int>(pending_.size());
    pending_.push_back(PendingBinding{name, group, scope_id, site});
    data.names.emplace(name, index);
    site_binding_[site] = index;
  }

  void bind_variable(std::size_t site, int scope_id) {
    const std::string& name = tok(site).text;
    auto& data = scopes_[static_cast<std::size_t>(scope_id)];
    if (std::find(data.globals.begin(), data.globals.end(), name) != data.globals.end()) {
      add_binding(name, IdentifierGroup::Variable, 0, site);
      return;
    }
    if (std::find(data.nonlocals.begin(), data.nonlocals.end(), name) != data.nonlocals.end()) {
      return;  // plain reference to an enclosing binding; resolved later
    }
    add_binding(name, IdentifierGroup::Variable, scope_id, site);
  }

  // Class scope whose method receiver is `name`, seen from `scope_id`.
  int receiver_class(const std::string& name, int scope_id) const {
    for (int s = scope_id; s >= 0; s = scopes_[static_cast<std::size_t>(s)].scope.parent) {
      const auto& sc = scopes_[static_cast<std::size_t>(s)].scope;
      if (sc.kind == ScopeKind::Class) return -1;
      if (sc.kind == ScopeKind::Function && !sc.receiver.empty() && sc.receiver == name) {
        return sc.parent;
      }
    }
    return -1;
  }

  // Binds the names of an assignment target list spanning [b, e).
  void bind_targets(std::size_t b, std::size_t e, int scope_id) {
    if (b >= e) return;
    if ((is_op(b, "(") || is_op(b, "[")) && match_[b] == static_cast<long>(e - 1)) {
      bind_targets(b + 1, e - 1, scope_id);
      return;
    }
    std::size_t start = b;
    for (std::size_t p = b; p <= e; ++p) {
      if (p < e && !(is_op(p, ",") && depth_[p] == depth_[b])) continue;
      std::size_t a = start;
      start = p + 1;
      if (a >= p) continue;
      if (is_op(a, "*")) ++a;
      if (p - a == 1 && is_name(a)) {
        bind_variable(a, scope_id);
      } else if ((is_op(a, "(") || is_op(a, "[")) && match_[a] == static_cast<long>(p - 1)) {
        bind_targets(a + 1, p - 1, scope_id);
      } else if (p - a == 3 && is_name(a) && is_op(a + 1, ".") && is_name(a + 2)) {
        int cls = receiver_class(tok(a).text, scope_id);
        if (cls >= 0) add_binding(tok(a + 2).text, IdentifierGroup::Attribute, cls, a + 2);
      }
    }
  }

  // Scans [b, e) for lambdas, comprehensions and assignment expressions.
  void scan_expressions(std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      if (is_kw(p, "lambda")) {
        handle_lambda(p, e);
      } else if (is_op(p, ":=") && p > b && is_name(p - 1)) {
        bind_variable(p - 1, current_scope());
      } else if ((is_op(p, "(") || is_op(p, "[") || is_op(p, "{")) && match_[p] > 0 &&
                 static_cast<std::size_t>(match_[p]) < e) {
        handle_comprehension(p, static_cast<std::size_t>(match_[p]));
      }
    }
  }

  void handle_comprehension(std::size_t open, std::size_t close) {
    int inner = depth_[open] + 1;
    std::vector<std::size_t> fors;
    for (std::size_t p = open + 1; p < close; ++p) {
      if (is_kw(p, "for") && depth_[p] == inner) fors.push_back(p);
    }
    if (fors.empty()) return;
    int scope = new_scope(ScopeKind::Comprehension, -1, open + 1, close, true);
    for (std::size_t f : fors) {
      std::size_t q = f + 1;
      while (q < close && !(is_kw(q, "in") && depth_[q] == inner)) ++q;
      bind_targets(f + 1, q, scope);
    }
  }

  void handle_lambda(std::size_t at, std::size_t e) {
    int depth = depth_[at];
    std::size_t colon = at + 1;
    while (colon < e && !(is_op(colon, ":") && depth_[colon] == depth)) ++colon;
    if (colon >= e) return;
    std::size_t end = colon + 1;
    while (end < e) {
      if (depth_[end] < depth) break;
      if (depth_[end] == depth && (is_op(end, ",") || is_kw(end, "for") || is_op(end, ")") ||
                                   is_op(end, "]") || is_op(end, "}"))) {
        break;
      }
      ++end;
    }
    int scope = new_scope(ScopeKind::Lambda, -1, colon + 1, end, true);
    bool expect_param = true;
    for (std::size_t p = at + 1; p < colon; ++p) {
      if (depth_[p] != depth) continue;
      if (is_op(p, ",")) {
        expect_param = true;
      } else if (is_op(p, "*") || is_op(p, "**") || is_op(p, "/")) {
        continue;
      } else if (expect_param && is_name(p)) {
        add_binding(tok(p).text, IdentifierGroup::Argument, scope, p);
        expect_param = false;
      } else {
        expect_param = false;
      }
    }
  }

  std::size_t find_header_colon(std::size_t b, std::size_t e) const {
    int lambdas = 0;
    for (std::size_t p = b; p < e; ++p) {
      if (depth_[p] != depth_[b]) continue;
      if (is_kw(p, "lambda")) ++lambdas;
      if (is_op(p, ":")) {
        if (lambdas > 0) {
          --lambdas;
        } else {
          return p;
        }
      }
    }
    return e;
  }

  void open_body(int scope_id, std::size_t colon, std::size_t e) {
    auto& sc = scopes_[static_cast<std::size_t>(scope_id)].scope;
    if (colon + 1 < e) {
      sc.begin = colon + 1;
      sc.end = e;
      block_stack_.push_back(BlockFrame{scope_id, indent_ + 1, true});
      process_simple_list(colon + 1, e);
      block_stack_.pop_back();
      return;
    }
    sc.begin = e;
    sc.end = e + 1;
    if (e + 1 < toks_.size() && tok(e + 1).kind == TokenKind::Indent) {
      block_stack_.push_back(BlockFrame{scope_id, indent_ + 1, false});
    }
  }

  void handle_def(std::size_t b, std::size_t e) {
    if (!is_name(b + 1)) return;
    int parent = current_scope();
    bool method = scopes_[static_cast<std::size_t>(parent)].scope.kind == ScopeKind::Class;
    bool is_static = std::find(decorators_.begin(), decorators_.end(), "staticmethod") !=
                     decorators_.end();
    add_binding(tok(b + 1).text, IdentifierGroup::Function, parent, b + 1);
    std::size_t open = b + 2;
    if (!is_op(open, "(") || match_[open] < 0) return;
    std::size_t close = static_cast<std::size_t>(match_[open]);
    std::size_t colon = find_header_colon(close + 1, e);
    int scope = new_scope(ScopeKind::Function, parent, e, e, false);

    bool expect_param = true;
    bool first = true;
    int inner = depth_[open] + 1;
    for (std::size_t p = open + 1; p < close; ++p) {
      if (depth_[p] != inner) continue;
      if (is_op(p, ",")) {
        expect_param = true;
      } else if (is_op(p, "*") || is_op(p, "**") || is_op(p, "/")) {
        if (is_op(p, "*") || is_op(p, "/")) first = false;
        continue;
      } else if (expect_param && is_name(p)) {
        if (first && method && !is_static) {
          scopes_[static_cast<std::size_t>(scope)].scope.receiver = tok(p).text;
        } else {
          add_binding(tok(p).text, IdentifierGroup::Argument, scope, p);
        }
        first = false;
        expect_param = false;
      } else {
        expect_param = false;
      }
    }
    scan_expressions(open + 1, close);
    scan_expressions(close + 1, colon);
    open_body(scope, colon, e);
  }

  void handle_class(std::size_t b, std::size_t e) {
    if (!is_name(b + 1)) return;
    int parent = current_scope();
    add_binding(tok(b + 1).text, IdentifierGroup::Class, parent, b + 1);
    std::size_t colon = find_header_colon(b + 2, e);
    scan_expressions(b + 2, colon);
    int scope = new_scope(ScopeKind::Class, parent, e, e, false);
    open_body(scope, colon, e);
  }

  void handle_compound(std::size_t b, std::size_t e) {
    std::size_t colon = find_header_colon(b, e);
    scan_expressions(b + 1, colon);
    const std::string& kw = tok(b).text;
    if (kw == "for") {
      std::size_t q = b + 1;
      while (q < colon && !(is_kw(q, "in") && depth_[q] == depth_[b])) ++q;
      bind_targets(b + 1, q, current_scope());
    } else if (kw == "with" || kw == "except") {
      for (std::size_t p = b + 1; p < colon; ++p) {
        if (!is_kw(p, "as")) continue;
        std::size_t q = p + 1;
        while (q < colon && !((is_op(q, ",") || is_op(q, ")")) && depth_[q] == depth_[p])) ++q;
        bind_targets(p + 1, q, current_scope());
      }
    }
    if (colon + 1 < e) process_simple_list(colon + 1, e);
  }

  void process_simple_list(std::size_t b, std::size_t e) {
    std::size_t start = b;
    for (std::size_t p = b; p <= e; ++p) {
      if (p < e && !(is_op(p, ";") && depth_[p] == depth_[b])) continue;
      if (start < p) process_simple(start, p);
      start = p + 1;
    }
  }

  void process_simple(std::size_t b, std::size_t e) {
    if (is_kw(b, "import") || is_kw(b, "from")) {
      for (std::size_t p = b; p < e; ++p) import_token_[p] = true;
      return;
    }
    if (is_kw(b, "global") || is_kw(b, "nonlocal")) {
      auto& data = scopes_[static_cast<std::size_t>(current_scope())];
      auto& list = is_kw(b, "global") ? data.globals : data.nonlocals;
      for (std::size_t p = b + 1; p < e; ++p) {
        if (is_name(p)) list.push_back(tok(p).text);
      }
      return;
    }
    scan_expressions(b, e);
    if (tok(b).kind == TokenKind::Keyword) return;

    // Top-level '=' split points; a leading "target : annotation" also binds.
    std::vector<std::size_t> equals;
    std::size_t annotation = e;
    int lambdas = 0;
    for (std::size_t p = b; p < e; ++p) {
      if (depth_[p] != depth_[b]) continue;
      if (is_kw(p, "lambda")) ++lambdas;
      if (is_op(p, ":")) {
        if (lambdas > 0) {
          --lambdas;
        } else if (equals.empty() && annotation == e) {
          annotation = p;
        }
      }
      if (is_op(p, "=") && lambdas == 0) equals.push_back(p);
    }
    if (annotation < e && (equals.empty() || annotation < equals.front())) {
      bind_targets(b, annotation, current_scope());
      return;
    }
    std::size_t start = b;
    for (std::size_t eq : equals) {
      bind_targets(start, eq, current_scope());
      start = eq + 1;
    }
  }

  void process_line(std::size_t b, std::size_t e) {
    if (b >= e) return;
    if (is_op(b, "@")) {
      if (is_name(b + 1)) decorators_.push_back(tok(b + 1).text);
      scan_expressions(b, e);
      return;
    }
    std::size_t head = is_kw(b, "async") ? b + 1 : b;
    if (is_kw(head, "def")) {
      handle_def(head, e);
    } else if (is_kw(head, "class")) {
      handle_class(head, e);
    } else if (is_kw(head, "if") || is_kw(head, "elif") || is_kw(head, "while") ||
               is_kw(head, "for") || is_kw(head, "with") || is_kw(head, "except") ||
               is_kw(head, "else") || is_kw(head, "try") || is_kw(head, "finally")) {
      handle_compound(head, e);
    } else {
      process_simple_list(b, e);
    }
    decorators_.clear();
  }

  void close_blocks(std::size_t at) {
    while (block_stack_.size() > 1 && block_stack_.back().body_depth > indent_) {
      scopes_[static_cast<std::size_t>(block_stack_.back().scope_id)].scope.end = at;
      block_stack_.pop_back();
    }
  }

  void walk() {
    std::size_t p = 0;
    while (p < toks_.size()) {
      const auto kind = tok(p).kind;
      if (kind == TokenKind::Indent) {
        ++indent_;
        ++p;
        continue;
      }
      if (kind == TokenKind::Dedent) {
        --indent_;
        close_blocks(p);
        ++p;
        continue;
      }
      if (kind == TokenKind::EndMarker) {
        indent_ = 0;
        close_blocks(p);
        break;
      }
      std::size_t e = p;
      while (e < toks_.size() && tok(e).kind != TokenKind::Newline &&
             tok(e).kind != TokenKind::EndMarker) {
        ++e;
      }
      process_line(p, e);
      p = e < toks_.size() && tok(e).kind == TokenKind::Newline ? e + 1 : e;
    }
    scopes_[0].scope.end = toks_.size();
  }

  bool contains(const Scope& sc, std::size_t p) const { return sc.begin <= p && p < sc.end; }

  void assign_expression_parents() {
    for (auto& data : scopes_) {
      if (!data.expression) continue;
      int best = 0;
      for (const auto& other : scopes_) {
        if (other.scope.id == data.scope.id) continue;
        const auto& sc = other.scope;
        bool encloses = sc.begin <= data.scope.begin && data.scope.end <= sc.end &&
                        (sc.end - sc.begin) > (data.scope.end - data.scope.begin);
        if (!encloses) continue;
        const auto& cur = scopes_[static_cast<std::size_t>(best)].scope;
        if (sc.end - sc.begin <= cur.end - cur.begin) best = sc.id;
      }
      data.scope.parent = best;
    }
  }

  int innermost_scope(std::size_t p) const {
    int best = 0;
    for (const auto& data : scopes_) {
      const auto& sc = data.scope;
      if (!contains(sc, p)) continue;
      const auto& cur = scopes_[static_cast<std::size_t>(best)].scope;
      if (sc.end - sc.begin <= cur.end - cur.begin) best = sc.id;
    }
    return best;
  }

  int lookup(const std::string& name, int scope_id, std::size_t p) const {
    bool innermost = true;
    for (int s = scope_id; s >= 0; s = scopes_[static_cast<std::size_t>(s)].scope.parent) {
      const auto& data = scopes_[static_cast<std::size_t>(s)];
      bool skip = data.scope.kind == ScopeKind::Class && !innermost;
      innermost = false;
      if (skip) continue;
      auto it = data.names.find(name);
      if (it == data.names.end()) continue;
      const auto& b = pending_[static_cast<std::size_t>(it->second)];
      if (data.expression || b.site <= p) return it->second;
    }
    return -1;
  }

  int lookup_member(const std::string& name, int class_scope) const {
    const auto& data = scopes_[static_cast<std::size_t>(class_scope)];
    auto it = data.names.find(name);
    return it == data.names.end() ? -1 : it->second;
  }

  bool is_keyword_argument(std::size_t p) const {
    if (!is_op(p + 1, "=") || enclosing_[p] < 0) return false;
    if (!is_op(static_cast<std::size_t>(enclosing_[p]), "(")) return false;
    return p > 0 && (is_op(p - 1, "(") || is_op(p - 1, ","));
  }

  void resolve() {
    assign_expression_parents();
    resolution_.assign(toks_.size(), -1);
    for (std::size_t p = 0; p < toks_.size(); ++p) {
      if (site_binding_[p] >= 0) {
        resolution_[p] = site_binding_[p];
        continue;
      }
      if (!is_name(p) || import_token_[p]) continue;
      const std::string& name = tok(p).text;
      int scope = innermost_scope(p);
      if (p >= 2 && is_op(p - 1, ".")) {
        if (!is_name(p - 2)) continue;
        if (p >= 3 && is_op(p - 3, ".")) continue;
        int cls = receiver_class(tok(p - 2).text, scope);
        if (cls >= 0) resolution_[p] = lookup_member(name, cls);
        continue;
      }
      if (is_keyword_argument(p)) continue;
      resolution_[p] = lookup(name, scope, p);
    }
  }

  ScopeAnalysis finish() {
    ScopeAnalysis out;
    for (const auto& data : scopes_) {
      Scope sc = data.scope;
      sc.begin = sc.begin < orig_.size() ? orig_[sc.begin] : source_.size();
      sc.end = sc.end < orig_.size() ? orig_[sc.end] : source_.size();
      out.scopes.push_back(std::move(sc));
    }
    out.bindings.reserve(pending_.size());
    for (const auto& b : pending_) {
      out.bindings.push_back(Binding{b.name, b.group, b.scope_id, {}, orig_[b.site]});
    }
    out.resolution.assign(source_.size(), -1);
    for (std::size_t p = 0; p < toks_.size(); ++p) {
      int r = resolution_[p];
      if (r < 0) continue;
      out.resolution[orig_[p]] = r;
      auto& b = out.bindings[static_cast<std::size_t>(r)];
      b.intro_index = std::min(b.intro_index, orig_[p]);
    }
    return out;
  }

  const TokenStream& source_;
  std::vector<const SourceToken*> toks_;
  std::vector<std::size_t> orig_;
  std::vector<long> match_;
  std::vector<long> enclosing_;
  std::vector<int> depth_;
  std::vector<ScopeData> scopes_;
  std::vector<BlockFrame> block_stack_;
  std::vector<PendingBinding> pending_;
  std::vector<int> site_binding_;
  std::vector<bool> import_token_;
  std::vector<int> resolution_;
  std::vector<std::string> decorators_;
  int indent_ = 0;
};

constexpr std::size_t kGroupCount = 5;

std::size_t group_index(IdentifierGroup g) { return static_cast<std::size_t>(g); }

// Assigns anon names. Numbers of a (scope, group) pair start after the
// ranges used by the same group in all ancestor scopes, so a name is never
// reused while an outer binding with that name is visible.
void assign_anon_names(ScopeAnalysis& analysis, Numbering numbering) {
  const std::size_t scope_count = analysis.scopes.size();
  std::vector<std::array<std::vector<std::size_t>, kGroupCount>> members(scope_count);
  for (std::size_t i = 0; i < analysis.bindings.size(); ++i) {
    const auto& b = analysis.bindings[i];
    members[static_cast<std::size_t>(b.scope_id)][group_index(b.group)].push_back(i);
  }
  auto range_size = [&](std::size_t n) {
    return numbering.mode == Numbering::Mode::Sequential ? n : (n == 0 ? 0 : n + 10);
  };
  std::mt19937_64 rng(numbering.seed);
  for (std::size_t s = 0; s < scope_count; ++s) {
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      auto& list = members[s][g];
      if (list.empty()) continue;
      std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
        return analysis.bindings[a].intro_index < analysis.bindings[b].intro_index;
      });
      std::size_t offset = 0;
      for (int p = analysis.scopes[s].parent; p >= 0; p = analysis.scopes[static_cast<std::size_t>(p)].parent) {
        offset += range_size(members[static_cast<std::size_t>(p)][g].size());
      }
      std::vector<std::size_t> numbers(range_size(list.size()));
      for (std::size_t k = 0; k < numbers.size(); ++k) numbers[k] = offset + k + 1;
      if (numbering.mode == Numbering::Mode::SeededRandom) {
        std::shuffle(numbers.begin(), numbers.end(), rng);
      }
      for (std::size_t k = 0; k < list.size(); ++k) {
        auto& b = analysis.bindings[list[k]];
        b.anon_name = std::string(anon_prefix(b.group)) + std::to_string(numbers[k]);
      }
    }
  }
}

}  // namespace

const char* group_name(IdentifierGroup group) {
  switch (group) {
    case IdentifierGroup::Class: return "class";
    case IdentifierGroup::Variable: return "variable";
    case IdentifierGroup::Argument: return "argument";
    case IdentifierGroup::Attribute: return "attribute";
    case IdentifierGroup::Function: return "function";
  }
  return "?";
}

IdentifierGroup parse_group(std::string_view name) {
  for (auto g : {IdentifierGroup::Class, IdentifierGroup::Variable, IdentifierGroup::Argument,
                 IdentifierGroup::Attribute, IdentifierGroup::Function}) {
    if (name == group_name(g)) return g;
  }
  throw Error(ErrorCode::BadFormat, "unknown identifier group '" + std::string(name) + "'");
}

const char* anon_prefix(IdentifierGroup group) {
  switch (group) {
    case IdentifierGroup::Class: return "class";
    case IdentifierGroup::Variable: return "var";
    case IdentifierGroup::Argument: return "arg";
    case IdentifierGroup::Attribute: return "attribute";
    case IdentifierGroup::Function: return "function";
  }
  return "?";
}

ScopeAnalysis analyze_scopes(const TokenStream& tokens) { return ScopeBuilder(tokens).run(); }

std::set<std::string> NormalizedFile::anon_names() const {
  std::set<std::string> names;
  for (const auto& b : symbols) names.insert(b.anon_name);
  return names;
}

NormalizedFile normalize(const TokenStream& tokens, Numbering numbering) {
  TokenStream stripped;
  stripped.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (t.kind != TokenKind::Comment) stripped.push_back(t);
  }
  ScopeAnalysis analysis = analyze_scopes(stripped);
  assign_anon_names(analysis, numbering);

  NormalizedFile out;
  out.tokens = std::move(stripped);
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    auto& t = out.tokens[i];
    if (t.kind == TokenKind::Number) {
      t.text = "$NUM$";
    } else if (int r = analysis.resolution[i]; r >= 0) {
      t.text = analysis.bindings[static_cast<std::size_t>(r)].anon_name;
    }
  }
  out.symbols = std::move(analysis.bindings);
  std::sort(out.symbols.begin(), out.symbols.end(),
            [](const Binding& a, const Binding& b) { return a.intro_index < b.intro_index; });
  for (const auto& b : out.symbols) out.intro_positions.insert(b.intro_index);
  return out;
}

bool is_identifier_target(const SourceToken& token, const NormalizedFile& file) {
  return std::any_of(file.symbols.begin(), file.symbols.end(),
                     [&](const Binding& b) { return b.anon_name == token.text; });
}

std::string render_model_text(const TokenStream& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::EndMarker) continue;
    if (!out.empty()) out += ' ';
    out += pylex::model_text(t);
  }
  return out;
}

std::string write_symbols(const std::vector<Binding>& symbols) {
  std::string out;
  for (const auto& b : symbols) {
    out += b.anon_name;
    out += '\t';
    out += group_name(b.group);
    out += '\t';
    out += std::to_string(b.scope_id);
    out += '\t';
    out += std::to_string(b.intro_index);
    out += '\n';
  }
  return out;
}

std::vector<Binding> read_symbols(std::string_view contents) {
  std::vector<Binding> out;
  std::size_t start = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 4) throw Error(ErrorCode::BadFormat, "symbol line needs 4 fields");
    Binding b;
    b.anon_name = std::string(fields[0]);
    b.group = parse_group(fields[1]);
    auto parse = [](std::string_view f, auto& value) {
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw Error(ErrorCode::BadFormat, "bad integer in symbol file");
      }
    };
    parse(fields[2], b.scope_id);
    parse(fields[3], b.intro_index);
    out.push_back(std::move(b));
  }
  return out;
}

NormalizedFile load_normalized(std::string_view stream, std::string_view symbols) {
  NormalizedFile file;
  file.tokens = pylex::read_stream(stream);
  file.symbols = read_symbols(symbols);
  for (const auto& b : file.symbols) {
    if (b.intro_index >= file.tokens.size()) {
      throw Error(ErrorCode::BadFormat, "intro index past end of token stream");
    }
    file.intro_positions.insert(b.intro_index);
  }
  return file;
}

}  // namespace codesuggest::pynorm
