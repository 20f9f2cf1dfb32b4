#include "norm_goldens.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace testdata {

using codesuggest::pynorm::IdentifierGroup;

const std::vector<NormGolden>& norm_goldens() {
  static const std::vector<NormGolden> goldens = {
      {"function with argument", "def load(path):\n    return path\n",
       "def function1 ( arg1 ) : NEWLINE INDENT return arg1 NEWLINE DEDENT"},
      {"number literal", "y = 42\n", "var1 = $NUM$ NEWLINE"},
      {"import left alone", "import os\nx = os.getcwd()\n",
       "import os NEWLINE var1 = os . getcwd ( ) NEWLINE"},
      {"from import alias", "from os import path as osp\nq = osp.join(a, 'b')\n",
       "from os import path as osp NEWLINE var1 = osp . join ( a , 'b' ) NEWLINE"},
      {"class attribute via receiver", "class A:\n    def __init__(self):\n        self.size = 0\n",
       "class class1 : NEWLINE INDENT def __init__ ( self ) : NEWLINE INDENT self . attribute1 = $NUM$ NEWLINE "
       "DEDENT DEDENT"},
      {"attribute shared across methods",
       "class Box:\n    def __init__(self, size):\n        self.size = size\n    def area(self):\n"
       "        return self.size * self.size\n",
       "class class1 : NEWLINE INDENT def __init__ ( self , arg1 ) : NEWLINE INDENT self . attribute1 = arg1 "
       "NEWLINE DEDENT def function1 ( self ) : NEWLINE INDENT return self . attribute1 * self . attribute1 "
       "NEWLINE DEDENT DEDENT"},
      {"comments removed", "# header\nx = 1  # trailing\n\n# footer\n", "var1 = $NUM$ NEWLINE"},
      {"argument shadows module variable", "x = 1\ndef f(x):\n    return x\nprint(x)\n",
       "var1 = $NUM$ NEWLINE def function1 ( arg1 ) : NEWLINE INDENT return arg1 NEWLINE DEDENT print ( var1 ) "
       "NEWLINE"},
      {"local shadows module variable", "count = 0\ndef bump():\n    count = 1\n    return count\n",
       "var1 = $NUM$ NEWLINE def function1 ( ) : NEWLINE INDENT var2 = $NUM$ NEWLINE return var2 NEWLINE "
       "DEDENT"},
      {"tuple target", "a, b = 1, 2.5\n", "var1 , var2 = $NUM$ , $NUM$ NEWLINE"},
      {"for target", "for i in range(10):\n    total = i\n",
       "for var1 in range ( $NUM$ ) : NEWLINE INDENT var2 = var1 NEWLINE DEDENT"},
      {"with target", "with open(p) as fh:\n    data = fh.read()\n",
       "with open ( p ) as var1 : NEWLINE INDENT var2 = var1 . read ( ) NEWLINE DEDENT"},
      {"nested function numbering",
       "def outer(a):\n    def inner(b):\n        return a + b\n    return inner\n",
       "def function1 ( arg1 ) : NEWLINE INDENT def function2 ( arg2 ) : NEWLINE INDENT return arg1 + arg2 "
       "NEWLINE DEDENT return function2 NEWLINE DEDENT"},
      {"sibling functions reuse argument names", "def f(x):\n    return x\ndef g(y):\n    return y\n",
       "def function1 ( arg1 ) : NEWLINE INDENT return arg1 NEWLINE DEDENT def function2 ( arg1 ) : NEWLINE "
       "INDENT return arg1 NEWLINE DEDENT"},
      {"number forms", "z = 0x1F + 3.5e-2 + 2j + 1_000\n", "var1 = $NUM$ + $NUM$ + $NUM$ + $NUM$ NEWLINE"},
      {"strings verbatim", "msg = f'{x}!' + \"a b\"\n", "var1 = f'{x}!' + \"a b\" NEWLINE"},
      {"defaults, star arguments and keywords",
       "def f(a, b=1, *args, **kw):\n    return g(b=a)\n",
       "def function1 ( arg1 , arg2 = $NUM$ , * arg3 , ** arg4 ) : NEWLINE INDENT return g ( b = arg1 ) NEWLINE "
       "DEDENT"},
      {"module function visible below", "def helper():\n    pass\ndef main():\n    helper()\n",
       "def function1 ( ) : NEWLINE INDENT pass NEWLINE DEDENT def function2 ( ) : NEWLINE INDENT function1 ( ) "
       "NEWLINE DEDENT"},
      {"forward reference unresolved", "def main():\n    helper()\ndef helper():\n    pass\n",
       "def function1 ( ) : NEWLINE INDENT helper ( ) NEWLINE DEDENT def function2 ( ) : NEWLINE INDENT pass "
       "NEWLINE DEDENT"},
      {"dunder method and base class", "class Err(Exception):\n    def __str__(self):\n        return 'err'\n",
       "class class1 ( Exception ) : NEWLINE INDENT def __str__ ( self ) : NEWLINE INDENT return 'err' NEWLINE "
       "DEDENT DEDENT"},
      {"line continuations", "total = (1 +\n         2)\nresult = total \\\n    * 3\n",
       "var1 = ( $NUM$ + $NUM$ ) NEWLINE var2 = var1 * $NUM$ NEWLINE"},
      {"attribute on a non-receiver", "def f(o):\n    o.x = 1\n",
       "def function1 ( arg1 ) : NEWLINE INDENT arg1 . x = $NUM$ NEWLINE DEDENT"},
  };
  return goldens;
}

namespace {

const char* kVariables[] = {"alpha", "beta", "gamma", "delta", "omega"};
const char* kFunctions[] = {"run", "step", "build", "fetch"};

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  FuzzProgram build() {
    p_.scope_parent.push_back(-1);
    scopes_.emplace_back();
    int statements = uniform(3, 7);
    for (int i = 0; i < statements; ++i) statement(0, 0);
    std::ostringstream src;
    for (const auto& line : lines_) src << std::string(4 * line.first, ' ') << line.second << "\n";
    p_.source = src.str();
    return p_;
  }

 private:
  struct ScopeState {
    std::map<std::string, int> local;
    std::set<std::string> read_outer;
  };

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }

  // Nearest binding of `name` visible from `scope`; marks outer reads.
  int lookup(int scope, const std::string& name) {
    for (int s = scope; s >= 0; s = p_.scope_parent[static_cast<std::size_t>(s)]) {
      auto& st = scopes_[static_cast<std::size_t>(s)];
      auto it = st.local.find(name);
      if (it != st.local.end()) {
        if (s != scope) scopes_[static_cast<std::size_t>(scope)].read_outer.insert(name);
        return it->second;
      }
    }
    return -1;
  }

  std::vector<std::string> visible(int scope, IdentifierGroup group) {
    std::set<std::string> names;
    for (int s = scope; s >= 0; s = p_.scope_parent[static_cast<std::size_t>(s)]) {
      for (const auto& [name, id] : scopes_[static_cast<std::size_t>(s)].local) {
        if (p_.bindings[static_cast<std::size_t>(id)].group == group) names.insert(name);
      }
    }
    // a name is only usable when its nearest binding has the wanted group
    std::vector<std::string> out;
    for (const auto& n : names) {
      for (int s = scope; s >= 0; s = p_.scope_parent[static_cast<std::size_t>(s)]) {
        auto& local = scopes_[static_cast<std::size_t>(s)].local;
        auto it = local.find(n);
        if (it == local.end()) continue;
        if (p_.bindings[static_cast<std::size_t>(it->second)].group == group) out.push_back(n);
        break;
      }
    }
    return out;
  }

  bool can_bind(int scope, const std::string& name) {
    const auto& st = scopes_[static_cast<std::size_t>(scope)];
    return st.read_outer.count(name) == 0;
  }

  int bind(int scope, const std::string& name, IdentifierGroup group) {
    auto& st = scopes_[static_cast<std::size_t>(scope)];
    auto it = st.local.find(name);
    if (it != st.local.end()) return it->second;
    int id = static_cast<int>(p_.bindings.size());
    p_.bindings.push_back({name, group, scope});
    st.local[name] = id;
    return id;
  }

  void atom(std::string& line, const std::string& text, int binding) {
    if (!line.empty() && line.back() != ' ') line += ' ';
    line += text;
    p_.atoms.push_back(text);
    p_.atom_binding.push_back(binding);
  }

  void expression(std::string& line, int scope, const std::string& exclude) {
    int terms = uniform(1, 3);
    for (int i = 0; i < terms; ++i) {
      if (i > 0) atom(line, "+", -1);
      int kind = uniform(0, 3);
      auto vars = visible(scope, IdentifierGroup::Variable);
      auto args = visible(scope, IdentifierGroup::Argument);
      vars.insert(vars.end(), args.begin(), args.end());
      std::erase(vars, exclude);
      auto funcs = visible(scope, IdentifierGroup::Function);
      std::erase(funcs, exclude);
      if (kind == 1 && !vars.empty()) {
        const auto& name = vars[static_cast<std::size_t>(uniform(0, static_cast<int>(vars.size()) - 1))];
        atom(line, name, lookup(scope, name));
      } else if (kind == 2 && !funcs.empty()) {
        const auto& name = funcs[static_cast<std::size_t>(uniform(0, static_cast<int>(funcs.size()) - 1))];
        atom(line, name, lookup(scope, name));
        atom(line, "(", -1);
        atom(line, ")", -1);
      } else if (kind == 3) {
        atom(line, "len", -1);
        atom(line, "(", -1);
        atom(line, "'s'", -1);
        atom(line, ")", -1);
      } else {
        atom(line, std::to_string(uniform(0, 99)), -1);
      }
    }
  }

  void statement(int scope, int depth) {
    int kind = uniform(0, 9);
    if (kind <= 4) {
      assign(scope, depth);
    } else if (kind <= 6 && depth < 3) {
      function(scope, depth);
    } else if (kind == 7 && depth < 3) {
      loop(scope, depth);
    } else if (kind == 8 && scope != 0) {
      std::string line;
      atom(line, "return", -1);
      expression(line, scope, "");
      lines_.emplace_back(depth, line);
    } else {
      std::string line;
      expression(line, scope, "");
      lines_.emplace_back(depth, line);
    }
  }

  std::string pick_bindable(int scope, const char* const* pool, std::size_t n) {
    std::vector<std::string> options;
    for (std::size_t i = 0; i < n; ++i) {
      std::string name = pool[i];
      if (!can_bind(scope, name)) continue;
      auto& local = scopes_[static_cast<std::size_t>(scope)].local;
      auto it = local.find(name);
      if (it != local.end()) continue;
      options.push_back(name);
    }
    if (options.empty()) return {};
    return options[static_cast<std::size_t>(uniform(0, static_cast<int>(options.size()) - 1))];
  }

  void assign(int scope, int depth) {
    // rebind an existing local variable or introduce a new one
    std::string name;
    auto& local = scopes_[static_cast<std::size_t>(scope)].local;
    std::vector<std::string> rebindable;
    for (const auto& [n, id] : local) {
      if (p_.bindings[static_cast<std::size_t>(id)].group == IdentifierGroup::Variable) rebindable.push_back(n);
    }
    if (!rebindable.empty() && coin(0.3)) {
      name = rebindable[static_cast<std::size_t>(uniform(0, static_cast<int>(rebindable.size()) - 1))];
    } else {
      name = pick_bindable(scope, kVariables, std::size(kVariables));
      if (name.empty() || function_named(name)) {
        std::string line;
        expression(line, scope, "");
        lines_.emplace_back(depth, line);
        return;
      }
    }
    std::string line;
    std::string rhs;
    bool existing = local.count(name) > 0;
    // right-hand side first: a new local must not read its own name
    std::size_t mark = p_.atoms.size();
    expression(rhs, scope, existing ? "" : name);
    std::vector<std::string> rhs_atoms(p_.atoms.begin() + static_cast<long>(mark), p_.atoms.end());
    std::vector<int> rhs_bindings(p_.atom_binding.begin() + static_cast<long>(mark), p_.atom_binding.end());
    p_.atoms.resize(mark);
    p_.atom_binding.resize(mark);
    int id = bind(scope, name, IdentifierGroup::Variable);
    atom(line, name, id);
    atom(line, "=", -1);
    line += " " + rhs;
    p_.atoms.insert(p_.atoms.end(), rhs_atoms.begin(), rhs_atoms.end());
    p_.atom_binding.insert(p_.atom_binding.end(), rhs_bindings.begin(), rhs_bindings.end());
    lines_.emplace_back(depth, line);
  }

  bool function_named(const std::string& name) const {
    return std::find(std::begin(kFunctions), std::end(kFunctions), name) != std::end(kFunctions);
  }

  void function(int scope, int depth) {
    std::string name = pick_bindable(scope, kFunctions, std::size(kFunctions));
    if (name.empty()) {
      assign(scope, depth);
      return;
    }
    std::string line;
    atom(line, "def", -1);
    int fid = bind(scope, name, IdentifierGroup::Function);
    atom(line, name, fid);
    int inner = static_cast<int>(p_.scope_parent.size());
    p_.scope_parent.push_back(scope);
    scopes_.emplace_back();
    atom(line, "(", -1);
    int params = uniform(0, 3);
    std::vector<std::string> pool(std::begin(kVariables), std::end(kVariables));
    std::shuffle(pool.begin(), pool.end(), rng_);
    for (int i = 0; i < params; ++i) {
      if (i > 0) atom(line, ",", -1);
      atom(line, pool[static_cast<std::size_t>(i)],
           bind(inner, pool[static_cast<std::size_t>(i)], IdentifierGroup::Argument));
    }
    atom(line, ")", -1);
    atom(line, ":", -1);
    lines_.emplace_back(depth, line);
    int body = uniform(1, 4);
    for (int i = 0; i < body; ++i) statement(inner, depth + 1);
  }

  void loop(int scope, int depth) {
    std::string name = pick_bindable(scope, kVariables, std::size(kVariables));
    auto& local = scopes_[static_cast<std::size_t>(scope)].local;
    if (name.empty()) {
      for (const auto& [n, id] : local) {
        if (p_.bindings[static_cast<std::size_t>(id)].group == IdentifierGroup::Variable) name = n;
      }
    }
    if (name.empty()) {
      assign(scope, depth);
      return;
    }
    std::string line;
    atom(line, "for", -1);
    atom(line, name, bind(scope, name, IdentifierGroup::Variable));
    atom(line, "in", -1);
    atom(line, "range", -1);
    atom(line, "(", -1);
    atom(line, std::to_string(uniform(1, 9)), -1);
    atom(line, ")", -1);
    atom(line, ":", -1);
    lines_.emplace_back(depth, line);
    int body = uniform(1, 3);
    for (int i = 0; i < body; ++i) statement(scope, depth + 1);
  }

  std::mt19937_64 rng_;
  FuzzProgram p_;
  std::vector<ScopeState> scopes_;
  std::vector<std::pair<int, std::string>> lines_;
};

bool is_ancestor_or_self(const FuzzProgram& p, int ancestor, int scope) {
  for (int s = scope; s >= 0; s = p.scope_parent[static_cast<std::size_t>(s)]) {
    if (s == ancestor) return true;
  }
  return false;
}

}  // namespace

FuzzProgram random_program(std::uint64_t seed) { return Generator(seed).build(); }

std::size_t shadowed_pairs(const FuzzProgram& program) {
  std::size_t n = 0;
  for (std::size_t x = 0; x < program.bindings.size(); ++x) {
    for (std::size_t y = x + 1; y < program.bindings.size(); ++y) {
      const auto& bx = program.bindings[x];
      const auto& by = program.bindings[y];
      if (bx.name == by.name && bx.scope != by.scope &&
          (is_ancestor_or_self(program, bx.scope, by.scope) || is_ancestor_or_self(program, by.scope, bx.scope))) {
        ++n;
      }
    }
  }
  return n;
}

std::string check_program(const FuzzProgram& program, const codesuggest::pynorm::NormalizedFile& file) {
  using codesuggest::pylex::TokenKind;
  std::ostringstream problems;
  std::vector<std::string> normalized;
  for (const auto& t : file.tokens) {
    if (t.kind == TokenKind::Newline || t.kind == TokenKind::Indent || t.kind == TokenKind::Dedent ||
        t.kind == TokenKind::EndMarker) {
      continue;
    }
    normalized.push_back(t.text);
  }
  if (normalized.size() != program.atoms.size()) {
    problems << "token count " << normalized.size() << " vs " << program.atoms.size() << "\n";
    return problems.str();
  }
  std::vector<std::string> anon(program.bindings.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) {
    int b = program.atom_binding[i];
    if (b < 0) {
      bool number = !program.atoms[i].empty() && std::isdigit(static_cast<unsigned char>(program.atoms[i][0]));
      std::string want = number ? "$NUM$" : program.atoms[i];
      if (normalized[i] != want) problems << "atom " << i << " '" << program.atoms[i] << "' became " << normalized[i] << "\n";
      continue;
    }
    auto& a = anon[static_cast<std::size_t>(b)];
    if (a.empty()) {
      a = normalized[i];
      std::string prefix = codesuggest::pynorm::anon_prefix(program.bindings[static_cast<std::size_t>(b)].group);
      if (a.rfind(prefix, 0) != 0) problems << "binding " << b << " '" << program.atoms[i] << "' became " << a << "\n";
    } else if (a != normalized[i]) {
      problems << "binding " << b << " '" << program.atoms[i] << "' is both " << a << " and " << normalized[i] << "\n";
    }
  }
  for (std::size_t x = 0; x < program.bindings.size(); ++x) {
    for (std::size_t y = x + 1; y < program.bindings.size(); ++y) {
      const auto& bx = program.bindings[x];
      const auto& by = program.bindings[y];
      bool nested = is_ancestor_or_self(program, bx.scope, by.scope) || is_ancestor_or_self(program, by.scope, bx.scope);
      if (nested && !anon[x].empty() && anon[x] == anon[y]) {
        problems << "bindings '" << bx.name << "' and '" << by.name << "' share " << anon[x] << "\n";
      }
    }
  }
  if (file.symbols.size() != program.bindings.size()) {
    problems << file.symbols.size() << " bindings, expected " << program.bindings.size() << "\n";
  }
  return problems.str();
}

}  // namespace testdata
