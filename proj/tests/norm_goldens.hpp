#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "codesuggest/pynorm.hpp"

namespace testdata {

struct NormGolden {
  std::string name;
  std::string source;
  std::string expected;  // model text after normalization
};

const std::vector<NormGolden>& norm_goldens();

struct FuzzBinding {
  std::string name;
  codesuggest::pynorm::IdentifierGroup group;
  int scope = 0;
};

// Random Python file built from its own scope model. `atoms` lists every
// non-structural token in order with the binding it refers to (-1: none).
struct FuzzProgram {
  std::string source;
  std::vector<std::string> atoms;
  std::vector<int> atom_binding;
  std::vector<FuzzBinding> bindings;
  std::vector<int> scope_parent;
};

FuzzProgram random_program(std::uint64_t seed);

// Pairs of bindings with the same name where one scope encloses the other.
std::size_t shadowed_pairs(const FuzzProgram& program);

// Empty when the normalized file agrees with the generator's scopes,
// otherwise a description of every disagreement.
std::string check_program(const FuzzProgram& program, const codesuggest::pynorm::NormalizedFile& file);

}  // namespace testdata
