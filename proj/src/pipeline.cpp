#include "codesuggest/pipeline.hpp"

#include <algorithm>

#include "codesuggest/error.hpp"
#include "codesuggest/pylex.hpp"
#include "codesuggest/textio.hpp"

namespace codesuggest::pipeline {

namespace {

std::string generic(const fs::path& p) { return p.generic_string(); }

}  // namespace

NormalizeSummary normalize_tree(const fs::path& input, const fs::path& output, pynorm::Numbering numbering) {
  if (!fs::is_directory(input)) throw Error(ErrorCode::Io, "not a directory: " + input.string());
  std::vector<fs::path> sources;
  for (const auto& e : fs::recursive_directory_iterator(input)) {
    if (e.is_regular_file() && e.path().extension() == ".py") sources.push_back(e.path());
  }
  std::sort(sources.begin(), sources.end());
  NormalizeSummary summary;
  for (const auto& src : sources) {
    fs::path rel = fs::relative(src, input);
    try {
      auto tokens = pylex::tokenize(read_file(src));
      auto norm = pynorm::normalize(tokens, numbering);
      fs::path base = output / rel;
      base.replace_extension();
      write_file(fs::path(base.string() + ".norm"), pylex::write_stream(norm.tokens));
      write_file(fs::path(base.string() + ".sym"), pynorm::write_symbols(norm.symbols));
      ++summary.written;
    } catch (const Error& e) {
      summary.failures.push_back(generic(rel) + ": " + e.what());
    }
  }
  return summary;
}

std::vector<CorpusEntry> list_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::Io, "not a directory: " + root.string());
  std::vector<CorpusEntry> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().extension() != ".norm") continue;
    fs::path rel = fs::relative(e.path(), root);
    CorpusEntry entry;
    entry.project = rel.has_parent_path() ? generic(*rel.begin()) : std::string(".");
    rel.replace_extension();
    entry.name = generic(rel);
    entry.norm = e.path();
    out.push_back(std::move(entry));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  return out;
}

pynorm::NormalizedFile load_file(const fs::path& norm) {
  fs::path sym = norm;
  sym.replace_extension(".sym");
  std::string symbols = fs::exists(sym) ? read_file(sym) : std::string();
  return pynorm::load_normalized(read_file(norm), symbols);
}

VocabBuild build_vocabulary(const fs::path& root, std::array<double, 3> ratios, std::uint64_t seed,
                            long min_count, std::size_t max_size) {
  auto entries = list_corpus(root);
  if (entries.empty()) throw Error(ErrorCode::EmptyCorpus, "no .norm files below " + root.string());
  std::vector<std::string> projects;
  for (const auto& e : entries) projects.push_back(e.project);
  VocabBuild out;
  out.split = corpus::split_projects(projects, ratios, seed);
  std::vector<std::vector<std::string>> texts;
  for (const auto& e : entries) {
    if (out.split.assignment.at(e.project) != corpus::Partition::Train) continue;
    texts.push_back(corpus::model_tokens(load_file(e.norm)));
  }
  out.vocab = corpus::Vocabulary::build(texts, min_count, max_size);
  return out;
}

std::vector<corpus::EncodedFile> load_partition(const fs::path& root, const corpus::ProjectSplit& split,
                                                corpus::Partition partition, const corpus::Vocabulary& vocab) {
  std::vector<corpus::EncodedFile> out;
  for (const auto& e : list_corpus(root)) {
    auto it = split.assignment.find(e.project);
    if (it == split.assignment.end()) {
      throw Error(ErrorCode::BadFormat, "project " + e.project + " is missing from the split");
    }
    if (it->second != partition) continue;
    out.push_back(corpus::encode(load_file(e.norm), vocab, e.name));
  }
  return out;
}

void write_synth(const std::vector<synth::File>& files, const fs::path& output, std::size_t projects) {
  if (projects == 0) throw Error(ErrorCode::BadConfig, "need at least one project");
  for (std::size_t i = 0; i < files.size(); ++i) {
    fs::path base = output / ("p" + std::to_string(i % projects)) / files[i].name;
    write_file(fs::path(base.string() + ".norm"), pylex::write_stream(files[i].normalized.tokens));
    write_file(fs::path(base.string() + ".sym"), pynorm::write_symbols(files[i].normalized.symbols));
    write_file(fs::path(base.string() + ".truth"), synth::write_truth(files[i]));
  }
}

}  // namespace codesuggest::pipeline
