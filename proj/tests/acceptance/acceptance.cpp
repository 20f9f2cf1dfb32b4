// Pass/fail line per acceptance criterion. Arguments pick a subset, e.g.
// `acceptance 1 2 3`; no arguments runs all nine.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "codesuggest/checkpoint.hpp"
#include "codesuggest/eval.hpp"
#include "codesuggest/ngram.hpp"
#include "codesuggest/pipeline.hpp"
#include "codesuggest/pylex.hpp"
#include "codesuggest/pynorm.hpp"
#include "codesuggest/synth.hpp"
#include "codesuggest/train.hpp"
#include "mkn_oracle.hpp"
#include "neural_checks.hpp"
#include "norm_goldens.hpp"

using namespace codesuggest;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::vector<neural::Architecture> kArchs{neural::Architecture::Lstm, neural::Architecture::Attention,
                                               neural::Architecture::Pointer};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("codesuggest_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Outcome gradients() {
  auto start = Clock::now();
  double worst = 0;
  std::string detail;
  for (auto arch : kArchs) {
    double e = testdata::gradient_error(arch);
    worst = std::max(worst, e);
    detail += std::string(neural::architecture_name(arch)) + " " + fmt("%.2e", e) + "  ";
  }
  double t = seconds_since(start);
  return {worst <= 1e-4 && t < 60, detail + fmt("%.1fs", t)};
}

Outcome invariants() {
  bool ok = true;
  std::string detail;
  for (auto arch : kArchs) {
    auto s = testdata::distribution_invariants(arch, 1000, 17);
    ok = ok && s.steps == 1000 && s.sum_error <= 1e-6;
    if (arch == neural::Architecture::Pointer) {
      ok = ok && s.mixed > 0 && s.mix_error <= 1e-9 && s.absent_mass < 1e-12 && s.pinned_error <= 1e-9;
      detail += "mix " + fmt("%.1e", s.mix_error) + " absent " + fmt("%.1e", s.absent_mass) + " ";
    }
    detail += std::string(neural::architecture_name(arch)) + " sum " + fmt("%.1e", s.sum_error) + "  ";
  }
  return {ok, detail};
}

Outcome mkn() {
  auto start = Clock::now();
  auto files = testdata::toy_corpus(11, 200, 8, 3);
  double worst = 0;
  double previous = INFINITY;
  bool monotone = true;
  std::string pps;
  for (int n = 3; n <= 6; ++n) {
    auto model = ngram::NgramModel::train(files, n, 8);
    testdata::MknOracle oracle(files, n, 8);
    double pp = model.perplexity(files);
    double ref = oracle.perplexity();
    worst = std::max(worst, std::abs(pp - ref) / ref);
    monotone = monotone && pp <= previous;
    previous = pp;
    pps += fmt("%.3f ", pp);
  }
  double t = seconds_since(start);
  return {worst <= 1e-9 && monotone && t < 10,
          "train PP n=3..6: " + pps + " rel err " + fmt("%.1e", worst) + " " + fmt("%.2fs", t)};
}

Outcome normalization() {
  std::size_t golden_ok = 0;
  const auto& goldens = testdata::norm_goldens();
  for (const auto& g : goldens) {
    auto got = pynorm::render_model_text(pynorm::normalize(pylex::tokenize(g.source)).tokens);
    if (got == g.expected) ++golden_ok;
  }
  std::size_t fuzz_ok = 0, shadowed = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    auto program = testdata::random_program(seed);
    shadowed += testdata::shadowed_pairs(program);
    if (testdata::check_program(program, pynorm::normalize(pylex::tokenize(program.source))).empty()) ++fuzz_ok;
  }
  return {goldens.size() >= 20 && golden_ok == goldens.size() && fuzz_ok == 1000 && shadowed > 0,
          "goldens " + std::to_string(golden_ok) + "/" + std::to_string(goldens.size()) + ", fuzz " +
              std::to_string(fuzz_ok) + "/1000 (" + std::to_string(shadowed) + " shadowed pairs)"};
}

struct Partitions {
  std::vector<corpus::EncodedFile> train, dev, test;
  std::size_t vocab = 0;
};

Partitions load(const fs::path& root, std::uint64_t seed) {
  auto built = pipeline::build_vocabulary(root, {0.8, 0.1, 0.1}, seed);
  Partitions p;
  p.train = pipeline::load_partition(root, built.split, corpus::Partition::Train, built.vocab);
  p.dev = pipeline::load_partition(root, built.split, corpus::Partition::Dev, built.vocab);
  p.test = pipeline::load_partition(root, built.split, corpus::Partition::Test, built.vocab);
  p.vocab = built.vocab.size();
  return p;
}

neural::Model<float> trained(neural::Architecture arch, const Partitions& data, std::size_t hidden,
                             const neural::TrainOptions& options, std::size_t memory = 20, double init = 0.05) {
  neural::ModelConfig c;
  c.init_range = init;
  c.arch = arch;
  c.vocab_size = data.vocab;
  c.hidden = hidden;
  c.memory = memory;
  auto model = neural::Model<float>::create(c, options.seed);
  neural::train(model, data.train, options);
  return model;
}

Outcome planted() {
  auto start = Clock::now();
  auto root = scratch("synth");
  synth::Options o;
  o.files = 300;
  o.seed = 7;
  pipeline::write_synth(synth::generate(o), root, 20);
  auto data = load(root, 3);
  neural::TrainOptions options;
  options.epochs = 10;
  options.lanes = cli::default_lanes(neural::Architecture::Pointer);
  auto pointer = trained(neural::Architecture::Pointer, data, 64, options);
  auto lstm = trained(neural::Architecture::Lstm, data, 64, options);
  double p = eval::evaluate(pointer, data.test, options.lanes, options.unroll).ids.accuracy();
  double l = eval::evaluate(lstm, data.test, options.lanes, options.unroll).ids.accuracy();
  fs::remove_all(root);
  double t = seconds_since(start);
  return {p >= 2 * l && p >= 50 && t <= 900,
          "test IDs accuracy pointer " + fmt("%.2f%%", p) + " vs LSTM " + fmt("%.2f%%", l) + ", " + fmt("%.0fs", t)};
}

Outcome state_carry() {
  double worst = 0;
  for (auto arch : kArchs) worst = std::max(worst, testdata::state_carry_gap(arch));
  return {worst <= 1e-6, "largest relative PP gap " + fmt("%.1e", worst)};
}

Outcome beam() {
  auto r = testdata::beam_oracle();
  bool ok = r.continuations == 27 && r.beam_tokens == r.exhaustive_tokens &&
            std::abs(r.beam_logprob - r.exhaustive_logprob) <= 1e-12;
  std::string best;
  for (int t : r.beam_tokens) best += std::to_string(t) + " ";
  return {ok, "beam " + best + "logprob " + fmt("%.6f", r.beam_logprob) + " over " +
                  std::to_string(r.continuations) + " continuations"};
}

Outcome ordering() {
  auto start = Clock::now();
  auto root = scratch("minicorpus");
  auto summary = pipeline::normalize_tree(CODESUGGEST_MINICORPUS, root);
  auto data = load(root, 1);

  std::vector<std::vector<int>> train_ids;
  for (const auto& f : data.train) train_ids.push_back(f.ids);
  auto six = ngram::NgramModel::train(train_ids, 6, static_cast<int>(data.vocab));
  double ngram_pp = eval::evaluate(six, data.dev).perplexity();

  neural::TrainOptions options;
  options.epochs = 5;
  options.lanes = 2;
  options.lr = 1.5;
  options.decay = 0.6;
  auto lstm = trained(neural::Architecture::Lstm, data, 128, options, 20, 0.1);
  double lstm_pp = eval::evaluate(lstm, data.dev, options.lanes, options.unroll).perplexity();
  auto attention = trained(neural::Architecture::Attention, data, 128, options, 20, 0.1);
  double attention_pp = eval::evaluate(attention, data.dev, options.lanes, options.unroll).perplexity();
  fs::remove_all(root);
  double t = seconds_since(start);
  bool ok = summary.written == 100 && ngram_pp * 1.05 >= lstm_pp && lstm_pp * 1.05 >= attention_pp && t <= 1800;
  return {ok, "dev PP 6-gram " + fmt("%.3f", ngram_pp) + ", LSTM " + fmt("%.3f", lstm_pp) + ", attention-20 " +
                  fmt("%.3f", attention_pp) + ", " + fmt("%.0fs", t)};
}

Outcome reproducibility() {
  auto root = scratch("repro");
  synth::Options o;
  o.files = 60;
  o.seed = 5;
  pipeline::write_synth(synth::generate(o), root, 10);
  auto run = [&](neural::Architecture arch) {
    auto built = pipeline::build_vocabulary(root, {0.8, 0.1, 0.1}, 2);
    auto train = pipeline::load_partition(root, built.split, corpus::Partition::Train, built.vocab);
    auto dev = pipeline::load_partition(root, built.split, corpus::Partition::Dev, built.vocab);
    cli::RunConfig cfg;
    cfg.model.arch = arch;
    cfg.model.vocab_size = built.vocab.size();
    cfg.model.hidden = 24;
    cfg.model.memory = 6;
    cfg.train.epochs = 2;
    cfg.train.lanes = 6;
    cfg.train.unroll = 25;
    cfg.train.seed = 99;
    if (arch == neural::Architecture::Lstm) cfg.train.sampled = 50;
    cfg.finalize();
    auto model = neural::Model<float>::create(cfg.model, cfg.train.seed);
    std::string log;
    neural::train(model, train, cfg.train, [&](const neural::EpochLog& e) { log += fmt("%.17g\n", e.loss); });
    auto report = eval::report_json({eval::evaluate(model, dev, cfg.train.lanes, cfg.train.unroll, "dev")});
    return cli::write_checkpoint(model, cfg, built.vocab.digest()) + log + report;
  };
  bool ok = true;
  for (auto arch : kArchs) ok = ok && run(arch) == run(arch);
  std::vector<std::vector<int>> ids;
  auto data = load(root, 2);
  for (const auto& f : data.train) ids.push_back(f.ids);
  ok = ok && ngram::NgramModel::train(ids, 4, static_cast<int>(data.vocab)).serialize() ==
                 ngram::NgramModel::train(ids, 4, static_cast<int>(data.vocab)).serialize();
  fs::remove_all(root);
  return {ok, "checkpoints, epoch logs and reports compared for lstm, attention, pointer and 4-gram"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{gradients,   invariants, mkn,      normalization,  planted,
                                                       state_carry, beam,       ordering, reproducibility};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (int i = 1; i <= 9; ++i) {
    if (!pick.empty() && !pick.count(i)) continue;
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s\n", i, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
