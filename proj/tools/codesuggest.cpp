#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "codesuggest/checkpoint.hpp"
#include "codesuggest/decode.hpp"
#include "codesuggest/error.hpp"
#include "codesuggest/eval.hpp"
#include "codesuggest/ngram.hpp"
#include "codesuggest/pipeline.hpp"
#include "codesuggest/pylex.hpp"
#include "codesuggest/synth.hpp"
#include "codesuggest/textio.hpp"
#include "codesuggest/train.hpp"

namespace fs = std::filesystem;
using namespace codesuggest;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kDiverged = 3;

std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> r{};
  std::stringstream in(text);
  std::string part;
  std::size_t i = 0;
  while (std::getline(in, part, ',')) {
    if (i == 3) throw Error(ErrorCode::BadConfig, "ratios need three values");
    try {
      r[i++] = std::stod(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadConfig, "bad ratio '" + part + "'");
    }
  }
  if (i != 3) throw Error(ErrorCode::BadConfig, "ratios need three values");
  return r;
}

std::vector<corpus::Partition> parse_partitions(const std::string& text) {
  std::vector<corpus::Partition> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) out.push_back(corpus::parse_partition(part));
  return out;
}

struct Context {
  std::vector<int> ids;
  std::vector<std::uint8_t> intro;
};

/// A .norm file with its sidecar, or whitespace-separated model tokens (a file
/// or the argument itself) whose first anonymous-name occurrences count as
/// introductions.
Context load_context(const std::string& arg, const corpus::Vocabulary& vocab) {
  const fs::path path(arg);
  Context ctx;
  if (path.extension() == ".norm") {
    auto file = corpus::encode(pipeline::load_file(path), vocab);
    ctx.ids = file.ids;
    ctx.intro = file.intro;
    return ctx;
  }
  auto anon = neural::anonymous_ids(vocab);
  std::set<int> seen;
  std::error_code ec;
  const std::string text = fs::is_regular_file(path, ec) ? read_file(path) : arg;
  for (const auto& tok : split_ws(text)) {
    if (!vocab.contains(tok)) std::cerr << "warning: unknown token '" << tok << "' read as $OOV$\n";
    int id = vocab.id(tok);
    ctx.ids.push_back(id);
    ctx.intro.push_back(anon[static_cast<std::size_t>(id)] && seen.insert(id).second);
  }
  return ctx;
}

std::string join_tokens(const std::vector<int>& ids, const corpus::Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += vocab.token(ids[i]);
  }
  return out;
}

cli::Checkpoint open_checkpoint(const std::string& path, const corpus::Vocabulary& vocab) {
  auto cp = cli::read_checkpoint(read_file(path));
  cli::check_vocab(cp, vocab.digest());
  return cp;
}

void repl(neural::Model<float>& model, const corpus::Vocabulary& vocab) {
  auto anon = neural::anonymous_ids(vocab);
  neural::DecodeState<float> state(1, model.config.hidden);
  std::set<int> seen;
  std::string line;
  std::cout << "> " << std::flush;
  while (std::getline(std::cin, line)) {
    auto words = split_ws(line);
    if (words.size() == 1 && words[0] == ":quit") break;
    if (words.size() == 1 && words[0] == ":reset") {
      state.reset();
      seen.clear();
      std::cout << "state cleared\n> " << std::flush;
      continue;
    }
    for (const auto& w : words) {
      if (!vocab.contains(w)) std::cerr << "warning: unknown token '" << w << "' read as $OOV$\n";
      int id = vocab.id(w);
      bool intro = anon[static_cast<std::size_t>(id)] && seen.insert(id).second;
      std::optional<std::array<double, 2>> lambda;
      std::function<void(const tensor::Graph<float>&, const neural::StepResult&)> observe =
          [&](const tensor::Graph<float>& g, const neural::StepResult& r) {
            if (r.lambda.valid()) lambda = {{g.value(r.lambda).at(0, 0), g.value(r.lambda).at(0, 1)}};
          };
      auto dist = neural::step_distribution(model, state, id, intro, observe);
      if (&w != &words.back()) continue;
      for (const auto& [tok, p] : neural::top_tokens(dist, 5)) {
        std::printf("  %-24s %.4f\n", vocab.token(tok).c_str(), p);
      }
      if (lambda) std::printf("  lambda: lm %.4f  pointer %.4f\n", (*lambda)[0], (*lambda)[1]);
    }
    std::cout << "> " << std::flush;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Code suggestion with n-gram, LSTM, attention and sparse pointer models"};
  app.require_subcommand(1);

  // normalize
  auto* norm = app.add_subcommand("normalize", "Lex and anonymize .py files into .norm/.sym pairs");
  std::string norm_in, norm_out, numbering = "sequential";
  std::uint64_t norm_seed = 0;
  norm->add_option("--input", norm_in, "Source tree")->required();
  norm->add_option("--output", norm_out, "Output tree")->required();
  norm->add_option("--numbering", numbering, "sequential or random")->check(CLI::IsMember({"sequential", "random"}));
  norm->add_option("--seed", norm_seed, "Seed for random numbering");

  // build-vocab
  auto* bv = app.add_subcommand("build-vocab", "Split projects and build the vocabulary on the training split");
  std::string bv_corpus, bv_out, bv_split, bv_ratios = "0.8,0.1,0.1";
  std::uint64_t bv_seed = 1;
  long bv_min = 5;
  std::size_t bv_max = 0;
  bv->add_option("--corpus", bv_corpus, "Normalized corpus root")->required();
  bv->add_option("--out", bv_out, "Vocabulary file")->required();
  bv->add_option("--split-out", bv_split, "Project split file")->required();
  bv->add_option("--ratios", bv_ratios, "train,dev,test fractions");
  bv->add_option("--seed", bv_seed, "Split seed");
  bv->add_option("--min-count", bv_min, "Rarer tokens become $OOV$");
  bv->add_option("--max-size", bv_max, "Vocabulary cap, 0 for none");

  // shared data options
  std::string corpus_root, split_path, vocab_path;
  auto data_opts = [&](CLI::App* sub) {
    sub->add_option("--corpus", corpus_root, "Normalized corpus root")->required();
    sub->add_option("--split", split_path, "Project split file")->required();
    sub->add_option("--vocab", vocab_path, "Vocabulary file")->required();
  };

  // train-ngram
  auto* tn = app.add_subcommand("train-ngram", "Train an interpolated Modified Kneser-Ney model");
  data_opts(tn);
  int tn_order = 3;
  std::string tn_out;
  tn->add_option("--order", tn_order, "n")->check(CLI::Range(2, 12));
  tn->add_option("--out", tn_out, "Model dump")->required();

  // train-neural
  auto* tr = app.add_subcommand("train-neural", "Train an LSTM, attention or sparse pointer model");
  std::string tr_config;
  bool tr_dev = false;
  std::vector<std::pair<std::string, std::string>> overrides;
  tr->add_option("--config", tr_config, "key = value file; flags override it");
  for (const char* key : {"arch", "hidden", "memory", "c", "dropout", "init", "lanes", "unroll", "epochs", "lr",
                          "decay", "clip", "seed", "sampled", "corpus", "vocab", "checkpoint", "report"}) {
    tr->add_option_function<std::string>(
        std::string("--") + key, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
        std::string("Set ") + key);
  }
  tr->add_option("--split", split_path, "Project split file")->required();
  tr->add_flag("--dev", tr_dev, "Report dev perplexity after every epoch");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Perplexity and accuracy per partition");
  data_opts(ev);
  std::string ev_ckpt, ev_ngram, ev_parts = "dev,test", ev_report;
  std::size_t ev_lanes = 0, ev_unroll = 0;
  auto* ev_model = ev->add_option_group("model");
  ev_model->add_option("--checkpoint", ev_ckpt, "Neural checkpoint");
  ev_model->add_option("--ngram", ev_ngram, "N-gram dump");
  ev_model->require_option(1);
  ev->add_option("--partitions", ev_parts, "Comma-separated partitions");
  ev->add_option("--report", ev_report, "Structured report file");
  ev->add_option("--lanes", ev_lanes, "Eval batch lanes (default: checkpoint's)");
  ev->add_option("--unroll", ev_unroll, "Eval segment length (default: checkpoint's)");

  // suggest
  auto* sg = app.add_subcommand("suggest", "Suggest the next tokens after a context");
  std::string sg_ckpt, sg_vocab, sg_context;
  std::size_t sg_m = 1, sg_beam = 1;
  bool sg_interactive = false;
  sg->add_option("--checkpoint", sg_ckpt, "Neural checkpoint")->required();
  sg->add_option("--vocab", sg_vocab, "Vocabulary file")->required();
  sg->add_option("--context", sg_context, ".norm file or whitespace-separated tokens");
  sg->add_option("--m", sg_m, "Tokens to suggest")->check(CLI::PositiveNumber);
  sg->add_option("--beam", sg_beam, "Beam width")->check(CLI::PositiveNumber);
  sg->add_flag("--interactive", sg_interactive, "Read tokens from stdin; :reset, :quit");

  // trace
  auto* tc = app.add_subcommand("trace", "Per-token lambda, memory attention and top-5");
  std::string tc_ckpt, tc_vocab, tc_context, tc_out, tc_heatmap;
  tc->add_option("--checkpoint", tc_ckpt, "Neural checkpoint")->required();
  tc->add_option("--vocab", tc_vocab, "Vocabulary file")->required();
  tc->add_option("--context", tc_context, ".norm file or whitespace-separated tokens")->required();
  tc->add_option("--out", tc_out, "JSON lines output (default stdout)");
  tc->add_option("--heatmap", tc_heatmap, "Alpha matrix, steps x memory slots");

  // synth-corpus
  auto* sy = app.add_subcommand("synth-corpus", "Generate the planted long-range re-use corpus");
  synth::Options so;
  std::string sy_out;
  std::size_t sy_projects = 20;
  sy->add_option("--out", sy_out, "Output root")->required();
  sy->add_option("--files", so.files, "Number of files");
  sy->add_option("--min-distance", so.min_distance, "Smallest re-use distance");
  sy->add_option("--max-distance", so.max_distance, "Largest re-use distance");
  sy->add_option("--reuses", so.reuses, "Re-uses per identifier");
  sy->add_option("--names", so.name_range, "Anonymous index range");
  sy->add_option("--projects", sy_projects, "Project directories");
  sy->add_option("--seed", so.seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (norm->parsed()) {
      auto mode = numbering == "random" ? pynorm::Numbering::seeded_random(norm_seed) : pynorm::Numbering::sequential();
      auto summary = pipeline::normalize_tree(norm_in, norm_out, mode);
      for (const auto& f : summary.failures) std::cerr << "skipped " << f << "\n";
      std::cout << "normalized " << summary.written << " files, skipped " << summary.failures.size() << "\n";
      return summary.written == 0 ? kData : 0;
    }
    if (bv->parsed()) {
      auto built = pipeline::build_vocabulary(bv_corpus, parse_ratios(bv_ratios), bv_seed, bv_min, bv_max);
      write_file(bv_out, built.vocab.serialize());
      write_file(bv_split, built.split.serialize());
      std::cout << "vocabulary " << built.vocab.size() << " tokens, digest " << built.vocab.digest() << "\n";
      for (auto p : {corpus::Partition::Train, corpus::Partition::Dev, corpus::Partition::Test}) {
        std::cout << corpus::partition_name(p) << ": " << built.split.members(p).size() << " projects\n";
      }
      return 0;
    }
    if (tn->parsed()) {
      auto vocab = corpus::Vocabulary::parse(read_file(vocab_path));
      auto split = corpus::ProjectSplit::parse(read_file(split_path));
      auto files = pipeline::load_partition(corpus_root, split, corpus::Partition::Train, vocab);
      std::vector<std::vector<int>> ids;
      for (auto& f : files) ids.push_back(f.ids);
      auto model = ngram::NgramModel::train(ids, tn_order, vocab.size());
      write_file(tn_out, model.serialize());
      std::printf("order %d, train perplexity %.4f\n", tn_order, model.perplexity(ids));
      return 0;
    }
    if (tr->parsed()) {
      cli::RunConfig cfg;
      if (!tr_config.empty()) {
        for (const auto& [k, v] : cli::parse_config_file(read_file(tr_config))) cfg.set(k, v);
      }
      for (const auto& [k, v] : overrides) cfg.set(k, v);
      cfg.finalize();
      if (cfg.corpus.empty() || cfg.vocab.empty() || cfg.checkpoint.empty()) {
        throw Error(ErrorCode::BadConfig, "corpus, vocab and checkpoint are required");
      }
      auto vocab = corpus::Vocabulary::parse(read_file(cfg.vocab));
      auto split = corpus::ProjectSplit::parse(read_file(split_path));
      auto files = pipeline::load_partition(cfg.corpus, split, corpus::Partition::Train, vocab);
      std::vector<corpus::EncodedFile> dev;
      if (tr_dev) dev = pipeline::load_partition(cfg.corpus, split, corpus::Partition::Dev, vocab);
      cfg.model.vocab_size = vocab.size();
      auto model = neural::Model<float>::create(cfg.model, cfg.train.seed);
      nlohmann::ordered_json epochs = nlohmann::ordered_json::array();
      neural::train(model, files, cfg.train, [&](const neural::EpochLog& e) {
        nlohmann::ordered_json j{{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss},
                                 {"train_pp", std::exp(e.loss)}, {"targets", e.targets}};
        std::printf("epoch %zu  lr %.5f  loss %.5f  train pp %.3f", e.epoch, e.lr, e.loss, std::exp(e.loss));
        if (tr_dev && !dev.empty()) {
          double pp = eval::evaluate(model, dev, cfg.train.lanes, cfg.train.unroll).perplexity();
          j["dev_pp"] = pp;
          std::printf("  dev pp %.3f", pp);
        }
        std::printf("\n");
        std::fflush(stdout);
        epochs.push_back(j);
      });
      write_file(cfg.checkpoint, cli::write_checkpoint(model, cfg, vocab.digest()));
      if (!cfg.report.empty()) write_file(cfg.report, epochs.dump(2) + "\n");
      return 0;
    }
    if (ev->parsed()) {
      auto vocab = corpus::Vocabulary::parse(read_file(vocab_path));
      auto split = corpus::ProjectSplit::parse(read_file(split_path));
      std::vector<eval::MetricsReport> rows;
      std::optional<cli::Checkpoint> cp;
      std::optional<ngram::NgramModel> ng;
      if (!ev_ckpt.empty()) {
        cp = open_checkpoint(ev_ckpt, vocab);
      } else {
        ng = ngram::NgramModel::parse(read_file(ev_ngram));
        if (ng->vocab_size() != vocab.size()) throw Error(ErrorCode::VocabMismatch, "n-gram vocabulary size differs");
      }
      for (auto part : parse_partitions(ev_parts)) {
        auto files = pipeline::load_partition(corpus_root, split, part, vocab);
        std::string name = corpus::partition_name(part);
        if (cp) {
          std::size_t lanes = ev_lanes ? ev_lanes : cp->config.train.lanes;
          std::size_t unroll = ev_unroll ? ev_unroll : cp->config.train.unroll;
          rows.push_back(eval::evaluate(cp->model, files, lanes, unroll, name));
        } else {
          rows.push_back(eval::evaluate(*ng, files, name));
        }
      }
      std::cout << eval::report_table(rows);
      if (!ev_report.empty()) write_file(ev_report, eval::report_json(rows));
      return 0;
    }
    if (sg->parsed()) {
      auto vocab = corpus::Vocabulary::parse(read_file(sg_vocab));
      auto cp = open_checkpoint(sg_ckpt, vocab);
      if (sg_interactive) {
        repl(cp.model, vocab);
        return 0;
      }
      if (sg_context.empty()) throw Error(ErrorCode::BadConfig, "--context is required without --interactive");
      auto ctx = load_context(sg_context, vocab);
      auto beams = neural::suggest(cp.model, ctx.ids, ctx.intro, sg_m, sg_beam, neural::anonymous_ids(vocab));
      std::cout << join_tokens(beams.front().tokens, vocab) << "\n";
      return 0;
    }
    if (tc->parsed()) {
      auto vocab = corpus::Vocabulary::parse(read_file(tc_vocab));
      auto cp = open_checkpoint(tc_ckpt, vocab);
      auto ctx = load_context(tc_context, vocab);
      auto records = neural::trace(cp.model, ctx.ids, ctx.intro);
      std::string jsonl = neural::trace_jsonl(records, vocab);
      if (tc_out.empty()) {
        std::cout << jsonl;
      } else {
        write_file(tc_out, jsonl);
      }
      if (!tc_heatmap.empty()) write_file(tc_heatmap, neural::trace_heatmap(records, cp.model.config.memory));
      return 0;
    }
    if (sy->parsed()) {
      auto files = synth::generate(so);
      pipeline::write_synth(files, sy_out, sy_projects);
      std::cout << "wrote " << files.size() << " files to " << sy_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::DivergedLoss) return kDiverged;
    if (e.code() == ErrorCode::BadConfig) return kUsage;
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
