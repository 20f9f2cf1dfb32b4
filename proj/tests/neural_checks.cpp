#include "neural_checks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "codesuggest/decode.hpp"
#include "codesuggest/eval.hpp"
#include "codesuggest/optim.hpp"

namespace testdata {

using namespace codesuggest;
using namespace codesuggest::neural;

std::vector<corpus::EncodedFile> random_files(std::uint64_t seed, std::size_t count, std::size_t vocab,
                                              std::size_t min_len, std::size_t max_len) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> tok(0, static_cast<int>(vocab) - 1);
  std::vector<corpus::EncodedFile> files;
  for (std::size_t f = 0; f < count; ++f) {
    corpus::EncodedFile file;
    file.name = "f" + std::to_string(f);
    std::size_t n = len(rng);
    std::vector<int> introduced;
    for (std::size_t i = 0; i < n; ++i) {
      // re-use introduced ids now and then so the pointer has something to find
      bool reuse = !introduced.empty() && std::bernoulli_distribution(0.3)(rng);
      int id = reuse ? introduced[std::uniform_int_distribution<std::size_t>(0, introduced.size() - 1)(rng)] : tok(rng);
      bool intro = !reuse && std::bernoulli_distribution(0.35)(rng);
      if (intro) introduced.push_back(id);
      file.ids.push_back(id);
      file.intro.push_back(intro);
      file.identifier.push_back(reuse || intro);
    }
    files.push_back(std::move(file));
  }
  return files;
}

double gradient_error(Architecture arch, std::size_t sampled) {
  ModelConfig config;
  config.arch = arch;
  config.vocab_size = 20;
  config.hidden = 8;
  config.memory = 3;
  config.pointer_c = 1000;
  config.init_range = 0.5;
  auto model = Model<double>::create(config, 3);
  // two lanes, one holding a file boundary, one segment of 12 steps
  auto files = random_files(21, 3, 20, 5, 5);
  files[0] = random_files(22, 1, 20, 12, 12)[0];
  files[1].ids.resize(7, 4);
  files[1].intro.resize(7, 1);
  files[1].identifier.resize(7, 1);
  corpus::BatchStream stream(files, 2, 12);
  const corpus::Segment segment = stream.segment(0);

  auto loss = [&](bool backward) {
    tensor::Graph<double> graph(backward);
    DecodeState<double> state(2, config.hidden);
    std::mt19937_64 rng(7);
    auto total = segment_loss(model, graph, state, segment, true, rng, sampled);
    if (backward) graph.backward(total);
    return graph.scalar(total);
  };
  double worst = 0.0;
  for (const auto& p : model.params.all()) {
    worst = std::max(worst, tensor::finite_difference_check(model.params, p.name, loss));
  }
  return worst;
}

InvariantStats distribution_invariants(Architecture arch, std::size_t steps, std::uint64_t seed) {
  ModelConfig config;
  config.arch = arch;
  config.vocab_size = 40;
  config.hidden = 16;
  config.memory = 5;
  config.init_range = 0.5;
  auto model = Model<double>::create(config, seed);
  const std::size_t lanes = 3;
  DecodeState<double> state(lanes, config.hidden);
  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<int> tok(0, static_cast<int>(config.vocab_size) - 1);
  InvariantStats stats;
  while (stats.steps < steps) {
    tensor::Graph<double> graph(false);
    Runner<double> runner(model, graph, state, false, nullptr);
    for (int t = 0; t < 25 && stats.steps < steps; ++t) {
      StepInput in;
      for (std::size_t b = 0; b < lanes; ++b) {
        in.ids.push_back(tok(rng));
        in.valid.push_back(1);
        in.reset.push_back(std::bernoulli_distribution(0.03)(rng));
        in.intro.push_back(std::bernoulli_distribution(0.3)(rng));
      }
      StepResult r = runner.step(in);
      ++stats.steps;
      for (std::size_t b = 0; b < lanes; ++b) {
        auto dist = distribution_row(graph, r, b);
        double sum = 0;
        for (double p : dist) sum += p;
        stats.sum_error = std::max(stats.sum_error, std::abs(sum - 1));
        if (arch != Architecture::Pointer) continue;
        auto y = graph.value(r.lm).row(b);
        if (r.slot_ids.empty() || r.slot_ids[b].empty()) {
          for (std::size_t v = 0; v < dist.size(); ++v) {
            stats.pinned_error = std::max(stats.pinned_error, std::abs(dist[v] - y[v]));
          }
          continue;
        }
        ++stats.mixed;
        auto i = graph.value(r.pointer).row(b);
        auto lam = graph.value(r.lambda).row(b);
        std::set<int> present(r.slot_ids[b].begin(), r.slot_ids[b].end());
        double absent = 0;
        for (std::size_t v = 0; v < dist.size(); ++v) {
          stats.mix_error = std::max(stats.mix_error, std::abs(dist[v] - (lam[0] * y[v] + lam[1] * i[v])));
          if (!present.count(static_cast<int>(v))) absent += i[v];
        }
        stats.absent_mass = std::max(stats.absent_mass, absent);
      }
    }
    runner.finish();
  }
  return stats;
}

double state_carry_gap(Architecture arch) {
  ModelConfig config;
  config.arch = arch;
  config.vocab_size = 30;
  config.hidden = 16;
  config.memory = 4;
  config.init_range = 0.3;
  auto model = Model<float>::create(config, 5);
  auto files = random_files(8, 4, 30, 20, 60);
  double worst = 0.0;
  for (const auto& file : files) {
    std::vector<corpus::EncodedFile> one{file};
    double whole = eval::evaluate(model, one, 1, 1000).perplexity();
    for (std::size_t unroll : {1, 3, 7}) {
      double cut = eval::evaluate(model, one, 1, unroll).perplexity();
      worst = std::max(worst, std::abs(cut - whole) / whole);
    }
  }
  return worst;
}

Model<double> three_token_model() {
  // Nearly memoryless LSTM: the forget gate is shut and the other gates open,
  // so h is about 0.76 times the one-hot input and the output layer encodes
  // a transition table.
  ModelConfig config;
  config.arch = Architecture::Lstm;
  config.vocab_size = 3;
  config.hidden = 3;
  config.memory = 1;
  config.dropout = 0.0;
  auto model = Model<double>::create(config, 1);
  for (auto& p : model.params.all()) p.value.fill(0.0);
  auto& emb = model.params.get("embedding").value;
  for (std::size_t j = 0; j < 3; ++j) emb.at(j, j) = 4.0;
  auto& w = model.params.get("lstm.weight").value;
  for (std::size_t j = 0; j < 3; ++j) w.at(6 + j, j) = 1.0;  // g gate reads x
  auto& bias = model.params.get("lstm.bias").value;
  for (std::size_t j = 0; j < 3; ++j) {
    bias[j] = 10.0;
    bias[3 + j] = -10.0;
    bias[9 + j] = 10.0;
  }
  const double table[3][3] = {{0.1, 0.5, 0.4}, {0.34, 0.33, 0.33}, {0.05, 0.05, 0.9}};
  const double scale = std::tanh(std::tanh(4.0));
  auto& out = model.params.get("output.weight").value;
  for (std::size_t cur = 0; cur < 3; ++cur) {
    for (std::size_t next = 0; next < 3; ++next) out.at(next, cur) = std::log(table[cur][next]) / scale;
  }
  return model;
}

BeamOracle beam_oracle() {
  auto model = three_token_model();
  const std::vector<int> context{0};
  const std::vector<std::uint8_t> intro{0};
  BeamOracle result;
  auto beam = suggest(model, context, intro, 3, 2);
  result.beam_tokens = beam.front().tokens;
  result.beam_logprob = beam.front().logprob;
  result.greedy_tokens = suggest(model, context, intro, 3, 1).front().tokens;

  result.exhaustive_logprob = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        DecodeState<double> state(1, 3);
        auto d0 = prime(model, state, context, intro);
        auto d1 = step_distribution(model, state, a, false);
        auto d2 = step_distribution(model, state, b, false);
        double lp = std::log(d0[static_cast<std::size_t>(a)]) + std::log(d1[static_cast<std::size_t>(b)]) +
                    std::log(d2[static_cast<std::size_t>(c)]);
        ++result.continuations;
        if (lp > result.exhaustive_logprob) {
          result.exhaustive_logprob = lp;
          result.exhaustive_tokens = {a, b, c};
        }
      }
    }
  }
  return result;
}

}  // namespace testdata
