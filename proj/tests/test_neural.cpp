#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "codesuggest/decode.hpp"
#include "codesuggest/error.hpp"
#include "codesuggest/neural.hpp"
#include "codesuggest/train.hpp"
#include "neural_checks.hpp"

using namespace codesuggest;
using namespace codesuggest::neural;

namespace {

ModelConfig small(Architecture arch, std::size_t vocab = 12, std::size_t k = 6, std::size_t memory = 3) {
  ModelConfig c;
  c.arch = arch;
  c.vocab_size = vocab;
  c.hidden = k;
  c.memory = memory;
  c.init_range = 0.5;
  return c;
}

StepInput single(int id, bool intro = false) { return StepInput{{id}, {1}, {0}, {static_cast<std::uint8_t>(intro)}}; }

}  // namespace

TEST_CASE("parameter shapes") {
  auto m = Model<float>::create(small(Architecture::Pointer, 10, 4), 1);
  CHECK(m.params.get("embedding").value.shape() == tensor::Shape{10, 4});
  CHECK(m.params.get("lstm.weight").value.shape() == tensor::Shape{16, 8});
  CHECK(m.params.get("attention.WM").value.shape() == tensor::Shape{4, 4});
  CHECK(m.params.get("attention.w").value.shape() == tensor::Shape{4});
  CHECK(m.params.get("controller.weight").value.shape() == tensor::Shape{2, 12});
  CHECK_FALSE(m.params.has("attention.WA"));
  auto a = Model<float>::create(small(Architecture::Attention, 10, 4), 1);
  CHECK(a.params.get("attention.WA").value.shape() == tensor::Shape{4, 8});
  CHECK_FALSE(a.params.has("controller.weight"));
  const auto& bias = m.params.get("lstm.bias").value;
  for (std::size_t j = 4; j < 8; ++j) CHECK(bias[j] == 1.0f);
  CHECK(std::abs(bias[0]) < 0.5f);
  CHECK_THROWS_AS(parse_architecture("gru"), Error);
}

TEST_CASE("zero weights give a zero hidden state") {
  auto m = Model<double>::create(small(Architecture::Lstm), 1);
  for (auto& p : m.params.all()) p.value.fill(0.0);
  DecodeState<double> state(1, 6);
  tensor::Graph<double> g(false);
  Runner<double> r(m, g, state, false, nullptr);
  auto res = r.step(single(3));
  for (double v : g.value(res.hidden).values()) CHECK(v == 0.0);
}

TEST_CASE("state changes for generic weights") {
  auto m = Model<double>::create(small(Architecture::Lstm), 1);
  DecodeState<double> state(1, 6);
  step_distribution(m, state, 2, false);
  double norm = 0;
  for (double v : state.h.values()) norm += v * v;
  CHECK(norm > 0);
}

TEST_CASE("gradients match finite differences") {
  CHECK(testdata::gradient_error(Architecture::Lstm) < 1e-4);
  CHECK(testdata::gradient_error(Architecture::Attention) < 1e-4);
  CHECK(testdata::gradient_error(Architecture::Pointer) < 1e-4);
  CHECK(testdata::gradient_error(Architecture::Lstm, 6) < 1e-4);
}

TEST_CASE("attention over one slot and over identical slots") {
  auto m = Model<double>::create(small(Architecture::Pointer), 2);
  DecodeState<double> state(1, 6);
  state.memory[0].push_back({std::vector<double>{0.1, -0.2, 0.3, 0.0, 0.5, -0.1}, 7});
  {
    tensor::Graph<double> g(false);
    Runner<double> r(m, g, state, false, nullptr);
    auto res = r.step(single(1));
    REQUIRE(res.alpha.valid());
    CHECK(g.value(res.alpha)[0] == doctest::Approx(1.0));
    CHECK(res.slot_ids[0] == std::vector<int>{7});
  }
  state.reset();
  std::vector<double> v{0.3, 0.3, -0.1, 0.2, 0.0, 0.1};
  state.memory[0].push_back({v, 4});
  state.memory[0].push_back({v, 9});
  tensor::Graph<double> g(false);
  Runner<double> r(m, g, state, false, nullptr);
  auto res = r.step(single(1));
  CHECK(g.value(res.alpha)[0] == doctest::Approx(0.5));
  CHECK(g.value(res.alpha)[1] == doctest::Approx(0.5));
}

TEST_CASE("attention window only holds filled slots") {
  auto m = Model<double>::create(small(Architecture::Attention, 12, 6, 4), 2);
  DecodeState<double> state(1, 6);
  tensor::Graph<double> g(false);
  Runner<double> r(m, g, state, false, nullptr);
  auto first = r.step(single(1));
  CHECK_FALSE(first.alpha.valid());
  auto second = r.step(single(2));
  REQUIRE(second.alpha.valid());
  CHECK(g.value(second.alpha).size() == 1);
  CHECK(g.value(second.alpha)[0] == doctest::Approx(1.0));
  auto third = r.step(single(3));
  CHECK(g.value(third.alpha).size() == 2);
  for (int t = 0; t < 5; ++t) r.step(single(t));
  auto late = r.step(single(5));
  CHECK(g.value(late.alpha).size() == 4);
  double sum = 0;
  for (double a : g.value(late.alpha).values()) sum += a;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("attention output with zero combine weights is softmax of the bias") {
  auto m = Model<double>::create(small(Architecture::Attention), 3);
  m.params.get("attention.WA").value.fill(0.0);
  DecodeState<double> state(1, 6);
  auto d1 = step_distribution(m, state, 1, false);
  auto d2 = step_distribution(m, state, 5, false);
  const auto& b = m.params.get("output.bias").value;
  double z = 0;
  for (double v : b.values()) z += std::exp(v);
  for (std::size_t v = 0; v < 12; ++v) {
    CHECK(d1[v] == doctest::Approx(std::exp(b[v]) / z).epsilon(1e-12));
    CHECK(d2[v] == doctest::Approx(d1[v]).epsilon(1e-12));
  }
}

TEST_CASE("controller") {
  auto m = Model<double>::create(small(Architecture::Pointer), 3);
  m.params.get("controller.weight").value.fill(0.0);
  m.params.get("controller.bias").value.fill(0.0);
  DecodeState<double> state(1, 6);
  step_distribution(m, state, 2, true);
  {
    DecodeState<double> s = state;
    tensor::Graph<double> g(false);
    Runner<double> r(m, g, s, false, nullptr);
    auto res = r.step(single(3));
    CHECK(g.value(res.lambda)[0] == doctest::Approx(0.5));
    CHECK(g.value(res.lambda)[1] == doctest::Approx(0.5));
  }
  m.params.get("controller.bias").value[0] = 10;
  m.params.get("controller.bias").value[1] = -10;
  tensor::Graph<double> g(false);
  Runner<double> r(m, g, state, false, nullptr);
  auto res = r.step(single(3));
  CHECK(g.value(res.lambda)[0] > 1 - 1e-8);
  CHECK(g.value(res.lambda)[0] + g.value(res.lambda)[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("empty memory pins the mixture to the language model") {
  auto m = Model<double>::create(small(Architecture::Pointer), 4);
  DecodeState<double> state(1, 6);
  tensor::Graph<double> g(false);
  Runner<double> r(m, g, state, false, nullptr);
  auto res = r.step(single(3));
  CHECK_FALSE(res.lambda.valid());
  for (std::size_t v = 0; v < 12; ++v) CHECK(g.value(res.output)[v] == g.value(res.lm)[v]);
}

TEST_CASE("memory append and eviction") {
  auto m = Model<float>::create(small(Architecture::Pointer, 30, 6, 20), 4);
  DecodeState<float> state(1, 6);
  step_distribution(m, state, 7, true);
  REQUIRE(state.memory[0].size() == 1);
  CHECK(state.memory[0][0].id == 7);
  // the stored vector is the hidden state of the introduction step
  for (std::size_t j = 0; j < 6; ++j) CHECK(state.memory[0][0].value[j] == state.h.at(0, j));
  step_distribution(m, state, 8, false);
  CHECK(state.memory[0].size() == 1);
  for (int i = 1; i < 21; ++i) step_distribution(m, state, 7 + i, true);
  CHECK(state.memory[0].size() == 20);
  CHECK(state.memory[0].front().id == 8);
  CHECK(state.memory[0].back().id == 27);
}

TEST_CASE("distribution invariants") {
  for (auto arch : {Architecture::Lstm, Architecture::Attention, Architecture::Pointer}) {
    auto s = testdata::distribution_invariants(arch, 200, 1);
    CHECK(s.sum_error < 1e-9);
    if (arch == Architecture::Pointer) {
      CHECK(s.mixed > 100);
      CHECK(s.mix_error < 1e-12);
      CHECK(s.absent_mass < 1e-12);
      CHECK(s.pinned_error == 0.0);
    }
  }
}

TEST_CASE("segmented evaluation equals a single pass") {
  for (auto arch : {Architecture::Lstm, Architecture::Attention, Architecture::Pointer}) {
    CHECK(testdata::state_carry_gap(arch) < 1e-6);
  }
}

TEST_CASE("first loss is near ln V") {
  auto files = testdata::random_files(1, 6, 50, 40, 80);
  for (auto arch : {Architecture::Lstm, Architecture::Attention, Architecture::Pointer}) {
    ModelConfig c = small(arch, 50, 16, 5);
    c.init_range = 0.05;
    auto m = Model<float>::create(c, 1);
    TrainOptions opt;
    opt.lanes = 3;
    opt.unroll = 20;
    double loss = first_segment_loss(m, files, opt);
    CHECK(std::abs(loss - std::log(50.0)) < 0.1 * std::log(50.0));
  }
}

TEST_CASE("training is deterministic and lowers the loss") {
  auto files = testdata::random_files(2, 8, 20, 30, 60);
  TrainOptions opt;
  opt.lanes = 2;
  opt.unroll = 10;
  opt.epochs = 3;
  opt.lr = 0.5;
  std::vector<double> losses[2];
  std::vector<float> weights[2];
  for (int run = 0; run < 2; ++run) {
    auto m = Model<float>::create(small(Architecture::Pointer, 20, 8, 3), 9);
    for (const auto& log : train(m, files, opt)) losses[run].push_back(log.loss);
    auto w = m.params.get("lstm.weight").value.values();
    weights[run].assign(w.begin(), w.end());
  }
  CHECK(losses[0] == losses[1]);
  CHECK(weights[0] == weights[1]);
  CHECK(losses[0].back() < losses[0].front());
}

TEST_CASE("training rejects ids outside the vocabulary") {
  auto files = testdata::random_files(2, 2, 30, 10, 10);
  auto m = Model<float>::create(small(Architecture::Lstm, 20), 1);
  CHECK_THROWS_AS(train(m, files, TrainOptions{}), Error);
}

TEST_CASE("diverging training stops with diagnostics") {
  auto files = testdata::random_files(2, 2, 12, 10, 10);
  auto m = Model<float>::create(small(Architecture::Lstm), 1);
  m.params.get("output.bias").value[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train(m, files, TrainOptions{});
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DivergedLoss);
  }
}

TEST_CASE("beam search against exhaustive search") {
  auto r = testdata::beam_oracle();
  CHECK(r.continuations == 27);
  CHECK(r.beam_tokens == r.exhaustive_tokens);
  CHECK(r.beam_logprob == doctest::Approx(r.exhaustive_logprob).epsilon(1e-12));
  CHECK(r.beam_tokens == std::vector<int>{2, 2, 2});
  CHECK(r.greedy_tokens == std::vector<int>{1, 0, 1});
}

TEST_CASE("greedy and beam basics") {
  auto m = Model<double>::create(small(Architecture::Pointer), 6);
  std::vector<int> ctx{1, 4, 2, 4};
  std::vector<std::uint8_t> intro{0, 1, 0, 0};
  DecodeState<double> state(1, 6);
  auto dist = prime(m, state, ctx, intro);
  auto one = suggest(m, ctx, intro, 1, 1);
  CHECK(one.front().tokens.front() == top_tokens(dist, 1).front().first);
  double greedy = suggest(m, ctx, intro, 4, 1).front().logprob;
  for (std::size_t b : {2, 3, 5}) {
    auto beam = suggest(m, ctx, intro, 4, b);
    CHECK(beam.size() == b);
    CHECK(beam.front().logprob >= greedy - 1e-12);
    for (std::size_t i = 1; i < beam.size(); ++i) CHECK(beam[i].logprob <= beam[i - 1].logprob);
  }
  CHECK_THROWS_AS(suggest(m, ctx, intro, 2, 0), Error);
  CHECK_THROWS_AS(suggest(m, std::vector<int>{}, intro, 2, 1), Error);
}

TEST_CASE("trace records") {
  auto m = Model<double>::create(small(Architecture::Pointer), 6);
  std::vector<int> ctx{1, 4, 2, 4, 5, 7, 4};
  std::vector<std::uint8_t> intro{0, 1, 0, 0, 1, 0, 0};
  auto records = trace(m, ctx, intro);
  REQUIRE(records.size() == ctx.size());
  CHECK_FALSE(records[0].lambda.has_value());
  CHECK_FALSE(records[1].lambda.has_value());
  CHECK(records[2].lambda.has_value());
  for (const auto& rec : records) {
    CHECK(rec.top.size() == 5);
    for (std::size_t i = 1; i < rec.top.size(); ++i) CHECK(rec.top[i].second <= rec.top[i - 1].second);
    if (rec.slots.empty()) continue;
    double sum = 0;
    for (const auto& s : rec.slots) sum += s.second;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK(records[6].slots.size() == 2);
  CHECK(records[6].slots[0].first == 4);
  CHECK(records[6].slots[1].first == 5);
  auto heat = trace_heatmap(records, 3);
  CHECK(std::count(heat.begin(), heat.end(), '\n') == 7);
}

TEST_CASE("anonymous ids") {
  auto vocab = corpus::Vocabulary::build({{"var1", "var1", "arg12", "arg12", "variable", "variable", "function3", "function3"}}, 1);
  auto anon = anonymous_ids(vocab);
  CHECK(anon[static_cast<std::size_t>(vocab.id("var1"))]);
  CHECK(anon[static_cast<std::size_t>(vocab.id("arg12"))]);
  CHECK(anon[static_cast<std::size_t>(vocab.id("function3"))]);
  CHECK_FALSE(anon[static_cast<std::size_t>(vocab.id("variable"))]);
  CHECK_FALSE(anon[static_cast<std::size_t>(vocab.oov_id())]);
}
