#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "codesuggest/error.hpp"
#include "codesuggest/ngram.hpp"
#include "mkn_oracle.hpp"

using namespace codesuggest;
using namespace codesuggest::ngram;

namespace {

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b)); }

}  // namespace

TEST_CASE("hand-computed bigram on an alternating corpus") {
  // a=0, b=1; every count-of-count bucket is degenerate so all discounts are 0.75
  auto model = NgramModel::train({{0, 1, 0, 1, 0}}, 2, 2);
  std::vector<int> a{0}, b{1};
  CHECK(model.prob(a, 1) == doctest::Approx(0.8125).epsilon(1e-15));
  CHECK(model.prob(a, 0) == doctest::Approx(0.1875).epsilon(1e-15));
  CHECK(model.prob(b, 0) == doctest::Approx(0.8125).epsilon(1e-15));
  CHECK(model.discounts(2).degenerate);
}

TEST_CASE("single token type") {
  auto model = NgramModel::train({{0, 0, 0, 0}}, 2, 2);
  std::vector<int> a{0};
  CHECK(std::abs(model.prob(a, 0) - 0.90625) < 1e-12);
  testdata::MknOracle oracle({{0, 0, 0, 0}}, 2, 2);
  CHECK(std::abs(model.prob(a, 0) - oracle.prob(a, 0)) < 1e-12);
}

TEST_CASE("discount formula") {
  // n1=10 n2=5 n3=3 n4=2: Y = 0.5
  auto d = estimate_discounts({10, 5, 3, 2});
  CHECK(d.d[0] == doctest::Approx(1 - 2 * 0.5 * 5.0 / 10));
  CHECK(d.d[1] == doctest::Approx(2 - 3 * 0.5 * 3.0 / 5));
  CHECK(d.d[2] == doctest::Approx(3 - 4 * 0.5 * 2.0 / 3));
  CHECK_FALSE(d.degenerate);
  auto fallback = estimate_discounts({4, 0, 1, 1});
  CHECK(fallback.degenerate);
  CHECK(fallback.d[0] == 0.75);
}

TEST_CASE("oracle equivalence, n = 3..6") {
  auto files = testdata::toy_corpus(11, 200, 8, 3);
  for (int n = 3; n <= 6; ++n) {
    CAPTURE(n);
    auto model = NgramModel::train(files, n, 8);
    testdata::MknOracle oracle(files, n, 8);
    CHECK(close_rel(model.perplexity(files), oracle.perplexity(), 1e-9));
    std::mt19937_64 rng(n);
    for (int q = 0; q < 50; ++q) {
      std::vector<int> ctx;
      int len = std::uniform_int_distribution<int>(0, n - 1)(rng);
      const auto& f = files[static_cast<std::size_t>(q % 3)];
      std::size_t start = std::uniform_int_distribution<std::size_t>(0, f.size() - static_cast<std::size_t>(len))(rng);
      ctx.assign(f.begin() + static_cast<long>(start), f.begin() + static_cast<long>(start) + len);
      if (q % 5 == 0 && !ctx.empty()) ctx[0] = (ctx[0] + 3) % 8;
      for (int w = 0; w < 8; ++w) CHECK(close_rel(model.prob(ctx, w), oracle.prob(ctx, w), 1e-9));
    }
  }
}

TEST_CASE("distributions normalize") {
  auto files = testdata::toy_corpus(3, 400, 12, 4);
  auto model = NgramModel::train(files, 4, 12);
  std::mt19937_64 rng(9);
  std::vector<double> dist;
  for (int q = 0; q < 100; ++q) {
    std::vector<int> ctx;
    int len = std::uniform_int_distribution<int>(0, 5)(rng);
    for (int i = 0; i < len; ++i) ctx.push_back(std::uniform_int_distribution<int>(0, 11)(rng));
    model.distribution(ctx, dist);
    double sum = 0;
    for (double p : dist) sum += p;
    CHECK(std::abs(sum - 1) < 1e-9);
  }
}

TEST_CASE("unseen context backs off exactly") {
  auto files = testdata::toy_corpus(5, 200, 8, 2);
  auto model = NgramModel::train(files, 3, 8);
  // find a bigram context absent from the corpus
  for (int x = 0; x < 8; ++x) {
    for (int y = 0; y < 8; ++y) {
      std::vector<int> gram{x, y};
      if (model.count(gram) != 0) continue;
      std::vector<int> ctx{x, y}, shorter{y};
      bool seen = false;
      for (const auto& f : files) {
        for (std::size_t i = 0; i + 1 < f.size(); ++i) seen = seen || (f[i] == x && f[i + 1] == y);
      }
      if (seen) continue;
      for (int w = 0; w < 8; ++w) CHECK(model.prob(ctx, w) == model.prob(shorter, w));
      return;
    }
  }
  FAIL("no unseen context");
}

TEST_CASE("train perplexity does not increase with order") {
  auto files = testdata::toy_corpus(11, 200, 8, 3);
  double last = INFINITY;
  for (int n = 3; n <= 6; ++n) {
    double pp = NgramModel::train(files, n, 8).perplexity(files);
    CHECK(pp <= last);
    last = pp;
  }
}

TEST_CASE("serialization reproduces probabilities") {
  auto files = testdata::toy_corpus(2, 300, 10, 3);
  auto model = NgramModel::train(files, 5, 10);
  auto copy = NgramModel::parse(model.serialize());
  CHECK(copy.order() == 5);
  std::vector<int> ctx{1, 2, 3, 4};
  for (int w = 0; w < 10; ++w) CHECK(copy.prob(ctx, w) == model.prob(ctx, w));
  CHECK(copy.perplexity(files) == model.perplexity(files));
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(NgramModel::train({{}}, 3, 4), Error);
  CHECK_THROWS_AS(NgramModel::train({{0, 1}}, 1, 4), Error);
  CHECK_THROWS_AS(NgramModel::train({{0, 9}}, 3, 4), Error);
}
