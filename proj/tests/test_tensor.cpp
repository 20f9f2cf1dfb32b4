#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "codesuggest/error.hpp"
#include "codesuggest/graph.hpp"
#include "codesuggest/optim.hpp"
#include "codesuggest/tensor.hpp"

using namespace codesuggest;
using namespace codesuggest::tensor;

namespace {

using G = Graph<double>;

Array<double> random_array(Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  Array<double> a(shape);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : a.values()) v = u(rng);
  return a;
}

// sum(x * w) for a fixed random w, so every output element reaches the loss
Var weighted_total(G& g, Var x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t r = g.value(x).rows(), c = g.value(x).cols();
  Array<double> w = random_array({r, c}, rng);
  Var prod = g.mul(g.reshape(x, {r, c}), g.constant(w));
  Var rows = g.matmul(g.constant(Array<double>({1, r}, 1.0)), prod);
  return g.matmul(rows, g.constant(Array<double>({1, c}, 1.0)), true);
}

struct Check {
  ParameterSet<double> params;
  std::function<Var(G&, std::vector<Var>&)> build;

  double loss(bool backward) {
    G g(backward);
    std::vector<Var> leaves;
    for (auto& p : params.all()) leaves.push_back(g.parameter(p));
    Var out = build(g, leaves);
    Var total = g.value(out).size() == 1 ? out : weighted_total(g, out, 99);
    if (backward) g.backward(total);
    return g.scalar(total);
  }

  double worst() {
    double w = 0;
    for (auto& p : params.all()) {
      w = std::max(w, finite_difference_check(params, p.name, [this](bool b) { return loss(b); }));
    }
    return w;
  }
};

Check make_check(std::vector<Shape> shapes, std::function<Var(G&, std::vector<Var>&)> build, double lo = -1,
                 double hi = 1) {
  Check c;
  std::mt19937_64 rng(shapes.size() * 7 + 1);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    c.params.add("p" + std::to_string(i), shapes[i]).value = random_array(shapes[i], rng, lo, hi);
  }
  c.build = std::move(build);
  return c;
}

}  // namespace

TEST_CASE("array shapes") {
  Array<float> a({2, 3}, 1.5f);
  CHECK(a.size() == 6);
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  Array<float> v({4});
  CHECK(v.rows() == 1);
  CHECK(v.cols() == 4);
  Array<float> t({2, 3, 4});
  CHECK(t.cols() == 12);
  CHECK_THROWS_AS(Array<float>({2, 2}, std::vector<float>{1, 2, 3}), Error);
  a.at(1, 2) = 4;
  CHECK(a.cast<double>()[5] == 4.0);
}

TEST_CASE("softmax of zeros") {
  G g(false);
  Var s = g.softmax(g.constant(Array<double>({1, 2}, 0.0)));
  CHECK(g.value(s)[0] == 0.5);
  CHECK(g.value(s)[1] == 0.5);
}

TEST_CASE("softmax rows sum to one and stay in (0,1)") {
  std::mt19937_64 rng(3);
  G g(false);
  Var s = g.softmax(g.constant(random_array({50, 17}, rng, -30, 30)));
  for (std::size_t r = 0; r < 50; ++r) {
    double sum = 0;
    for (double p : g.value(s).row(r)) {
      CHECK(p > 0);
      CHECK(p < 1);
      sum += p;
    }
    CHECK(std::abs(sum - 1) < 1e-12);
  }
}

TEST_CASE("tanh derivative at zero") {
  ParameterSet<double> params;
  params.add("x", {1});
  G g;
  Var y = g.tanh(g.parameter(params.get("x")));
  g.backward(y);
  CHECK(params.get("x").grad[0] == 1.0);
}

TEST_CASE("matmul by identity") {
  std::mt19937_64 rng(1);
  Array<double> eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1;
  G g(false);
  auto a = random_array({3, 4}, rng);
  Var r = g.matmul(g.constant(eye), g.constant(a));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(g.value(r)[i] == a[i]);
  CHECK_THROWS_AS(g.matmul(g.constant(a), g.constant(a)), Error);
  CHECK_THROWS_AS(g.add(g.constant(a), g.constant(eye)), Error);
}

TEST_CASE("quadratic gradient by finite differences") {
  ParameterSet<double> params;
  params.add("p", {1}).value[0] = 3;
  auto loss = [&](bool backward) {
    G g(backward);
    Var p = g.parameter(params.get("p"));
    Var sq = g.mul(p, p);
    if (backward) g.backward(sq);
    return g.scalar(sq);
  };
  CHECK(finite_difference_check(params, "p", loss) < 1e-8);
  CHECK(std::abs(params.get("p").grad[0] - 6) < 1e-6);
}

TEST_CASE("primitive gradients match finite differences") {
  const double tol = 1e-6;
  SUBCASE("matmul") {
    auto c = make_check({{3, 4}, {4, 5}}, [](G& g, auto& p) { return g.matmul(p[0], p[1]); });
    CHECK(c.worst() < tol);
  }
  SUBCASE("matmul transposed") {
    auto c = make_check({{3, 4}, {5, 4}}, [](G& g, auto& p) { return g.matmul(p[0], p[1], true); });
    CHECK(c.worst() < tol);
  }
  SUBCASE("add, sum, bias, mul") {
    auto c = make_check({{3, 4}, {3, 4}, {4}}, [](G& g, auto& p) {
      return g.mul(g.add_bias(g.sum({p[0], p[1], g.add(p[0], p[1])}), p[2]), p[1]);
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("concat and slice") {
    auto c = make_check({{2, 3}, {2, 2}}, [](G& g, auto& p) {
      Var cat = g.concat_cols({p[0], p[1], p[0]});
      return g.mul(g.slice_cols(cat, 2, 4), g.slice_cols(cat, 3, 4));
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("rowselect with repeats") {
    auto c = make_check({{5, 3}}, [](G& g, auto& p) { return g.rowselect(p[0], {4, 1, 4, 0}); });
    CHECK(c.worst() < tol);
  }
  SUBCASE("tanh, sigmoid, log") {
    auto c = make_check({{3, 3}}, [](G& g, auto& p) { return g.log(g.sigmoid(g.tanh(p[0]))); });
    CHECK(c.worst() < tol);
  }
  SUBCASE("softmax") {
    auto c = make_check({{3, 6}}, [](G& g, auto& p) { return g.softmax(p[0]); });
    CHECK(c.worst() < tol);
  }
  SUBCASE("masked softmax") {
    auto c = make_check({{2, 4}}, [](G& g, auto& p) {
      return g.masked_softmax(p[0], {1, 0, 1, 1, 0, 0, 0, 0});
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("dropout in train mode") {
    auto c = make_check({{4, 6}}, [](G& g, auto& p) {
      std::mt19937_64 rng(5);
      return g.dropout(p[0], 0.3, true, rng);
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("scale rows and gather rows") {
    auto c = make_check({{3, 4}, {2, 4}}, [](G& g, auto& p) {
      Var s = g.scale_rows(p[0], {0.5, -2.0, 3.0});
      return g.gather_rows({{s, 2}, {p[1], 0}, {Var{}, 0}, {s, 2}}, 4);
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("broadcast add and weighted rows") {
    auto c = make_check({{6, 3}, {2, 3}, {2, 3}}, [](G& g, auto& p) {
      Var alpha = g.softmax(p[2]);
      Var shifted = g.add_rows_broadcast(p[0], p[1], 3);
      return g.weighted_rows(alpha, g.tanh(shifted));
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("pointer scatter") {
    auto c = make_check({{2, 3}}, [](G& g, auto& p) {
      Var alpha = g.softmax(p[0]);
      return g.log(g.add_bias(g.pointer_scatter(alpha, {4, 1, 4, 0, 2, 2}, {1, 1, 1, 1, 1, 0}, 6, 3.0),
                              g.constant(Array<double>({6}, 0.01))));
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("pin rows and scalar mix") {
    auto c = make_check({{3, 2}, {3, 4}, {3, 4}}, [](G& g, auto& p) {
      Var lambda = g.pin_rows(g.softmax(p[0]), {0, 1, 0}, {1.0, 0.0});
      return g.scalar_mix(lambda, g.softmax(p[1]), g.softmax(p[2]));
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("nll and cross entropy") {
    auto c = make_check({{3, 5}}, [](G& g, auto& p) {
      Var a = g.nll(g.softmax(p[0]), {1, 4, 0}, {1.0, 0.0, 0.5});
      Var b = g.cross_entropy(p[0], {2, 2, 3}, {0.25, 1.0, 1.0});
      return g.add(a, b);
    });
    CHECK(c.worst() < tol);
  }
  SUBCASE("sampled softmax loss") {
    auto c = make_check({{2, 3}, {8, 3}, {8}}, [](G& g, auto& p) {
      return g.sampled_softmax_loss(p[0], p[1], p[2], {1, 6}, {1.0, 0.5}, {0, 3, 5}, {-0.1, -0.7, -1.2},
                                    {-0.4, -2.0});
    });
    CHECK(c.worst() < tol);
  }
}

TEST_CASE("cross entropy equals nll of softmax") {
  std::mt19937_64 rng(2);
  G g(false);
  Var z = g.constant(random_array({4, 7}, rng, -5, 5));
  std::vector<int> t{0, 6, 3, 3};
  std::vector<double> w{1, 1, 0.5, 2};
  CHECK(g.scalar(g.cross_entropy(z, t, w)) == doctest::Approx(g.scalar(g.nll(g.softmax(z), t, w))).epsilon(1e-12));
}

TEST_CASE("sampled softmax loss by hand") {
  G g(false);
  Array<double> h({1, 2}, std::vector<double>{1.0, -1.0});
  Array<double> w({4, 2}, std::vector<double>{0.5, 0.1, -0.3, 0.2, 0.0, 1.0, 0.7, 0.7});
  Array<double> b({4}, std::vector<double>{0.1, 0.0, -0.1, 0.2});
  // target 2, negatives 0 and 3
  double zt = 0.0 * 1 + 1.0 * -1 - 0.1 - std::log(0.3);
  double z0 = 0.5 - 0.1 + 0.1 - std::log(0.6);
  double z3 = 0.7 - 0.7 + 0.2 - std::log(0.2);
  double expected = -(zt - std::log(std::exp(zt) + std::exp(z0) + std::exp(z3)));
  Var loss = g.sampled_softmax_loss(g.constant(h), g.constant(w), g.constant(b), {2}, {1.0}, {0, 3},
                                    {std::log(0.6), std::log(0.2)}, {std::log(0.3)});
  CHECK(g.scalar(loss) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("pointer scatter examples") {
  G g(false);
  Var alpha = g.constant(Array<double>({1, 2}, std::vector<double>{0.7, 0.3}));
  Var i = g.pointer_scatter(alpha, {4, 1}, {1, 1}, 6, 1000);
  const auto& v = g.value(i);
  double e3 = std::exp(0.3), e7 = std::exp(0.7);
  CHECK(v[1] == doctest::Approx(e3 / (e3 + e7)).epsilon(1e-12));
  CHECK(v[4] == doctest::Approx(e7 / (e3 + e7)).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(0.40131).epsilon(1e-4));
  CHECK(v[0] + v[2] + v[3] + v[5] < 1e-12);

  Var dup = g.pointer_scatter(g.constant(Array<double>({1, 2}, std::vector<double>{0.6, 0.4})), {2, 2}, {1, 1}, 3, 1000);
  // one active id: all mass lands on it
  CHECK(g.value(dup)[2] == doctest::Approx(1.0));
  Var two = g.pointer_scatter(g.constant(Array<double>({1, 3}, std::vector<double>{0.6, 0.4, 0.5})), {2, 2, 0}, {1, 1, 1}, 3, 1000);
  double e10 = std::exp(1.0), e5 = std::exp(0.5);
  CHECK(g.value(two)[2] == doctest::Approx(e10 / (e10 + e5)).epsilon(1e-12));
}

TEST_CASE("scalar mix example") {
  G g(false);
  Var lambda = g.constant(Array<double>({1, 2}, std::vector<double>{0.5, 0.5}));
  Var y = g.constant(Array<double>({1, 2}, std::vector<double>{0.2, 0.8}));
  Var i = g.constant(Array<double>({1, 2}, std::vector<double>{0.6, 0.4}));
  Var mix = g.scalar_mix(lambda, y, i);
  CHECK(g.value(mix)[0] == doctest::Approx(0.4));
  CHECK(g.value(mix)[1] == doctest::Approx(0.6));
  Var pinned = g.scalar_mix(g.constant(Array<double>({1, 2}, std::vector<double>{1, 0})), y, i);
  CHECK(g.value(pinned)[0] == 0.2);
}

TEST_CASE("dropout") {
  std::mt19937_64 rng(17);
  G g(false);
  Var x = g.constant(Array<double>({1, 100000}, 1.0));
  Var eval = g.dropout(x, 0.1, false, rng);
  for (double v : g.value(eval).values()) CHECK(v == 1.0);
  Var train = g.dropout(x, 0.1, true, rng);
  double mean = 0;
  std::size_t zeros = 0;
  for (double v : g.value(train).values()) {
    mean += v;
    zeros += v == 0.0;
  }
  mean /= 100000;
  CHECK(std::abs(mean - 1) < 0.01);
  CHECK(zeros > 9000);
  CHECK(zeros < 11000);
}

TEST_CASE("clipping") {
  ParameterSet<double> params;
  auto& a = params.add("a", {2});
  auto& b = params.add("b", {1});
  a.grad[0] = 6;
  a.grad[1] = 0;
  b.grad[0] = 8;
  CHECK(clip_by_global_norm(params, 5) == doctest::Approx(10));
  CHECK(params.get("a").grad[0] == doctest::Approx(3));
  CHECK(params.get("b").grad[0] == doctest::Approx(4));

  params.get("a").grad[0] = 3;
  params.get("b").grad[0] = 0;
  clip_by_global_norm(params, 5);
  CHECK(params.get("a").grad[0] == 3);
  params.zero_grad();
  clip_by_global_norm(params, 5);
  CHECK(global_norm(params) == 0);
}

TEST_CASE("sgd and decay") {
  ParameterSet<double> params;
  auto& p = params.add("p", {2});
  p.value[0] = 1;
  p.value[1] = 1;
  p.grad[0] = 0.5;
  sgd_step(params, 0.7);
  CHECK(params.get("p").value[0] == doctest::Approx(0.65));
  CHECK(params.get("p").value[1] == 1);
  CHECK(decay_lr(decay_lr(0.7, 0.9), 0.9) == doctest::Approx(0.567));
}

TEST_CASE("init is uniform in range and seeded") {
  ParameterSet<float> a, b;
  a.add("w", {50, 50});
  b.add("w", {50, 50});
  std::mt19937_64 r1(4), r2(4);
  a.init_uniform(r1, 0.05);
  b.init_uniform(r2, 0.05);
  for (std::size_t i = 0; i < 2500; ++i) {
    CHECK(a.get("w").value[i] == b.get("w").value[i]);
    CHECK(std::abs(a.get("w").value[i]) < 0.05f);
  }
}

TEST_CASE("log-uniform sampler") {
  const std::size_t V = 1000;
  LogUniformSampler sampler(V);
  double total = 0;
  for (std::size_t i = 0; i < V; ++i) total += sampler.probability(static_cast<int>(i));
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(23);
  const int draws = 100000;
  std::vector<int> hits(V);
  for (int d = 0; d < draws; ++d) ++hits[static_cast<std::size_t>(sampler.draw(rng))];
  for (int id : {0, 1, 5, 50}) {
    double p = std::log(double(id + 2) / (id + 1)) / std::log(double(V + 1));
    double se = std::sqrt(p * (1 - p) / draws);
    CHECK(std::abs(hits[static_cast<std::size_t>(id)] / double(draws) - p) < 3 * se);
  }

  auto s = sampler.sample(20, {0, 3}, rng);
  std::vector<int> sorted = s.ids;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(std::find(sorted.begin(), sorted.end(), 0) == sorted.end());
  CHECK(std::find(sorted.begin(), sorted.end(), 3) == sorted.end());
  CHECK(s.tries >= 20);
  CHECK(sampler.expected_count(0, 1) == doctest::Approx(sampler.probability(0)));
  CHECK_THROWS_AS(LogUniformSampler(5).sample(4, {0, 1}, rng), Error);
}
