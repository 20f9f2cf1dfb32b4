#include "doctest.h"

#include <cmath>
#include <vector>

#include "codesuggest/eval.hpp"
#include "codesuggest/ngram.hpp"
#include "json.hpp"
#include "neural_checks.hpp"

using namespace codesuggest;
using namespace codesuggest::eval;

TEST_CASE("rank with ties") {
  std::vector<double> d{0.1, 0.3, 0.3, 0.2, 0.1};
  CHECK(target_rank(d, 1) == 0);
  CHECK(target_rank(d, 2) == 1);
  CHECK(target_rank(d, 3) == 2);
  CHECK(target_rank(d, 0) == 3);
  CHECK(target_rank(d, 4) == 4);
}

TEST_CASE("perplexity arithmetic") {
  Accumulator acc;
  acc.add_probability(0.5, false);
  acc.add_probability(0.125, true);
  CHECK(acc.report().perplexity() == doctest::Approx(4.0).epsilon(1e-12));

  Accumulator perfect;
  std::vector<double> one{0, 1, 0};
  for (int i = 0; i < 5; ++i) perfect.add(one, 1, false);
  CHECK(perfect.report().perplexity() == 1.0);
  CHECK(perfect.report().all.accuracy() == 100.0);
}

TEST_CASE("uniform model") {
  std::vector<double> uniform(100, 0.01);
  Accumulator acc;
  // every id once: exactly the five lowest ids hit Acc@5, id 0 hits Acc
  for (int t = 0; t < 100; ++t) acc.add(uniform, t, t % 2 == 0);
  auto r = acc.report();
  CHECK(r.perplexity() == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(r.all.accuracy_at5() == doctest::Approx(5.0));
  CHECK(r.all.accuracy() == doctest::Approx(1.0));
  CHECK(r.all.count == r.ids.count + r.other.count);
  CHECK(r.ids.hits5 == 3);
  CHECK(r.other.hits5 == 2);
}

TEST_CASE("fifth place hits only Acc@5") {
  std::vector<double> d{0.3, 0.25, 0.2, 0.15, 0.1};
  Accumulator acc;
  acc.add(d, 4, true);
  auto r = acc.report();
  CHECK(r.all.hits1 == 0);
  CHECK(r.all.hits5 == 1);
}

TEST_CASE("bucket weighting and merge") {
  std::vector<double> d{0.4, 0.3, 0.2, 0.05, 0.03, 0.02};
  Accumulator a, b;
  for (int t = 0; t < 6; ++t) a.add(d, t, t < 3);
  for (int t = 0; t < 4; ++t) b.add(d, 5 - t, t == 0);
  a.merge(b);
  auto r = a.report();
  CHECK(r.all.count == 10);
  double weighted = (r.ids.accuracy() * double(r.ids.count) + r.other.accuracy() * double(r.other.count)) / 10.0;
  CHECK(std::abs(r.all.accuracy() - weighted) < 1e-9);
  CHECK(r.all.accuracy_at5() >= r.all.accuracy());
}

TEST_CASE("n-gram evaluation matches the model's perplexity") {
  auto files = testdata::random_files(4, 5, 15, 20, 40);
  std::vector<std::vector<int>> ids;
  for (const auto& f : files) ids.push_back(f.ids);
  auto model = ngram::NgramModel::train(ids, 3, 15);
  auto report = evaluate(model, files, "train");
  CHECK(report.perplexity() == doctest::Approx(model.perplexity(ids)).epsilon(1e-12));
  std::size_t expected = 0;
  for (const auto& f : files) expected += f.size() - 1;
  CHECK(report.all.count == expected);
}

TEST_CASE("neural evaluation buckets identifiers") {
  auto files = testdata::random_files(4, 3, 15, 20, 40);
  neural::ModelConfig c;
  c.arch = neural::Architecture::Pointer;
  c.vocab_size = 15;
  c.hidden = 8;
  auto model = neural::Model<float>::create(c, 2);
  auto r = evaluate(model, files, 2, 10, "dev");
  std::size_t ids = 0, all = 0;
  for (const auto& f : files) {
    for (std::size_t i = 1; i < f.size(); ++i) {
      ids += f.identifier[i];
      ++all;
    }
  }
  CHECK(r.all.count == all);
  CHECK(r.ids.count == ids);
  CHECK(r.perplexity() > 1.0);
}

TEST_CASE("report formats") {
  Accumulator acc;
  std::vector<double> d{0.5, 0.25, 0.25};
  acc.add(d, 0, true);
  acc.add(d, 2, false);
  auto r = acc.report("test");
  auto j = nlohmann::json::parse(report_json({r}));
  REQUIRE(j.is_array());
  CHECK(j[0]["name"] == "test");
  CHECK(j[0]["PP"].get<double>() == doctest::Approx(std::sqrt(8.0)));
  CHECK(j[0]["Acc"]["IDs"].get<double>() == 100.0);
  CHECK(j[0]["Acc"]["Other"].get<double>() == 0.0);
  CHECK(j[0]["Acc@5"]["All"].get<double>() == 100.0);
  auto table = report_table({r});
  CHECK(table.find("test") != std::string::npos);
  CHECK(table.find("2.83") != std::string::npos);
}
