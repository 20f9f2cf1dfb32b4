#include "codesuggest/eval.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "codesuggest/error.hpp"

namespace codesuggest::eval {

std::size_t target_rank(std::span<const double> dist, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= dist.size()) {
    throw Error(ErrorCode::VocabMismatch, "target id outside the distribution");
  }
  const double p = dist[static_cast<std::size_t>(target)];
  std::size_t rank = 0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (dist[j] > p || (dist[j] == p && j < static_cast<std::size_t>(target))) ++rank;
  }
  return rank;
}

double Bucket::accuracy() const { return count ? 100.0 * static_cast<double>(hits1) / static_cast<double>(count) : 0.0; }
double Bucket::accuracy_at5() const {
  return count ? 100.0 * static_cast<double>(hits5) / static_cast<double>(count) : 0.0;
}

double perplexity(double nll, std::size_t count) {
  return count ? std::exp(nll / static_cast<double>(count)) : 0.0;
}

double MetricsReport::perplexity() const { return eval::perplexity(nll, all.count); }

void Accumulator::add(std::span<const double> dist, int target, bool identifier) {
  std::size_t rank = target_rank(dist, target);
  add_probability(dist[static_cast<std::size_t>(target)], identifier);
  for (Bucket* b : {&totals_.all, identifier ? &totals_.ids : &totals_.other}) {
    b->hits1 += rank < 1;
    b->hits5 += rank < 5;
  }
}

void Accumulator::add_probability(double p, bool identifier) {
  totals_.nll -= std::log(p);
  ++totals_.all.count;
  ++(identifier ? totals_.ids : totals_.other).count;
}

void Accumulator::merge(const Accumulator& other) {
  totals_.nll += other.totals_.nll;
  for (auto [a, b] : {std::pair{&totals_.all, &other.totals_.all}, std::pair{&totals_.ids, &other.totals_.ids},
                      std::pair{&totals_.other, &other.totals_.other}}) {
    a->count += b->count;
    a->hits1 += b->hits1;
    a->hits5 += b->hits5;
  }
}

MetricsReport Accumulator::report(std::string name) const {
  MetricsReport r = totals_;
  r.name = std::move(name);
  return r;
}

MetricsReport evaluate(neural::Model<float>& model, const std::vector<corpus::EncodedFile>& files,
                       std::size_t lanes, std::size_t unroll, std::string name) {
  Accumulator acc;
  neural::for_each_prediction(model, files, lanes, unroll,
                              [&](const neural::Prediction& p) { acc.add(p.distribution, p.target, p.identifier); });
  return acc.report(std::move(name));
}

MetricsReport evaluate(const ngram::NgramModel& model, const std::vector<corpus::EncodedFile>& files,
                       std::string name) {
  Accumulator acc;
  std::vector<double> dist;
  for (const auto& f : files) {
    for (std::size_t i = 1; i < f.ids.size(); ++i) {
      std::span<const int> context(f.ids.data(), i);
      model.distribution(context, dist);
      acc.add(dist, f.ids[i], f.identifier[i] != 0);
    }
  }
  return acc.report(std::move(name));
}

std::string report_json(const std::vector<MetricsReport>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["PP"] = r.perplexity();
    j["Acc"] = {{"All", r.all.accuracy()}, {"IDs", r.ids.accuracy()}, {"Other", r.other.accuracy()}};
    j["Acc@5"] = {{"All", r.all.accuracy_at5()}, {"IDs", r.ids.accuracy_at5()}, {"Other", r.other.accuracy_at5()}};
    j["tokens"] = {{"All", r.all.count}, {"IDs", r.ids.count}, {"Other", r.other.count}};
    out.push_back(j);
  }
  return out.dump(2) + "\n";
}

std::string report_table(const std::vector<MetricsReport>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-16s %10s | %7s %7s %7s | %7s %7s %7s | %9s\n", "", "PP", "Acc", "", "",
                "Acc@5", "", "", "tokens");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-16s %10s | %7s %7s %7s | %7s %7s %7s | %9s\n", "", "", "All", "IDs", "Other",
                "All", "IDs", "Other", "");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %10.2f | %7.2f %7.2f %7.2f | %7.2f %7.2f %7.2f | %9zu\n", r.name.c_str(),
                  r.perplexity(), r.all.accuracy(), r.ids.accuracy(), r.other.accuracy(), r.all.accuracy_at5(),
                  r.ids.accuracy_at5(), r.other.accuracy_at5(), r.all.count);
    out += buf;
  }
  return out;
}

}  // namespace codesuggest::eval
