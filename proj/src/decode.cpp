#include "codesuggest/decode.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <regex>
#include <set>

#include "json.hpp"

#include "codesuggest/error.hpp"

namespace codesuggest::neural {

std::vector<std::uint8_t> anonymous_ids(const corpus::Vocabulary& vocab) {
  static const std::regex pattern("^(class|var|arg|attribute|function)[0-9]+$");
  std::vector<std::uint8_t> out(vocab.size(), 0);
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out[i] = std::regex_match(vocab.token(static_cast<int>(i)), pattern) ? 1 : 0;
  }
  return out;
}

template <typename T>
std::vector<double> prime(Model<T>& model, DecodeState<T>& state, const std::vector<int>& context,
                          const std::vector<std::uint8_t>& intro) {
  if (context.empty()) throw Error(ErrorCode::BadConfig, "context must not be empty");
  std::vector<double> dist;
  for (std::size_t i = 0; i < context.size(); ++i) {
    dist = step_distribution(model, state, context[i], i < intro.size() && intro[i]);
  }
  return dist;
}

template <typename T>
std::vector<Hypothesis> suggest(Model<T>& model, const std::vector<int>& context,
                                const std::vector<std::uint8_t>& intro, std::size_t m, std::size_t beam,
                                const std::vector<std::uint8_t>& anonymous) {
  if (beam == 0) throw Error(ErrorCode::BadConfig, "beam width must be at least 1");
  struct Live {
    Hypothesis hyp;
    DecodeState<T> state;
    std::vector<double> dist;
    std::set<int> seen;
  };
  Live root{{}, DecodeState<T>(1, model.config.hidden), {}, {}};
  root.dist = prime(model, root.state, context, intro);
  root.seen.insert(context.begin(), context.end());
  std::vector<Live> beams;
  beams.push_back(std::move(root));
  for (std::size_t step = 0; step < m; ++step) {
    struct Candidate {
      double score;
      std::size_t parent;
      int token;
    };
    std::vector<Candidate> cands;
    for (std::size_t p = 0; p < beams.size(); ++p) {
      const auto& d = beams[p].dist;
      for (std::size_t v = 0; v < d.size(); ++v) {
        double lp = d[v] > 0.0 ? std::log(d[v]) : -std::numeric_limits<double>::infinity();
        cands.push_back({beams[p].hyp.logprob + lp, p, static_cast<int>(v)});
      }
    }
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      const auto& ta = beams[a.parent].hyp.tokens;
      const auto& tb = beams[b.parent].hyp.tokens;
      if (ta != tb) return ta < tb;
      return a.token < b.token;
    };
    std::size_t keep = std::min(beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);
    std::vector<Live> next;
    for (std::size_t c = 0; c < keep; ++c) {
      const Live& parent = beams[cands[c].parent];
      Live child{parent.hyp, parent.state, {}, parent.seen};
      int tok = cands[c].token;
      child.hyp.tokens.push_back(tok);
      child.hyp.logprob = cands[c].score;
      bool is_intro = static_cast<std::size_t>(tok) < anonymous.size() && anonymous[static_cast<std::size_t>(tok)] &&
                      !child.seen.count(tok);
      child.seen.insert(tok);
      if (step + 1 < m) child.dist = step_distribution(model, child.state, tok, is_intro);
      next.push_back(std::move(child));
    }
    beams = std::move(next);
  }
  std::vector<Hypothesis> out;
  for (auto& b : beams) out.push_back(std::move(b.hyp));
  return out;
}

std::vector<std::pair<int, double>> top_tokens(const std::vector<double>& dist, std::size_t n) {
  std::vector<std::pair<int, double>> all;
  all.reserve(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) all.emplace_back(static_cast<int>(i), dist[i]);
  n = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                    [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
  all.resize(n);
  return all;
}

template <typename T>
std::vector<TraceRecord> trace(Model<T>& model, const std::vector<int>& context,
                               const std::vector<std::uint8_t>& intro) {
  DecodeState<T> state(1, model.config.hidden);
  std::vector<TraceRecord> records;
  for (std::size_t i = 0; i < context.size(); ++i) {
    TraceRecord rec;
    rec.input = context[i];
    std::function<void(const Graph<T>&, const StepResult&)> observe =
        [&](const Graph<T>& graph, const StepResult& result) {
                                    if (result.lambda.valid()) {
                                      const auto& l = graph.value(result.lambda);
                                      rec.lambda = std::array<double, 2>{double(l.at(0, 0)), double(l.at(0, 1))};
                                    }
                                    if (result.alpha.valid() && !result.slot_ids.empty()) {
                                      const auto& a = graph.value(result.alpha);
                                      for (std::size_t j = 0; j < result.slot_ids[0].size(); ++j) {
                                        rec.slots.emplace_back(result.slot_ids[0][j], double(a.at(0, j)));
                                      }
                                    }
        };
    auto dist = step_distribution(model, state, context[i], i < intro.size() && intro[i], observe);
    rec.top = top_tokens(dist, 5);
    records.push_back(std::move(rec));
  }
  return records;
}

std::string trace_jsonl(const std::vector<TraceRecord>& records, const corpus::Vocabulary& vocab) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["input"] = vocab.token(r.input);
    if (r.lambda) j["lambda"] = {(*r.lambda)[0], (*r.lambda)[1]};
    j["slots"] = nlohmann::ordered_json::array();
    for (const auto& [id, a] : r.slots) j["slots"].push_back({{"token", vocab.token(id)}, {"alpha", a}});
    j["top5"] = nlohmann::ordered_json::array();
    for (const auto& [id, p] : r.top) j["top5"].push_back({{"token", vocab.token(id)}, {"prob", p}});
    out += j.dump() + "\n";
  }
  return out;
}

std::string trace_heatmap(const std::vector<TraceRecord>& records, std::size_t width) {
  std::string out;
  char buf[32];
  for (const auto& r : records) {
    for (std::size_t j = 0; j < width; ++j) {
      double a = j < r.slots.size() ? r.slots[j].second : 0.0;
      std::snprintf(buf, sizeof buf, "%.6f", a);
      if (j) out += '\t';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

template std::vector<double> prime(Model<float>&, DecodeState<float>&, const std::vector<int>&,
                                   const std::vector<std::uint8_t>&);
template std::vector<double> prime(Model<double>&, DecodeState<double>&, const std::vector<int>&,
                                   const std::vector<std::uint8_t>&);
template std::vector<Hypothesis> suggest(Model<float>&, const std::vector<int>&, const std::vector<std::uint8_t>&,
                                         std::size_t, std::size_t, const std::vector<std::uint8_t>&);
template std::vector<Hypothesis> suggest(Model<double>&, const std::vector<int>&, const std::vector<std::uint8_t>&,
                                         std::size_t, std::size_t, const std::vector<std::uint8_t>&);
template std::vector<TraceRecord> trace(Model<float>&, const std::vector<int>&, const std::vector<std::uint8_t>&);
template std::vector<TraceRecord> trace(Model<double>&, const std::vector<int>&, const std::vector<std::uint8_t>&);

}  // namespace codesuggest::neural
