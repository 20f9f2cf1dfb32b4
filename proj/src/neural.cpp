#include "codesuggest/neural.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "codesuggest/error.hpp"
#include "codesuggest/optim.hpp"

namespace codesuggest::neural {

const char* architecture_name(Architecture arch) {
  switch (arch) {
    case Architecture::Lstm: return "lstm";
    case Architecture::Attention: return "attention";
    case Architecture::Pointer: return "pointer";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  if (name == "lstm") return Architecture::Lstm;
  if (name == "attention") return Architecture::Attention;
  if (name == "pointer") return Architecture::Pointer;
  throw Error(ErrorCode::BadConfig, "unknown architecture '" + std::string(name) + "'");
}

template <typename T>
Model<T> Model<T>::create(const ModelConfig& config, std::uint64_t seed) {
  if (config.vocab_size == 0 || config.hidden == 0 || config.memory == 0) {
    throw Error(ErrorCode::BadConfig, "vocabulary, hidden and memory sizes must be positive");
  }
  if (config.dropout < 0.0 || config.dropout >= 1.0) throw Error(ErrorCode::BadConfig, "dropout must be in [0, 1)");
  Model model;
  model.config = config;
  const std::size_t V = config.vocab_size;
  const std::size_t k = config.hidden;
  auto& p = model.params;
  p.add("embedding", {V, k});
  p.add("lstm.weight", {4 * k, 2 * k});
  p.add("lstm.bias", {4 * k});
  p.add("output.weight", {V, k});
  p.add("output.bias", {V});
  if (config.arch != Architecture::Lstm) {
    p.add("attention.WM", {k, k});
    p.add("attention.Wh", {k, k});
    p.add("attention.w", {k});
  }
  if (config.arch == Architecture::Attention) p.add("attention.WA", {k, 2 * k});
  if (config.arch == Architecture::Pointer) {
    p.add("controller.weight", {2, 3 * k});
    p.add("controller.bias", {2});
  }
  std::mt19937_64 rng(seed);
  p.init_uniform(rng, config.init_range);
  auto& bias = p.get("lstm.bias").value;
  for (std::size_t j = k; j < 2 * k; ++j) bias[j] = T(1);
  return model;
}

template <typename T>
DecodeState<T>::DecodeState(std::size_t lanes_, std::size_t hidden_)
    : lanes(lanes_), hidden(hidden_), h({lanes_, hidden_}), c({lanes_, hidden_}), window(lanes_), memory(lanes_) {}

template <typename T>
void DecodeState<T>::reset() {
  for (std::size_t b = 0; b < lanes; ++b) reset_lane(b);
}

template <typename T>
void DecodeState<T>::reset_lane(std::size_t lane) {
  std::fill(h.row(lane).begin(), h.row(lane).end(), T(0));
  std::fill(c.row(lane).begin(), c.row(lane).end(), T(0));
  window.at(lane).clear();
  memory.at(lane).clear();
}

template <typename T>
Runner<T>::Runner(Model<T>& model, Graph<T>& graph, DecodeState<T>& state, bool train, std::mt19937_64* rng)
    : model_(model), graph_(graph), state_(state), train_(train), rng_(rng) {
  if (state.hidden != model.config.hidden) throw Error(ErrorCode::ShapeMismatch, "state width differs from model");
  if (train && model.config.dropout > 0.0 && rng == nullptr) {
    throw Error(ErrorCode::BadConfig, "training with dropout needs a random generator");
  }
  h_ = graph_.constant(state.h);
  c_ = graph_.constant(state.c);
  window_ = bind(state.window);
  memory_ = bind(state.memory);
}

template <typename T>
Var Runner<T>::parameter(const std::string& name) {
  for (const auto& [n, v] : bound_) {
    if (n == name) return v;
  }
  Var v = graph_.parameter(model_.params.get(name));
  bound_.emplace_back(name, v);
  return v;
}

template <typename T>
typename Runner<T>::Lanes Runner<T>::bind(const std::vector<std::deque<StoredSlot<T>>>& stored) {
  Lanes live(state_.lanes);
  std::size_t total = 0;
  for (const auto& lane : stored) total += lane.size();
  if (total == 0) return live;
  Array<T> values({total, state_.hidden});
  std::size_t r = 0;
  for (std::size_t b = 0; b < stored.size(); ++b) {
    for (const auto& slot : stored[b]) {
      std::copy(slot.value.begin(), slot.value.end(), values.row(r).begin());
      live[b].push_back(LiveSlot{tensor::RowRef{Var{}, r}, slot.id});
      ++r;
    }
  }
  Var block = graph_.constant(std::move(values));
  for (auto& lane : live) {
    for (auto& slot : lane) slot.ref.var = block;
  }
  return live;
}

template <typename T>
void Runner<T>::store(const Lanes& live, std::vector<std::deque<StoredSlot<T>>>& stored) const {
  for (std::size_t b = 0; b < live.size(); ++b) {
    stored[b].clear();
    for (const auto& slot : live[b]) {
      auto row = graph_.value(slot.ref.var).row(slot.ref.row);
      stored[b].push_back(StoredSlot<T>{std::vector<T>(row.begin(), row.end()), slot.id});
    }
  }
}

template <typename T>
typename Runner<T>::Attended Runner<T>::attend(const Lanes& slots, Var h, StepResult& result) {
  const std::size_t B = state_.lanes;
  const std::size_t k = state_.hidden;
  // Slot columns only as wide as the fullest lane.
  std::size_t K = 1;
  for (const auto& lane : slots) K = std::max(K, lane.size());
  Attended out;
  out.ids.assign(B * K, 0);
  out.mask.assign(B * K, 0);
  out.empty.assign(B, 1);
  result.slot_ids.assign(B, {});
  std::vector<tensor::RowRef> refs(B * K);
  bool any = false;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t j = 0; j < slots[b].size(); ++j) {
      refs[b * K + j] = slots[b][j].ref;
      out.ids[b * K + j] = slots[b][j].id;
      out.mask[b * K + j] = 1;
      out.empty[b] = 0;
      result.slot_ids[b].push_back(slots[b][j].id);
      any = true;
    }
  }
  if (!any) {
    out.context = graph_.constant(Array<T>({B, k}));
    return out;
  }
  Var M = graph_.gather_rows(refs, k);
  Var wm = graph_.matmul(M, parameter("attention.WM"), true);
  Var wh = graph_.matmul(h, parameter("attention.Wh"), true);
  Var G = graph_.tanh(graph_.add_rows_broadcast(wm, wh, K));
  Var scores = graph_.reshape(graph_.matmul(G, parameter("attention.w"), true), {B, K});
  Var alpha = graph_.masked_softmax(scores, out.mask);
  result.alpha = alpha;
  out.context = graph_.weighted_rows(alpha, M);
  return out;
}

template <typename T>
StepResult Runner<T>::step(const StepInput& input) {
  const std::size_t B = state_.lanes;
  const std::size_t k = state_.hidden;
  const std::size_t K = model_.config.memory;
  if (input.ids.size() != B || input.valid.size() != B || input.reset.size() != B || input.intro.size() != B) {
    throw Error(ErrorCode::ShapeMismatch, "step input does not match the lane count");
  }
  bool any_reset = false;
  std::vector<T> keep(B, T(1));
  for (std::size_t b = 0; b < B; ++b) {
    if (input.reset[b]) {
      any_reset = true;
      keep[b] = T(0);
      window_[b].clear();
      memory_[b].clear();
    }
  }
  if (any_reset) {
    h_ = graph_.scale_rows(h_, keep);
    c_ = graph_.scale_rows(c_, keep);
  }

  std::mt19937_64 unused;
  Var x = graph_.rowselect(parameter("embedding"), input.ids);
  Var xd = graph_.dropout(x, model_.config.dropout, train_, rng_ ? *rng_ : unused);
  Var z = graph_.add_bias(graph_.matmul(graph_.concat_cols({xd, h_}), parameter("lstm.weight"), true),
                          parameter("lstm.bias"));
  Var gi = graph_.sigmoid(graph_.slice_cols(z, 0, k));
  Var gf = graph_.sigmoid(graph_.slice_cols(z, k, k));
  Var gg = graph_.tanh(graph_.slice_cols(z, 2 * k, k));
  Var go = graph_.sigmoid(graph_.slice_cols(z, 3 * k, k));
  c_ = graph_.add(graph_.mul(gf, c_), graph_.mul(gi, gg));
  h_ = graph_.mul(go, graph_.tanh(c_));

  StepResult result;
  switch (model_.config.arch) {
    case Architecture::Lstm: {
      result.hidden = h_;
      result.output = graph_.add_bias(graph_.matmul(h_, parameter("output.weight"), true), parameter("output.bias"));
      break;
    }
    case Architecture::Attention: {
      Attended att = attend(window_, h_, result);
      Var n = graph_.tanh(graph_.matmul(graph_.concat_cols({h_, att.context}), parameter("attention.WA"), true));
      result.hidden = n;
      result.output = graph_.add_bias(graph_.matmul(n, parameter("output.weight"), true), parameter("output.bias"));
      for (std::size_t b = 0; b < B; ++b) {
        if (!input.valid[b]) continue;
        window_[b].push_back(LiveSlot{tensor::RowRef{h_, b}, input.ids[b]});
        if (window_[b].size() > K) window_[b].pop_front();
      }
      break;
    }
    case Architecture::Pointer: {
      result.hidden = h_;
      Var logits = graph_.add_bias(graph_.matmul(h_, parameter("output.weight"), true), parameter("output.bias"));
      Var y = graph_.softmax(logits);
      result.lm = y;
      result.logits = false;
      Attended att = attend(memory_, h_, result);
      if (result.alpha.valid()) {
        Var i = graph_.pointer_scatter(result.alpha, att.ids, att.mask, model_.config.vocab_size,
                                       model_.config.pointer_c);
        Var lam = graph_.softmax(graph_.add_bias(
            graph_.matmul(graph_.concat_cols({h_, xd, att.context}), parameter("controller.weight"), true),
            parameter("controller.bias")));
        lam = graph_.pin_rows(lam, att.empty, {T(1), T(0)});
        result.pointer = i;
        result.lambda = lam;
        result.output = graph_.scalar_mix(lam, y, i);
      } else {
        result.output = y;
      }
      for (std::size_t b = 0; b < B; ++b) {
        if (!input.valid[b] || !input.intro[b]) continue;
        memory_[b].push_back(LiveSlot{tensor::RowRef{h_, b}, input.ids[b]});
        if (memory_[b].size() > K) memory_[b].pop_front();
      }
      break;
    }
  }
  return result;
}

template <typename T>
void Runner<T>::finish() {
  state_.h = graph_.value(h_);
  state_.c = graph_.value(c_);
  store(window_, state_.window);
  store(memory_, state_.memory);
}

template <typename T>
std::vector<double> distribution_row(const Graph<T>& graph, const StepResult& result, std::size_t lane) {
  auto row = graph.value(result.output).row(lane);
  std::vector<double> out(row.begin(), row.end());
  if (result.logits) {
    double hi = *std::max_element(out.begin(), out.end());
    double total = 0.0;
    for (auto& v : out) {
      v = std::exp(v - hi);
      total += v;
    }
    for (auto& v : out) v /= total;
  }
  return out;
}

template <typename T>
std::vector<double> step_distribution(Model<T>& model, DecodeState<T>& state, int input, bool intro,
                                      const std::function<void(const Graph<T>&, const StepResult&)>& trace) {
  if (state.lanes != 1) throw Error(ErrorCode::ShapeMismatch, "single-lane step on a batched state");
  Graph<T> graph(false);
  Runner<T> runner(model, graph, state, false, nullptr);
  StepInput in{{input}, {1}, {0}, {static_cast<std::uint8_t>(intro)}};
  StepResult result = runner.step(in);
  std::vector<double> dist = distribution_row(graph, result, 0);
  if (trace) trace(graph, result);
  runner.finish();
  return dist;
}

StepInput step_input(const corpus::Segment& segment, std::size_t t) {
  StepInput in;
  in.ids.resize(segment.lanes);
  in.valid.resize(segment.lanes);
  in.reset.resize(segment.lanes);
  in.intro.resize(segment.lanes);
  for (std::size_t b = 0; b < segment.lanes; ++b) {
    std::size_t k = segment.at(b, t);
    in.ids[b] = segment.inputs[k];
    in.valid[b] = segment.valid[k];
    in.reset[b] = segment.reset[k];
    in.intro[b] = segment.intro[k];
  }
  return in;
}

template <typename T>
void for_each_prediction(Model<T>& model, const std::vector<corpus::EncodedFile>& files, std::size_t lanes,
                         std::size_t unroll, const std::function<void(const Prediction&)>& fn) {
  corpus::BatchStream stream(files, lanes, unroll);
  DecodeState<T> state(lanes, model.config.hidden);
  std::vector<std::size_t> next(files.size(), 1);
  for (std::size_t s = 0; s < stream.segment_count(); ++s) {
    corpus::Segment seg = stream.segment(s);
    Graph<T> graph(false);
    Runner<T> runner(model, graph, state, false, nullptr);
    for (std::size_t t = 0; t < seg.length; ++t) {
      StepResult result = runner.step(step_input(seg, t));
      for (std::size_t b = 0; b < lanes; ++b) {
        std::size_t k = seg.at(b, t);
        if (!seg.target_mask[k]) continue;
        std::vector<double> dist = distribution_row(graph, result, b);
        auto f = static_cast<std::size_t>(seg.file_index[k]);
        fn(Prediction{f, next[f]++, seg.targets[k], seg.target_identifier[k] != 0, dist});
      }
    }
    runner.finish();
  }
}

template <typename T>
Var segment_loss(Model<T>& model, Graph<T>& graph, DecodeState<T>& state, const corpus::Segment& segment,
                 bool train, std::mt19937_64& rng, std::size_t sampled) {
  Runner<T> runner(model, graph, state, train, &rng);
  std::size_t count = 0;
  for (std::size_t t = 0; t < segment.length; ++t) {
    for (std::size_t b = 0; b < segment.lanes; ++b) count += segment.target_mask[segment.at(b, t)];
  }
  const bool use_sampled = train && sampled > 0 && model.config.arch != Architecture::Pointer &&
                           sampled < model.config.vocab_size;
  std::optional<tensor::LogUniformSampler> sampler;
  if (use_sampled) sampler.emplace(model.config.vocab_size);
  std::vector<Var> losses;
  for (std::size_t t = 0; t < segment.length; ++t) {
    StepResult result = runner.step(step_input(segment, t));
    if (count == 0) continue;
    std::vector<int> targets(segment.lanes);
    std::vector<T> weights(segment.lanes);
    bool any = false;
    for (std::size_t b = 0; b < segment.lanes; ++b) {
      std::size_t k = segment.at(b, t);
      targets[b] = segment.targets[k];
      if (segment.target_mask[k]) {
        weights[b] = static_cast<T>(1.0 / static_cast<double>(count));
        any = true;
      }
    }
    if (!any) continue;
    if (model.config.arch == Architecture::Pointer) {
      losses.push_back(graph.nll(result.output, targets, weights));
    } else if (use_sampled) {
      std::vector<int> exclude(targets);
      std::sort(exclude.begin(), exclude.end());
      exclude.erase(std::unique(exclude.begin(), exclude.end()), exclude.end());
      std::size_t n = std::min(sampled - 1, model.config.vocab_size - exclude.size());
      tensor::SampledNegatives neg = sampler->sample(n, exclude, rng);
      std::vector<T> log_neg(neg.ids.size());
      std::vector<T> log_tgt(targets.size());
      for (std::size_t j = 0; j < neg.ids.size(); ++j) {
        log_neg[j] = static_cast<T>(std::log(sampler->expected_count(neg.ids[j], neg.tries)));
      }
      for (std::size_t b = 0; b < targets.size(); ++b) {
        log_tgt[b] = static_cast<T>(std::log(sampler->expected_count(targets[b], neg.tries)));
      }
      losses.push_back(graph.sampled_softmax_loss(result.hidden, runner.parameter("output.weight"),
                                                  runner.parameter("output.bias"), targets, weights, neg.ids,
                                                  log_neg, log_tgt));
    } else {
      losses.push_back(graph.cross_entropy(result.output, targets, weights));
    }
  }
  runner.finish();
  if (losses.empty()) return Var{};
  return losses.size() == 1 ? losses[0] : graph.sum(losses);
}

template struct Model<float>;
template struct Model<double>;
template struct DecodeState<float>;
template struct DecodeState<double>;
template class Runner<float>;
template class Runner<double>;
template std::vector<double> distribution_row(const Graph<float>&, const StepResult&, std::size_t);
template std::vector<double> distribution_row(const Graph<double>&, const StepResult&, std::size_t);
template std::vector<double> step_distribution(Model<float>&, DecodeState<float>&, int, bool,
                                               const std::function<void(const Graph<float>&, const StepResult&)>&);
template std::vector<double> step_distribution(Model<double>&, DecodeState<double>&, int, bool,
                                               const std::function<void(const Graph<double>&, const StepResult&)>&);
template void for_each_prediction(Model<float>&, const std::vector<corpus::EncodedFile>&, std::size_t,
                                  std::size_t, const std::function<void(const Prediction&)>&);
template void for_each_prediction(Model<double>&, const std::vector<corpus::EncodedFile>&, std::size_t,
                                  std::size_t, const std::function<void(const Prediction&)>&);
template Var segment_loss(Model<float>&, Graph<float>&, DecodeState<float>&, const corpus::Segment&, bool,
                          std::mt19937_64&, std::size_t);
template Var segment_loss(Model<double>&, Graph<double>&, DecodeState<double>&, const corpus::Segment&, bool,
                          std::mt19937_64&, std::size_t);

}  // namespace codesuggest::neural
