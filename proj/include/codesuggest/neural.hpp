#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codesuggest/corpus.hpp"
#include "codesuggest/graph.hpp"
#include "codesuggest/tensor.hpp"

namespace codesuggest::neural {

using tensor::Array;
using tensor::Graph;
using tensor::ParameterSet;
using tensor::Var;

enum class Architecture { Lstm, Attention, Pointer };

const char* architecture_name(Architecture arch);
Architecture parse_architecture(std::string_view name);

struct ModelConfig {
  Architecture arch = Architecture::Pointer;
  std::size_t vocab_size = 0;
  std::size_t hidden = 200;   // k
  std::size_t memory = 20;    // K: attention window or pointer memory slots
  double pointer_c = 1000.0;  // C
  double dropout = 0.1;
  double init_range = 0.05;
};

/// Parameter names:
///   embedding [V x k], lstm.weight [4k x 2k], lstm.bias [4k] (gates i, f, g, o;
///   input columns x then h), output.weight [V x k], output.bias [V];
///   attention: attention.WM, attention.Wh [k x k], attention.w [k], attention.WA [k x 2k];
///   pointer: attention.WM, attention.Wh, attention.w, controller.weight [2 x 3k], controller.bias [2].
template <typename T>
struct Model {
  ModelConfig config;
  ParameterSet<T> params;

  /// Registers the architecture's parameters, draws U(-r, r) and sets the
  /// forget-gate bias to 1.
  static Model create(const ModelConfig& config, std::uint64_t seed);
};

template <typename T>
struct StoredSlot {
  std::vector<T> value;
  int id = -1;
};

/// Recurrent state of a batch of lanes between graphs.
template <typename T>
struct DecodeState {
  DecodeState() = default;
  DecodeState(std::size_t lanes, std::size_t hidden);

  std::size_t lanes = 0;
  std::size_t hidden = 0;
  Array<T> h;  // [lanes x k]
  Array<T> c;
  std::vector<std::deque<StoredSlot<T>>> window;  // attention LM: previous h vectors
  std::vector<std::deque<StoredSlot<T>>> memory;  // pointer: identifier representations

  void reset();
  void reset_lane(std::size_t lane);
};

struct StepInput {
  std::vector<int> ids;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> reset;  // clear the lane before this step
  std::vector<std::uint8_t> intro;  // input introduces an identifier
};

struct StepResult {
  Var hidden;
  Var output;          // logits for lstm/attention, y* for the pointer model
  bool logits = true;
  Var lm;              // pointer: y
  Var pointer;         // pointer: i
  Var lambda;          // pointer: [B x 2]; invalid while every lane's memory is empty
  Var alpha;           // [B x n] weights over filled slots, n = fullest lane; invalid when none
  std::vector<std::vector<int>> slot_ids;  // per lane, oldest first
};

/// Unrolls the architecture inside one graph. Detached state enters as
/// constants; finish() writes the final state back.
template <typename T>
class Runner {
 public:
  Runner(Model<T>& model, Graph<T>& graph, DecodeState<T>& state, bool train, std::mt19937_64* rng);

  StepResult step(const StepInput& input);
  void finish();
  /// Graph leaf of a named parameter, created once per graph.
  Var parameter(const std::string& name);

 private:
  struct LiveSlot {
    tensor::RowRef ref;
    int id = -1;
  };
  using Lanes = std::vector<std::deque<LiveSlot>>;

  struct Attended {
    Var context;
    std::vector<int> ids;
    std::vector<std::uint8_t> mask;
    std::vector<std::uint8_t> empty;  // lanes without slots
  };

  Lanes bind(const std::vector<std::deque<StoredSlot<T>>>& stored);
  void store(const Lanes& live, std::vector<std::deque<StoredSlot<T>>>& stored) const;
  /// Attention over per-lane slots; fills alpha and slot ids of `result`.
  Attended attend(const Lanes& slots, Var h, StepResult& result);

  Model<T>& model_;
  Graph<T>& graph_;
  DecodeState<T>& state_;
  bool train_;
  std::mt19937_64* rng_;
  std::vector<std::pair<std::string, Var>> bound_;
  Var h_;
  Var c_;
  Lanes window_;
  Lanes memory_;
};

/// Probability rows (double) of a step's output, whatever its form.
template <typename T>
std::vector<double> distribution_row(const Graph<T>& graph, const StepResult& result, std::size_t lane);

/// Single-lane evaluation step; `trace` receives the step result when set.
template <typename T>
std::vector<double> step_distribution(Model<T>& model, DecodeState<T>& state, int input, bool intro,
                                      const std::function<void(const Graph<T>&, const StepResult&)>& trace = {});

struct Prediction {
  std::size_t file = 0;
  std::size_t position = 0;  // index of the target token in its file
  int target = 0;
  bool identifier = false;
  std::span<const double> distribution;
};

/// Eval-mode pass over files in batched TBPTT segments, one call per
/// scored target (every token after the first of each file).
template <typename T>
void for_each_prediction(Model<T>& model, const std::vector<corpus::EncodedFile>& files, std::size_t lanes,
                         std::size_t unroll, const std::function<void(const Prediction&)>& fn);

/// Builds the step input of column `t` of a segment.
StepInput step_input(const corpus::Segment& segment, std::size_t t);

/// Segment loss: mean over unmasked targets. Returns an invalid var when
/// the segment has no targets. `sampled` > 0 enables sampled softmax for
/// the lstm and attention architectures.
template <typename T>
Var segment_loss(Model<T>& model, Graph<T>& graph, DecodeState<T>& state, const corpus::Segment& segment,
                 bool train, std::mt19937_64& rng, std::size_t sampled = 0);

}  // namespace codesuggest::neural
