#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "codesuggest/tensor.hpp"

namespace codesuggest::tensor {

/// Handle to a node of a Graph.
struct Var {
  int index = -1;
  bool valid() const { return index >= 0; }
};

/// One row of a node's value; an invalid var stands for a zero row.
struct RowRef {
  Var var;
  std::size_t row = 0;
};

/// Records one forward pass for reverse-mode differentiation. Matrices are
/// the 2-D views of Array; rows are batch lanes. With recording off the
/// graph only evaluates.
template <typename T>
class Graph {
 public:
  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool recording() const { return record_; }
  std::size_t node_count() const { return nodes_.size(); }

  Var constant(Array<T> value);
  /// Leaf bound to a parameter; backward accumulates into its grad buffer.
  Var parameter(Parameter<T>& p);

  const Array<T>& value(Var v) const;
  const Array<T>& grad(Var v) const;
  bool needs_grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.index)).needs_grad; }
  T scalar(Var v) const { return value(v)[0]; }

  /// Seeds d(loss) = 1 and visits every recorded node once, newest first.
  void backward(Var loss);

  /// a[n x m] times b[m x p], or b[p x m] transposed.
  Var matmul(Var a, Var b, bool transpose_b = false);
  Var add(Var a, Var b);
  Var sum(const std::vector<Var>& terms);
  Var add_bias(Var a, Var bias);
  Var mul(Var a, Var b);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, std::size_t begin, std::size_t width);
  /// Embedding lookup: row ids[r] of table for each r.
  Var rowselect(Var table, const std::vector<int>& ids);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var softmax(Var a);
  Var log(Var a);
  /// Softmax over entries with mask 1; masked entries and all-masked rows are 0.
  Var masked_softmax(Var scores, const std::vector<std::uint8_t>& mask);
  /// Inverted dropout; identity when !train or rate == 0.
  Var dropout(Var a, double rate, bool train, std::mt19937_64& rng);
  Var scale_rows(Var a, const std::vector<T>& factors);
  Var gather_rows(const std::vector<RowRef>& refs, std::size_t width);
  /// out[i*group + j] = a[i*group + j] + b[i].
  Var add_rows_broadcast(Var a, Var b, std::size_t group);
  Var reshape(Var a, Shape shape);
  /// out[b] = sum_j alpha[b, j] * memory[b*K + j], alpha [B x K].
  Var weighted_rows(Var alpha, Var memory);
  /// Per row: s[v] = sum of alpha over slots holding id v, -c elsewhere;
  /// returns softmax(s). Rows without active slots are all zero.
  Var pointer_scatter(Var alpha, const std::vector<int>& ids, const std::vector<std::uint8_t>& mask,
                      std::size_t vocab, double c);
  /// Rows with pin set are replaced by `value` and pass no gradient.
  Var pin_rows(Var a, const std::vector<std::uint8_t>& pin, const std::vector<T>& value);
  /// out[b] = lambda[b,0] * y[b] + lambda[b,1] * i[b].
  Var scalar_mix(Var lambda, Var y, Var i);
  /// sum_b weights[b] * -log probs[b, targets[b]].
  Var nll(Var probs, const std::vector<int>& targets, const std::vector<T>& weights);
  /// Fused softmax and nll on logits.
  Var cross_entropy(Var logits, const std::vector<int>& targets, const std::vector<T>& weights);
  /// Cross-entropy over {target} plus shared negatives, each logit lowered by
  /// the log of its expected sample count.
  Var sampled_softmax_loss(Var hidden, Var weight, Var bias, const std::vector<int>& targets,
                           const std::vector<T>& weights, const std::vector<int>& negatives,
                           const std::vector<T>& log_expected_negatives,
                           const std::vector<T>& log_expected_targets);

 private:
  struct Node {
    Array<T> value;
    Array<T> grad;
    Parameter<T>* param = nullptr;
    bool needs_grad = false;
    std::function<void()> back;
  };

  Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.index)); }
  const Node& node(Var v) const { return nodes_.at(static_cast<std::size_t>(v.index)); }
  Array<T>& val(Var v) { return node(v).param ? node(v).param->value : node(v).value; }
  Array<T>& grd(Var v) { return node(v).param ? node(v).param->grad : node(v).grad; }
  bool wants(std::initializer_list<Var> inputs) const;
  Var push(Array<T> value, bool needs_grad, std::function<void()> back = {});

  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace codesuggest::tensor
