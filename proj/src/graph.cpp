#include "codesuggest/graph.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "codesuggest/error.hpp"

namespace codesuggest::tensor {

namespace {

template <typename T>
using MatrixRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const MatrixRM<T>>;
template <typename T>
using Map = Eigen::Map<MatrixRM<T>>;

template <typename T>
MapC<T> view(const Array<T>& a) {
  return MapC<T>(a.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}
template <typename T>
Map<T> view(Array<T>& a) {
  return Map<T>(a.data(), static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
}

[[noreturn]] void mismatch(const std::string& op, const Shape& a, const Shape& b) {
  throw Error(ErrorCode::ShapeMismatch, op + ": " + shape_string(a) + " vs " + shape_string(b));
}

template <typename T>
void softmax_row(std::span<const T> in, std::span<T> out) {
  T hi = *std::max_element(in.begin(), in.end());
  T total = 0;
  for (std::size_t j = 0; j < in.size(); ++j) {
    out[j] = std::exp(in[j] - hi);
    total += out[j];
  }
  for (auto& v : out) v /= total;
}

}  // namespace

template <typename T>
Var Graph<T>::constant(Array<T> value) {
  return push(std::move(value), false);
}

template <typename T>
Var Graph<T>::parameter(Parameter<T>& p) {
  Node n;
  n.param = &p;
  n.needs_grad = record_;
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
const Array<T>& Graph<T>::value(Var v) const {
  const Node& n = node(v);
  return n.param ? n.param->value : n.value;
}

template <typename T>
const Array<T>& Graph<T>::grad(Var v) const {
  const Node& n = node(v);
  return n.param ? n.param->grad : n.grad;
}

template <typename T>
bool Graph<T>::wants(std::initializer_list<Var> inputs) const {
  if (!record_) return false;
  for (Var v : inputs) {
    if (v.valid() && node(v).needs_grad) return true;
  }
  return false;
}

template <typename T>
Var Graph<T>::push(Array<T> value, bool needs_grad, std::function<void()> back) {
  Node n;
  if (needs_grad) n.grad = Array<T>(value.shape());
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

template <typename T>
void Graph<T>::backward(Var loss) {
  if (!record_) throw Error(ErrorCode::BadConfig, "backward on a non-recording graph");
  Node& root = node(loss);
  if (value(loss).size() != 1) throw Error(ErrorCode::ShapeMismatch, "backward needs a scalar loss");
  if (!root.needs_grad) return;
  grd(loss)[0] += T(1);
  for (int i = loss.index; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.needs_grad && n.back) n.back();
  }
}

template <typename T>
Var Graph<T>::matmul(Var a, Var b, bool transpose_b) {
  const Array<T>& A = val(a);
  const Array<T>& B = val(b);
  std::size_t inner = transpose_b ? B.cols() : B.rows();
  if (A.cols() != inner) mismatch("matmul", A.shape(), B.shape());
  std::size_t p = transpose_b ? B.rows() : B.cols();
  Array<T> out({A.rows(), p});
  if (transpose_b) {
    view(out).noalias() = view(A) * view(B).transpose();
  } else {
    view(out).noalias() = view(A) * view(B);
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a, b}), [this, a, b, o, transpose_b] {
    auto dout = view(std::as_const(grd(o)));
    if (node(a).needs_grad) {
      auto da = view(grd(a));
      if (transpose_b) {
        da.noalias() += dout * view(std::as_const(val(b)));
      } else {
        da.noalias() += dout * view(std::as_const(val(b))).transpose();
      }
    }
    if (node(b).needs_grad) {
      auto db = view(grd(b));
      if (transpose_b) {
        db.noalias() += dout.transpose() * view(std::as_const(val(a)));
      } else {
        db.noalias() += view(std::as_const(val(a))).transpose() * dout;
      }
    }
  });
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
  return sum({a, b});
}

template <typename T>
Var Graph<T>::sum(const std::vector<Var>& terms) {
  if (terms.empty()) throw Error(ErrorCode::ShapeMismatch, "sum of no terms");
  Array<T> out = val(terms[0]);
  bool needs = false;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const Array<T>& x = val(terms[t]);
    if (x.size() != out.size()) mismatch("sum", out.shape(), x.shape());
    if (t > 0) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] += x[i];
    }
    needs = needs || wants({terms[t]});
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs, [this, terms, o] {
    const Array<T>& g = grd(o);
    for (Var t : terms) {
      if (!node(t).needs_grad) continue;
      Array<T>& d = grd(t);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

template <typename T>
Var Graph<T>::add_bias(Var a, Var bias) {
  const Array<T>& A = val(a);
  const Array<T>& b = val(bias);
  if (A.cols() != b.size()) mismatch("add_bias", A.shape(), b.shape());
  Array<T> out = A;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a, bias}), [this, a, bias, o] {
    const Array<T>& g = grd(o);
    if (node(a).needs_grad) {
      Array<T>& d = grd(a);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (node(bias).needs_grad) {
      Array<T>& d = grd(bias);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) d[j] += row[j];
      }
    }
  });
}

template <typename T>
Var Graph<T>::mul(Var a, Var b) {
  const Array<T>& A = val(a);
  const Array<T>& B = val(b);
  if (A.size() != B.size()) mismatch("mul", A.shape(), B.shape());
  Array<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] * B[i];
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a, b}), [this, a, b, o] {
    const Array<T>& g = grd(o);
    if (node(a).needs_grad) {
      Array<T>& d = grd(a);
      const Array<T>& y = val(b);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i];
    }
    if (node(b).needs_grad) {
      Array<T>& d = grd(b);
      const Array<T>& x = val(a);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * x[i];
    }
  });
}

template <typename T>
Var Graph<T>::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat of no parts");
  std::size_t rows = val(parts[0]).rows();
  std::size_t width = 0;
  bool needs = false;
  for (Var p : parts) {
    if (val(p).rows() != rows) mismatch("concat_cols", val(parts[0]).shape(), val(p).shape());
    width += val(p).cols();
    needs = needs || wants({p});
  }
  Array<T> out({rows, width});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Array<T>& x = val(p);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(x.row(r).begin(), x.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    offset += x.cols();
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs, [this, parts, o] {
    const Array<T>& g = grd(o);
    std::size_t off = 0;
    for (Var p : parts) {
      std::size_t w = val(p).cols();
      if (node(p).needs_grad) {
        Array<T>& d = grd(p);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto src = g.row(r);
          auto dst = d.row(r);
          for (std::size_t j = 0; j < w; ++j) dst[j] += src[off + j];
        }
      }
      off += w;
    }
  });
}

template <typename T>
Var Graph<T>::slice_cols(Var a, std::size_t begin, std::size_t width) {
  const Array<T>& A = val(a);
  if (begin + width > A.cols()) mismatch("slice_cols", A.shape(), {begin, width});
  Array<T> out({A.rows(), width});
  for (std::size_t r = 0; r < A.rows(); ++r) {
    auto src = A.row(r);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(begin),
              src.begin() + static_cast<std::ptrdiff_t>(begin + width), out.row(r).begin());
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o, begin, width] {
    const Array<T>& g = grd(o);
    Array<T>& d = grd(a);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto src = g.row(r);
      auto dst = d.row(r);
      for (std::size_t j = 0; j < width; ++j) dst[begin + j] += src[j];
    }
  });
}

template <typename T>
Var Graph<T>::rowselect(Var table, const std::vector<int>& ids) {
  const Array<T>& E = val(table);
  std::size_t width = E.cols();
  Array<T> out({ids.size(), width});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= E.rows()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "rowselect id " + std::to_string(ids[r]) + " outside " + shape_string(E.shape()));
    }
    auto src = E.row(static_cast<std::size_t>(ids[r]));
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({table}), [this, table, o, ids] {
    const Array<T>& g = grd(o);
    Array<T>& d = grd(table);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      auto src = g.row(r);
      auto dst = d.row(static_cast<std::size_t>(ids[r]));
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var Graph<T>::tanh(Var a) {
  const Array<T>& A = val(a);
  Array<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = std::tanh(A[i]);
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o] {
    const Array<T>& g = grd(o);
    const Array<T>& y = val(o);
    Array<T>& d = grd(a);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (T(1) - y[i] * y[i]);
  });
}

template <typename T>
Var Graph<T>::sigmoid(Var a) {
  const Array<T>& A = val(a);
  Array<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-A[i]));
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o] {
    const Array<T>& g = grd(o);
    const Array<T>& y = val(o);
    Array<T>& d = grd(a);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var Graph<T>::softmax(Var a) {
  const Array<T>& A = val(a);
  Array<T> out(A.shape());
  for (std::size_t r = 0; r < A.rows(); ++r) softmax_row<T>(A.row(r), out.row(r));
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o] {
    const Array<T>& g = grd(o);
    const Array<T>& y = val(o);
    Array<T>& d = grd(a);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto gr = g.row(r);
      auto yr = y.row(r);
      auto dr = d.row(r);
      T dot = 0;
      for (std::size_t j = 0; j < gr.size(); ++j) dot += gr[j] * yr[j];
      for (std::size_t j = 0; j < gr.size(); ++j) dr[j] += yr[j] * (gr[j] - dot);
    }
  });
}

template <typename T>
Var Graph<T>::log(Var a) {
  const Array<T>& A = val(a);
  Array<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = std::log(A[i]);
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o] {
    const Array<T>& g = grd(o);
    const Array<T>& x = val(a);
    Array<T>& d = grd(a);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] / x[i];
  });
}

template <typename T>
Var Graph<T>::masked_softmax(Var scores, const std::vector<std::uint8_t>& mask) {
  const Array<T>& S = val(scores);
  if (mask.size() != S.size()) mismatch("masked_softmax", S.shape(), {mask.size()});
  Array<T> out(S.shape());
  for (std::size_t r = 0; r < S.rows(); ++r) {
    auto in = S.row(r);
    auto y = out.row(r);
    const std::uint8_t* m = mask.data() + r * S.cols();
    T hi = 0;
    bool any = false;
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (m[j] && (!any || in[j] > hi)) {
        hi = in[j];
        any = true;
      }
    }
    if (!any) continue;
    T total = 0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      if (m[j]) {
        y[j] = std::exp(in[j] - hi);
        total += y[j];
      }
    }
    for (auto& v : y) v /= total;
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({scores}), [this, scores, o] {
    const Array<T>& g = grd(o);
    const Array<T>& y = val(o);
    Array<T>& d = grd(scores);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto gr = g.row(r);
      auto yr = y.row(r);
      auto dr = d.row(r);
      T dot = 0;
      for (std::size_t j = 0; j < gr.size(); ++j) dot += gr[j] * yr[j];
      for (std::size_t j = 0; j < gr.size(); ++j) dr[j] += yr[j] * (gr[j] - dot);
    }
  });
}

template <typename T>
Var Graph<T>::dropout(Var a, double rate, bool train, std::mt19937_64& rng) {
  if (!train || rate <= 0.0) return a;
  if (rate >= 1.0) throw Error(ErrorCode::BadConfig, "dropout rate must be below 1");
  const Array<T>& A = val(a);
  auto keep = std::make_shared<std::vector<T>>(A.size());
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  Array<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) {
    (*keep)[i] = uniform(rng) >= rate ? scale : T(0);
    out[i] = A[i] * (*keep)[i];
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o, keep] {
    const Array<T>& g = grd(o);
    Array<T>& d = grd(a);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (*keep)[i];
  });
}

template <typename T>
Var Graph<T>::scale_rows(Var a, const std::vector<T>& factors) {
  const Array<T>& A = val(a);
  if (factors.size() != A.rows()) mismatch("scale_rows", A.shape(), {factors.size()});
  Array<T> out(A.shape());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    auto src = A.row(r);
    auto dst = out.row(r);
    for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] * factors[r];
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o, factors] {
    const Array<T>& g = grd(o);
    Array<T>& d = grd(a);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto src = g.row(r);
      auto dst = d.row(r);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j] * factors[r];
    }
  });
}

template <typename T>
Var Graph<T>::gather_rows(const std::vector<RowRef>& refs, std::size_t width) {
  Array<T> out({refs.size(), width});
  bool needs = false;
  for (std::size_t r = 0; r < refs.size(); ++r) {
    if (!refs[r].var.valid()) continue;
    const Array<T>& src = val(refs[r].var);
    if (src.cols() != width || refs[r].row >= src.rows()) mismatch("gather_rows", src.shape(), {refs[r].row, width});
    auto row = src.row(refs[r].row);
    std::copy(row.begin(), row.end(), out.row(r).begin());
    needs = needs || wants({refs[r].var});
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), needs, [this, refs, o] {
    const Array<T>& g = grd(o);
    for (std::size_t r = 0; r < refs.size(); ++r) {
      if (!refs[r].var.valid() || !node(refs[r].var).needs_grad) continue;
      auto src = g.row(r);
      auto dst = grd(refs[r].var).row(refs[r].row);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var Graph<T>::add_rows_broadcast(Var a, Var b, std::size_t group) {
  const Array<T>& A = val(a);
  const Array<T>& B = val(b);
  if (A.cols() != B.cols() || A.rows() != B.rows() * group) mismatch("add_rows_broadcast", A.shape(), B.shape());
  Array<T> out = A;
  for (std::size_t i = 0; i < B.rows(); ++i) {
    auto src = B.row(i);
    for (std::size_t j = 0; j < group; ++j) {
      auto dst = out.row(i * group + j);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a, b}), [this, a, b, o, group] {
    const Array<T>& g = grd(o);
    if (node(a).needs_grad) {
      Array<T>& d = grd(a);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (node(b).needs_grad) {
      Array<T>& d = grd(b);
      for (std::size_t i = 0; i < d.rows(); ++i) {
        auto dst = d.row(i);
        for (std::size_t j = 0; j < group; ++j) {
          auto src = g.row(i * group + j);
          for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
      }
    }
  });
}

template <typename T>
Var Graph<T>::reshape(Var a, Shape shape) {
  Array<T> out = val(a);
  out.reshape(std::move(shape));
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o] {
    const Array<T>& g = grd(o);
    Array<T>& d = grd(a);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
  });
}

template <typename T>
Var Graph<T>::weighted_rows(Var alpha, Var memory) {
  const Array<T>& A = val(alpha);
  const Array<T>& M = val(memory);
  const std::size_t slots = A.cols();
  if (M.rows() != A.rows() * slots) mismatch("weighted_rows", A.shape(), M.shape());
  const std::size_t width = M.cols();
  Array<T> out({A.rows(), width});
  for (std::size_t b = 0; b < A.rows(); ++b) {
    auto dst = out.row(b);
    for (std::size_t j = 0; j < slots; ++j) {
      T w = A.at(b, j);
      if (w == T(0)) continue;
      auto src = M.row(b * slots + j);
      for (std::size_t c = 0; c < width; ++c) dst[c] += w * src[c];
    }
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({alpha, memory}), [this, alpha, memory, o] {
    const Array<T>& g = grd(o);
    const Array<T>& a = val(alpha);
    const Array<T>& m = val(memory);
    const std::size_t k = a.cols();
    for (std::size_t b = 0; b < a.rows(); ++b) {
      auto gr = g.row(b);
      for (std::size_t j = 0; j < k; ++j) {
        auto mr = m.row(b * k + j);
        if (node(alpha).needs_grad) {
          T dot = 0;
          for (std::size_t c = 0; c < gr.size(); ++c) dot += gr[c] * mr[c];
          grd(alpha).at(b, j) += dot;
        }
        if (node(memory).needs_grad) {
          T w = a.at(b, j);
          auto dst = grd(memory).row(b * k + j);
          for (std::size_t c = 0; c < gr.size(); ++c) dst[c] += w * gr[c];
        }
      }
    }
  });
}

template <typename T>
Var Graph<T>::pointer_scatter(Var alpha, const std::vector<int>& ids,
                              const std::vector<std::uint8_t>& mask, std::size_t vocab, double c) {
  const Array<T>& A = val(alpha);
  if (ids.size() != A.size() || mask.size() != A.size()) mismatch("pointer_scatter", A.shape(), {ids.size()});
  const std::size_t slots = A.cols();
  Array<T> out({A.rows(), vocab});
  std::vector<T> s(vocab);
  std::vector<std::uint8_t> touched(vocab);
  for (std::size_t b = 0; b < A.rows(); ++b) {
    bool any = false;
    std::fill(s.begin(), s.end(), static_cast<T>(-c));
    std::fill(touched.begin(), touched.end(), 0);
    for (std::size_t j = 0; j < slots; ++j) {
      std::size_t k = b * slots + j;
      if (!mask[k]) continue;
      if (ids[k] < 0 || static_cast<std::size_t>(ids[k]) >= vocab) {
        throw Error(ErrorCode::ShapeMismatch, "pointer id " + std::to_string(ids[k]) + " outside vocabulary");
      }
      auto v = static_cast<std::size_t>(ids[k]);
      if (!touched[v]) {
        s[v] = 0;
        touched[v] = 1;
      }
      s[v] += A[k];
      any = true;
    }
    if (any) softmax_row<T>(s, out.row(b));
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({alpha}), [this, alpha, o, ids, mask] {
    const Array<T>& g = grd(o);
    const Array<T>& y = val(o);
    Array<T>& d = grd(alpha);
    const std::size_t k = d.cols();
    for (std::size_t b = 0; b < d.rows(); ++b) {
      auto gr = g.row(b);
      auto yr = y.row(b);
      T dot = 0;
      for (std::size_t v = 0; v < gr.size(); ++v) dot += gr[v] * yr[v];
      for (std::size_t j = 0; j < k; ++j) {
        std::size_t idx = b * k + j;
        if (!mask[idx]) continue;
        auto v = static_cast<std::size_t>(ids[idx]);
        d[idx] += yr[v] * (gr[v] - dot);
      }
    }
  });
}

template <typename T>
Var Graph<T>::pin_rows(Var a, const std::vector<std::uint8_t>& pin, const std::vector<T>& value) {
  const Array<T>& A = val(a);
  if (pin.size() != A.rows() || value.size() != A.cols()) mismatch("pin_rows", A.shape(), {pin.size(), value.size()});
  Array<T> out = A;
  for (std::size_t r = 0; r < A.rows(); ++r) {
    if (pin[r]) std::copy(value.begin(), value.end(), out.row(r).begin());
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({a}), [this, a, o, pin] {
    const Array<T>& g = grd(o);
    Array<T>& d = grd(a);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      if (pin[r]) continue;
      auto src = g.row(r);
      auto dst = d.row(r);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  });
}

template <typename T>
Var Graph<T>::scalar_mix(Var lambda, Var y, Var i) {
  const Array<T>& L = val(lambda);
  const Array<T>& Y = val(y);
  const Array<T>& I = val(i);
  if (L.cols() != 2 || L.rows() != Y.rows() || Y.size() != I.size()) mismatch("scalar_mix", L.shape(), Y.shape());
  Array<T> out(Y.shape());
  for (std::size_t b = 0; b < Y.rows(); ++b) {
    T l0 = L.at(b, 0), l1 = L.at(b, 1);
    auto yr = Y.row(b);
    auto ir = I.row(b);
    auto dst = out.row(b);
    for (std::size_t v = 0; v < yr.size(); ++v) dst[v] = l0 * yr[v] + l1 * ir[v];
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({lambda, y, i}), [this, lambda, y, i, o] {
    const Array<T>& g = grd(o);
    const Array<T>& L2 = val(lambda);
    const Array<T>& Y2 = val(y);
    const Array<T>& I2 = val(i);
    for (std::size_t b = 0; b < g.rows(); ++b) {
      auto gr = g.row(b);
      auto yr = Y2.row(b);
      auto ir = I2.row(b);
      if (node(lambda).needs_grad) {
        T d0 = 0, d1 = 0;
        for (std::size_t v = 0; v < gr.size(); ++v) {
          d0 += gr[v] * yr[v];
          d1 += gr[v] * ir[v];
        }
        grd(lambda).at(b, 0) += d0;
        grd(lambda).at(b, 1) += d1;
      }
      if (node(y).needs_grad) {
        auto dst = grd(y).row(b);
        T l0 = L2.at(b, 0);
        for (std::size_t v = 0; v < gr.size(); ++v) dst[v] += l0 * gr[v];
      }
      if (node(i).needs_grad) {
        auto dst = grd(i).row(b);
        T l1 = L2.at(b, 1);
        for (std::size_t v = 0; v < gr.size(); ++v) dst[v] += l1 * gr[v];
      }
    }
  });
}

template <typename T>
Var Graph<T>::nll(Var probs, const std::vector<int>& targets, const std::vector<T>& weights) {
  const Array<T>& P = val(probs);
  if (targets.size() != P.rows() || weights.size() != P.rows()) mismatch("nll", P.shape(), {targets.size()});
  Array<T> out({1});
  for (std::size_t b = 0; b < P.rows(); ++b) {
    if (weights[b] == T(0)) continue;
    out[0] -= weights[b] * std::log(P.at(b, static_cast<std::size_t>(targets[b])));
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({probs}), [this, probs, o, targets, weights] {
    T g = grd(o)[0];
    const Array<T>& p = val(probs);
    Array<T>& d = grd(probs);
    for (std::size_t b = 0; b < p.rows(); ++b) {
      if (weights[b] == T(0)) continue;
      auto t = static_cast<std::size_t>(targets[b]);
      d.at(b, t) -= g * weights[b] / p.at(b, t);
    }
  });
}

template <typename T>
Var Graph<T>::cross_entropy(Var logits, const std::vector<int>& targets, const std::vector<T>& weights) {
  const Array<T>& Z = val(logits);
  if (targets.size() != Z.rows() || weights.size() != Z.rows()) mismatch("cross_entropy", Z.shape(), {targets.size()});
  auto probs = std::make_shared<Array<T>>(Z.shape());
  Array<T> out({1});
  for (std::size_t b = 0; b < Z.rows(); ++b) {
    if (weights[b] == T(0)) continue;
    softmax_row<T>(Z.row(b), probs->row(b));
    out[0] -= weights[b] * std::log(probs->at(b, static_cast<std::size_t>(targets[b])));
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({logits}), [this, logits, o, targets, weights, probs] {
    T g = grd(o)[0];
    Array<T>& d = grd(logits);
    for (std::size_t b = 0; b < d.rows(); ++b) {
      if (weights[b] == T(0)) continue;
      auto pr = probs->row(b);
      auto dr = d.row(b);
      T w = g * weights[b];
      for (std::size_t v = 0; v < pr.size(); ++v) dr[v] += w * pr[v];
      dr[static_cast<std::size_t>(targets[b])] -= w;
    }
  });
}

template <typename T>
Var Graph<T>::sampled_softmax_loss(Var hidden, Var weight, Var bias, const std::vector<int>& targets,
                                   const std::vector<T>& weights, const std::vector<int>& negatives,
                                   const std::vector<T>& log_expected_negatives,
                                   const std::vector<T>& log_expected_targets) {
  const Array<T>& H = val(hidden);
  const Array<T>& W = val(weight);
  const Array<T>& bv = val(bias);
  const std::size_t rows = H.rows();
  const std::size_t width = H.cols();
  const std::size_t s = negatives.size();
  if (W.cols() != width || bv.size() != W.rows() || targets.size() != rows || weights.size() != rows ||
      log_expected_negatives.size() != s || log_expected_targets.size() != rows) {
    mismatch("sampled_softmax_loss", H.shape(), W.shape());
  }
  // Candidate weights: column 0 of each row is its target, then the shared negatives.
  Array<T> wneg({std::max<std::size_t>(s, 1), width});
  for (std::size_t j = 0; j < s; ++j) {
    auto src = W.row(static_cast<std::size_t>(negatives[j]));
    std::copy(src.begin(), src.end(), wneg.row(j).begin());
  }
  auto probs = std::make_shared<Array<T>>(Shape{rows, s + 1});
  Array<T> zneg({rows, std::max<std::size_t>(s, 1)});
  if (s > 0) view(zneg).noalias() = view(H) * view(std::as_const(wneg)).transpose();
  Array<T> out({1});
  std::vector<T> z(s + 1);
  for (std::size_t b = 0; b < rows; ++b) {
    if (weights[b] == T(0)) continue;
    auto t = static_cast<std::size_t>(targets[b]);
    auto h = H.row(b);
    auto wt = W.row(t);
    T zt = bv[t] - log_expected_targets[b];
    for (std::size_t c = 0; c < width; ++c) zt += h[c] * wt[c];
    z[0] = zt;
    for (std::size_t j = 0; j < s; ++j) {
      z[j + 1] = zneg.at(b, j) + bv[static_cast<std::size_t>(negatives[j])] - log_expected_negatives[j];
    }
    softmax_row<T>(z, probs->row(b));
    out[0] -= weights[b] * std::log(probs->at(b, 0));
  }
  Var o{static_cast<int>(nodes_.size())};
  return push(std::move(out), wants({hidden, weight, bias}),
              [this, hidden, weight, bias, o, targets, weights, negatives, probs] {
                T g = grd(o)[0];
                const Array<T>& h = val(hidden);
                const Array<T>& w = val(weight);
                const std::size_t n = negatives.size();
                for (std::size_t b = 0; b < h.rows(); ++b) {
                  if (weights[b] == T(0)) continue;
                  auto pr = probs->row(b);
                  auto hr = h.row(b);
                  for (std::size_t j = 0; j <= n; ++j) {
                    auto id = static_cast<std::size_t>(j == 0 ? targets[b] : negatives[j - 1]);
                    T dz = g * weights[b] * (pr[j] - (j == 0 ? T(1) : T(0)));
                    if (dz == T(0)) continue;
                    if (node(hidden).needs_grad) {
                      auto dst = grd(hidden).row(b);
                      auto wr = w.row(id);
                      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += dz * wr[c];
                    }
                    if (node(weight).needs_grad) {
                      auto dst = grd(weight).row(id);
                      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += dz * hr[c];
                    }
                    if (node(bias).needs_grad) grd(bias)[id] += dz;
                  }
                }
              });
}

template class Graph<float>;
template class Graph<double>;

}  // namespace codesuggest::tensor
