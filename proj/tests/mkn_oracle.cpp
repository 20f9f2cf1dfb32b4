#include "mkn_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace testdata {

MknOracle::MknOracle(std::vector<std::vector<int>> files, int order, int vocab)
    : files_(std::move(files)), order_(order), vocab_(vocab) {
  for (int m = 1; m <= order_; ++m) {
    std::set<std::vector<int>> grams;
    for (const auto& f : files_) {
      for (std::size_t i = 0; i + static_cast<std::size_t>(m) <= f.size(); ++i) {
        grams.insert(std::vector<int>(f.begin() + static_cast<long>(i), f.begin() + static_cast<long>(i) + m));
      }
    }
    double n[5] = {0, 0, 0, 0, 0};
    for (const auto& g : grams) {
      long c = count(m, g);
      if (c >= 1 && c <= 4) n[c] += 1;
    }
    std::vector<double> d(3, 0.75);
    for (int k = 1; k <= 3; ++k) {
      bool ok = true;
      for (int j = 1; j <= k + 1; ++j) ok = ok && n[j] > 0;
      if (!ok) continue;
      double y = n[1] / (n[1] + 2 * n[2]);
      d[static_cast<std::size_t>(k - 1)] = std::clamp(k - (k + 1) * y * n[k + 1] / n[k], 0.0, double(k));
    }
    discounts_.push_back(d);
  }
}

double MknOracle::discount(int m, int k) const {
  return discounts_[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(k - 1)];
}

long MknOracle::raw_count(const std::vector<int>& gram) const {
  long c = 0;
  for (const auto& f : files_) {
    for (std::size_t i = 0; i + gram.size() <= f.size(); ++i) {
      if (std::equal(gram.begin(), gram.end(), f.begin() + static_cast<long>(i))) ++c;
    }
  }
  return c;
}

long MknOracle::continuation_count(const std::vector<int>& gram) const {
  std::set<int> left;
  for (const auto& f : files_) {
    for (std::size_t i = 1; i + gram.size() <= f.size(); ++i) {
      if (std::equal(gram.begin(), gram.end(), f.begin() + static_cast<long>(i))) left.insert(f[i - 1]);
    }
  }
  return static_cast<long>(left.size());
}

long MknOracle::count(int m, const std::vector<int>& gram) const {
  return m == order_ ? raw_count(gram) : continuation_count(gram);
}

double MknOracle::level(int m, const std::vector<int>& context, int token) const {
  if (m == 0) return 1.0 / vocab_;
  std::vector<int> shorter(context.begin() + (context.empty() ? 0 : 1), context.end());
  double lower = level(m - 1, shorter, token);
  double total = 0;
  double mass = 0;
  long mine = 0;
  for (int w = 0; w < vocab_; ++w) {
    std::vector<int> gram = context;
    gram.push_back(w);
    long c = count(m, gram);
    if (c == 0) continue;
    total += static_cast<double>(c);
    mass += discount(m, static_cast<int>(std::min<long>(c, 3)));
    if (w == token) mine = c;
  }
  if (total == 0) return lower;
  double own = mine == 0 ? 0.0 : std::max(static_cast<double>(mine) - discount(m, static_cast<int>(std::min<long>(mine, 3))), 0.0);
  return own / total + mass / total * lower;
}

double MknOracle::prob(const std::vector<int>& context, int token) const {
  std::size_t keep = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  std::vector<int> ctx(context.end() - static_cast<long>(keep), context.end());
  return level(static_cast<int>(keep) + 1, ctx, token);
}

double MknOracle::perplexity() const {
  double nll = 0;
  long n = 0;
  for (const auto& f : files_) {
    for (std::size_t i = 1; i < f.size(); ++i) {
      nll -= std::log(prob(std::vector<int>(f.begin(), f.begin() + static_cast<long>(i)), f[i]));
      ++n;
    }
  }
  return std::exp(nll / static_cast<double>(n));
}

std::vector<std::vector<int>> toy_corpus(std::uint64_t seed, int tokens, int vocab, int files) {
  // a sparse random bigram chain: each symbol has two or three likely successors
  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> next(static_cast<std::size_t>(vocab));
  std::uniform_int_distribution<int> sym(0, vocab - 1);
  for (auto& n : next) {
    int k = std::uniform_int_distribution<int>(2, 3)(rng);
    for (int i = 0; i < k; ++i) n.push_back(sym(rng));
  }
  std::vector<std::vector<int>> out(static_cast<std::size_t>(files));
  int per = tokens / files;
  for (int f = 0; f < files; ++f) {
    int len = f + 1 == files ? tokens - per * (files - 1) : per;
    int cur = sym(rng);
    for (int i = 0; i < len; ++i) {
      out[static_cast<std::size_t>(f)].push_back(cur);
      if (std::bernoulli_distribution(0.1)(rng)) {
        cur = sym(rng);
      } else {
        const auto& n = next[static_cast<std::size_t>(cur)];
        cur = n[std::uniform_int_distribution<std::size_t>(0, n.size() - 1)(rng)];
      }
    }
  }
  return out;
}

}  // namespace testdata
