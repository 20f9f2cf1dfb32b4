#include "codesuggest/ngram.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "codesuggest/error.hpp"
#include "codesuggest/textio.hpp"

namespace codesuggest::ngram {

Discounts estimate_discounts(std::array<long, 4> n) {
  Discounts out;
  out.count_of_counts = n;
  for (std::size_t k = 1; k <= 3; ++k) {
    bool defined = true;
    for (std::size_t j = 0; j <= k; ++j) defined = defined && n[j] > 0;
    double dk = 0.75;
    if (defined) {
      double y = static_cast<double>(n[0]) / (static_cast<double>(n[0]) + 2.0 * static_cast<double>(n[1]));
      dk = static_cast<double>(k) -
           static_cast<double>(k + 1) * y * static_cast<double>(n[k]) / static_cast<double>(n[k - 1]);
    } else {
      out.degenerate = true;
    }
    out.d[k - 1] = std::clamp(dk, 0.0, static_cast<double>(k));
  }
  return out;
}

std::size_t NgramModel::KeyHash::operator()(const std::vector<int>& key) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ULL ^ key.size();
  for (int v : key) {
    h ^= static_cast<std::size_t>(static_cast<unsigned>(v)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

NgramModel NgramModel::train(const std::vector<std::vector<int>>& files, int order,
                             std::size_t vocab_size) {
  if (order < 2) throw Error(ErrorCode::BadConfig, "n-gram order must be >= 2");
  if (vocab_size == 0) throw Error(ErrorCode::BadConfig, "vocabulary is empty");
  std::size_t tokens = 0;
  for (const auto& f : files) tokens += f.size();
  if (tokens == 0) throw Error(ErrorCode::EmptyCorpus, "no tokens to train on");

  const auto n = static_cast<std::size_t>(order);
  // raw[m-1]: gram of length m -> count. std::map keeps iteration deterministic.
  std::vector<std::map<std::vector<int>, long>> raw(n);
  for (const auto& file : files) {
    for (std::size_t i = 0; i < file.size(); ++i) {
      if (file[i] < 0 || static_cast<std::size_t>(file[i]) >= vocab_size) {
        throw Error(ErrorCode::BadFormat, "token id outside the vocabulary");
      }
      for (std::size_t m = 1; m <= n && m <= i + 1; ++m) {
        std::vector<int> gram(file.begin() + static_cast<long>(i + 1 - m), file.begin() + static_cast<long>(i + 1));
        ++raw[m - 1][gram];
      }
    }
  }
  std::vector<std::map<std::vector<int>, long>> used(n);
  used[n - 1] = raw[n - 1];
  for (std::size_t m = 1; m < n; ++m) {
    for (const auto& [gram, c] : raw[m]) {
      (void)c;
      ++used[m - 1][std::vector<int>(gram.begin() + 1, gram.end())];
    }
  }

  NgramModel model;
  model.order_ = order;
  model.vocab_size_ = vocab_size;
  model.levels_.resize(n);
  for (std::size_t m = 1; m <= n; ++m) {
    std::array<long, 4> coc{0, 0, 0, 0};
    auto& level = model.levels_[m - 1];
    for (const auto& [gram, c] : used[m - 1]) {
      if (c >= 1 && c <= 4) ++coc[static_cast<std::size_t>(c - 1)];
      std::vector<int> ctx(gram.begin(), gram.end() - 1);
      level.contexts[ctx].successors.emplace_back(gram.back(), c);
    }
    level.discounts = estimate_discounts(coc);
  }
  model.finalize();
  return model;
}

void NgramModel::finalize() {
  for (auto& level : levels_) {
    for (auto& [ctx, stats] : level.contexts) {
      std::sort(stats.successors.begin(), stats.successors.end());
      stats.total = 0;
      stats.buckets = {0, 0, 0};
      for (const auto& [tok, c] : stats.successors) {
        stats.total += c;
        if (c > 0) ++stats.buckets[static_cast<std::size_t>(std::min<long>(c, 3) - 1)];
      }
    }
  }
  unigram_.assign(vocab_size_, 0.0);
  std::vector<int> empty;
  for (std::size_t w = 0; w < vocab_size_; ++w) unigram_[w] = level_prob(1, empty, static_cast<int>(w));
}

const NgramModel::ContextStats* NgramModel::find(int m, std::span<const int> context) const {
  const auto& level = levels_[static_cast<std::size_t>(m - 1)];
  auto it = level.contexts.find(std::vector<int>(context.begin(), context.end()));
  return it == level.contexts.end() ? nullptr : &it->second;
}

double NgramModel::level_prob(int m, std::span<const int> context, int token) const {
  if (m == 0) return 1.0 / static_cast<double>(vocab_size_);
  double lower = level_prob(m - 1, context.subspan(context.empty() ? 0 : 1), token);
  const ContextStats* stats = find(m, context);
  if (stats == nullptr || stats->total == 0) return lower;
  const auto& disc = levels_[static_cast<std::size_t>(m - 1)].discounts;
  auto it = std::lower_bound(stats->successors.begin(), stats->successors.end(),
                             std::pair<int, long>{token, 0});
  long c = it != stats->successors.end() && it->first == token ? it->second : 0;
  double total = static_cast<double>(stats->total);
  double gamma = (disc.d[0] * static_cast<double>(stats->buckets[0]) +
                  disc.d[1] * static_cast<double>(stats->buckets[1]) +
                  disc.d[2] * static_cast<double>(stats->buckets[2])) /
                 total;
  return std::max(static_cast<double>(c) - disc.for_count(c), 0.0) / total + gamma * lower;
}

double NgramModel::prob(std::span<const int> context, int token) const {
  std::size_t keep = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  auto ctx = context.subspan(context.size() - keep);
  return level_prob(static_cast<int>(keep) + 1, ctx, token);
}

double NgramModel::logprob(std::span<const int> context, int token) const {
  return std::log(prob(context, token));
}

void NgramModel::distribution(std::span<const int> context, std::vector<double>& out) const {
  out = unigram_;
  std::size_t keep = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t m = 2; m <= keep + 1; ++m) {
    auto ctx = context.subspan(context.size() - (m - 1));
    const ContextStats* stats = find(static_cast<int>(m), ctx);
    if (stats == nullptr || stats->total == 0) continue;
    const auto& disc = levels_[m - 1].discounts;
    double total = static_cast<double>(stats->total);
    double gamma = (disc.d[0] * static_cast<double>(stats->buckets[0]) +
                    disc.d[1] * static_cast<double>(stats->buckets[1]) +
                    disc.d[2] * static_cast<double>(stats->buckets[2])) /
                   total;
    for (double& p : out) p *= gamma;
    for (const auto& [tok, c] : stats->successors) {
      out[static_cast<std::size_t>(tok)] +=
          std::max(static_cast<double>(c) - disc.for_count(c), 0.0) / total;
    }
  }
}

long NgramModel::count(std::span<const int> gram) const {
  if (gram.empty() || gram.size() > static_cast<std::size_t>(order_)) return 0;
  const ContextStats* stats = find(static_cast<int>(gram.size()), gram.first(gram.size() - 1));
  if (stats == nullptr) return 0;
  auto it = std::lower_bound(stats->successors.begin(), stats->successors.end(),
                             std::pair<int, long>{gram.back(), 0});
  return it != stats->successors.end() && it->first == gram.back() ? it->second : 0;
}

double NgramModel::perplexity(const std::vector<std::vector<int>>& files) const {
  double nll = 0.0;
  std::size_t n = 0;
  for (const auto& file : files) {
    std::span<const int> ids(file);
    for (std::size_t i = 1; i < file.size(); ++i) {
      nll -= logprob(ids.first(i), file[i]);
      ++n;
    }
  }
  return n == 0 ? 1.0 : std::exp(nll / static_cast<double>(n));
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Num>
Num parse_number(std::string_view s) {
  if constexpr (std::is_floating_point_v<Num>) {
    std::string copy(s);
    char* end = nullptr;
    double v = std::strtod(copy.c_str(), &end);
    if (end != copy.c_str() + copy.size()) throw Error(ErrorCode::BadFormat, "bad number in n-gram dump");
    return v;
  } else {
    Num v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw Error(ErrorCode::BadFormat, "bad integer in n-gram dump");
    }
    return v;
  }
}

}  // namespace

std::string NgramModel::serialize() const {
  std::string out = "codesuggest-ngram 1\n";
  out += "order " + std::to_string(order_) + "\n";
  out += "vocab_size " + std::to_string(vocab_size_) + "\n";
  for (std::size_t m = 1; m <= levels_.size(); ++m) {
    const auto& d = levels_[m - 1].discounts;
    out += "discount " + std::to_string(m);
    for (double v : d.d) out += " " + format_double(v);
    for (long c : d.count_of_counts) out += " " + std::to_string(c);
    out += d.degenerate ? " 1\n" : " 0\n";
  }
  for (std::size_t m = 1; m <= levels_.size(); ++m) {
    out += "\\" + std::to_string(m) + "\n";
    std::map<std::vector<int>, const ContextStats*> sorted;
    for (const auto& [ctx, stats] : levels_[m - 1].contexts) sorted.emplace(ctx, &stats);
    for (const auto& [ctx, stats] : sorted) {
      std::string prefix;
      for (std::size_t i = 0; i < ctx.size(); ++i) {
        if (i) prefix += ' ';
        prefix += std::to_string(ctx[i]);
      }
      for (const auto& [tok, c] : stats->successors) {
        out += prefix + "\t" + std::to_string(tok) + "\t" + std::to_string(c) + "\n";
      }
    }
  }
  return out;
}

NgramModel NgramModel::parse(std::string_view contents) {
  NgramModel model;
  std::size_t start = 0;
  int section = 0;
  int lineno = 0;
  while (start < contents.size()) {
    std::size_t end = contents.find('\n', start);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "codesuggest-ngram 1") throw Error(ErrorCode::BadFormat, "not an n-gram dump");
      continue;
    }
    if (line.front() == '\\') {
      section = parse_number<int>(line.substr(1));
      if (section < 1 || section > model.order_) throw Error(ErrorCode::BadFormat, "bad order section");
      continue;
    }
    if (section == 0) {
      auto words = split_ws(line);
      if (words.size() == 2 && words[0] == "order") {
        model.order_ = parse_number<int>(words[1]);
        if (model.order_ < 2) throw Error(ErrorCode::BadFormat, "bad order");
        model.levels_.resize(static_cast<std::size_t>(model.order_));
      } else if (words.size() == 2 && words[0] == "vocab_size") {
        model.vocab_size_ = parse_number<std::size_t>(words[1]);
      } else if (words.size() == 10 && words[0] == "discount") {
        auto m = parse_number<std::size_t>(words[1]);
        if (m < 1 || m > model.levels_.size()) throw Error(ErrorCode::BadFormat, "bad discount order");
        auto& d = model.levels_[m - 1].discounts;
        for (std::size_t k = 0; k < 3; ++k) d.d[k] = parse_number<double>(words[2 + k]);
        for (std::size_t k = 0; k < 4; ++k) d.count_of_counts[k] = parse_number<long>(words[5 + k]);
        d.degenerate = words[9] == "1";
      } else {
        throw Error(ErrorCode::BadFormat, "unexpected n-gram header line");
      }
      continue;
    }
    auto fields = split_tabs(line);
    if (fields.size() != 3) throw Error(ErrorCode::BadFormat, "n-gram table line needs 3 fields");
    std::vector<int> ctx;
    for (const auto& w : split_ws(fields[0])) ctx.push_back(parse_number<int>(w));
    if (ctx.size() != static_cast<std::size_t>(section - 1)) {
      throw Error(ErrorCode::BadFormat, "context length does not match its order");
    }
    model.levels_[static_cast<std::size_t>(section - 1)].contexts[ctx].successors.emplace_back(
        parse_number<int>(fields[1]), parse_number<long>(fields[2]));
  }
  if (model.order_ < 2 || model.vocab_size_ == 0) throw Error(ErrorCode::BadFormat, "incomplete n-gram dump");
  model.finalize();
  return model;
}

}  // namespace codesuggest::ngram
