#include "codesuggest/checkpoint.hpp"

#include <charconv>
#include <cstring>

#include "json.hpp"

#include "codesuggest/error.hpp"

namespace codesuggest::cli {

namespace {

constexpr std::string_view kMagic = "codesuggest-checkpoint\n";

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename N>
N parse_number(std::string_view key, std::string_view value) {
  N out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::BadConfig, "bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

struct Reader {
  std::string_view data;
  std::size_t pos = 0;

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data.substr(pos, n);
    pos += n;
    return out;
  }
  void need(std::size_t n) const {
    if (data.size() - pos < n) throw Error(ErrorCode::BadFormat, "checkpoint truncated");
  }
};

}  // namespace

std::size_t default_lanes(neural::Architecture arch) { return arch == neural::Architecture::Pointer ? 30 : 75; }

RunConfig::RunConfig() { train.lanes = 0; }

void RunConfig::set(std::string_view key, std::string_view raw) {
  std::string value = trim(raw);
  auto size = [&] { return parse_number<std::size_t>(key, value); };
  auto real = [&] { return parse_number<double>(key, value); };
  if (key == "arch") model.arch = neural::parse_architecture(value);
  else if (key == "hidden") model.hidden = size();
  else if (key == "memory") model.memory = size();
  else if (key == "c") model.pointer_c = real();
  else if (key == "dropout") model.dropout = real();
  else if (key == "init") model.init_range = real();
  else if (key == "lanes") train.lanes = size();
  else if (key == "unroll") train.unroll = size();
  else if (key == "epochs") train.epochs = size();
  else if (key == "lr") train.lr = real();
  else if (key == "decay") train.decay = real();
  else if (key == "clip") train.clip = real();
  else if (key == "seed") train.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "sampled") train.sampled = size();
  else if (key == "vocab_cap") vocab_cap = size();
  else if (key == "min_count") min_count = size();
  else if (key == "corpus") corpus = value;
  else if (key == "vocab") vocab = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "report") report = value;
  else throw Error(ErrorCode::BadConfig, "unknown config key '" + std::string(key) + "'");
}

void RunConfig::finalize() {
  if (train.lanes == 0) train.lanes = default_lanes(model.arch);
  if (model.hidden == 0 || model.memory == 0 || train.unroll == 0 || train.epochs == 0 || min_count == 0) {
    throw Error(ErrorCode::BadConfig, "hidden, memory, unroll, epochs and min_count must be positive");
  }
  if (!(model.pointer_c > 0) || !(model.init_range > 0) || !(train.lr > 0) || !(train.decay > 0) ||
      !(train.clip > 0)) {
    throw Error(ErrorCode::BadConfig, "c, init, lr, decay and clip must be positive");
  }
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw Error(ErrorCode::BadConfig, "dropout must be in [0, 1)");
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["arch"] = neural::architecture_name(model.arch);
  j["vocab_size"] = model.vocab_size;
  j["hidden"] = model.hidden;
  j["memory"] = model.memory;
  j["c"] = model.pointer_c;
  j["dropout"] = model.dropout;
  j["init"] = model.init_range;
  j["lanes"] = train.lanes;
  j["unroll"] = train.unroll;
  j["epochs"] = train.epochs;
  j["lr"] = train.lr;
  j["decay"] = train.decay;
  j["clip"] = train.clip;
  j["seed"] = train.seed;
  j["sampled"] = train.sampled;
  j["vocab_cap"] = vocab_cap;
  j["min_count"] = min_count;
  j["corpus"] = corpus;
  j["vocab"] = vocab;
  return j.dump();
}

RunConfig RunConfig::from_json(std::string_view text) {
  RunConfig c;
  try {
    auto j = nlohmann::json::parse(text);
    c.model.arch = neural::parse_architecture(j.at("arch").get<std::string>());
    c.model.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.model.hidden = j.at("hidden").get<std::size_t>();
    c.model.memory = j.at("memory").get<std::size_t>();
    c.model.pointer_c = j.at("c").get<double>();
    c.model.dropout = j.at("dropout").get<double>();
    c.model.init_range = j.at("init").get<double>();
    c.train.lanes = j.at("lanes").get<std::size_t>();
    c.train.unroll = j.at("unroll").get<std::size_t>();
    c.train.epochs = j.at("epochs").get<std::size_t>();
    c.train.lr = j.at("lr").get<double>();
    c.train.decay = j.at("decay").get<double>();
    c.train.clip = j.at("clip").get<double>();
    c.train.seed = j.at("seed").get<std::uint64_t>();
    c.train.sampled = j.at("sampled").get<std::size_t>();
    c.vocab_cap = j.at("vocab_cap").get<std::size_t>();
    c.min_count = j.at("min_count").get<std::size_t>();
    c.corpus = j.at("corpus").get<std::string>();
    c.vocab = j.at("vocab").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadFormat, std::string("config header: ") + e.what());
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> parse_config_file(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::BadConfig, "config line " + std::to_string(line_no) + " has no '='");
    }
    out.emplace_back(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
  }
  return out;
}

std::string write_checkpoint(const neural::Model<float>& model, const RunConfig& config,
                             const std::string& vocab_digest) {
  nlohmann::ordered_json header;
  header["version"] = 1;
  header["config"] = nlohmann::ordered_json::parse(config.to_json());
  header["vocab_digest"] = vocab_digest;
  std::string out(kMagic);
  out += header.dump();
  out += '\n';
  const auto& params = model.params.all();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    put_u32(out, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : p.value.values()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      put_u32(out, bits);
    }
  }
  return out;
}

Checkpoint read_checkpoint(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw Error(ErrorCode::BadFormat, "not a checkpoint file");
  bytes.remove_prefix(kMagic.size());
  auto nl = bytes.find('\n');
  if (nl == std::string_view::npos) throw Error(ErrorCode::BadFormat, "checkpoint header missing");
  Checkpoint cp;
  try {
    auto header = nlohmann::json::parse(bytes.substr(0, nl));
    cp.version = header.at("version").get<int>();
    cp.vocab_digest = header.at("vocab_digest").get<std::string>();
    cp.config = RunConfig::from_json(header.at("config").dump());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadFormat, std::string("checkpoint header: ") + e.what());
  }
  if (cp.version != 1) throw Error(ErrorCode::BadFormat, "unsupported checkpoint version " + std::to_string(cp.version));
  cp.model = neural::Model<float>::create(cp.config.model, 0);
  Reader in{bytes.substr(nl + 1)};
  std::uint32_t count = in.u32();
  if (count != cp.model.params.all().size()) throw Error(ErrorCode::BadFormat, "checkpoint array count mismatch");
  for (auto& p : cp.model.params.all()) {
    std::string_view name = in.bytes(in.u32());
    if (name != p.name) throw Error(ErrorCode::BadFormat, "expected array " + p.name + ", found " + std::string(name));
    std::uint32_t rank = in.u32();
    tensor::Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(in.u32());
    if (shape != p.value.shape()) {
      throw Error(ErrorCode::BadFormat, "array " + p.name + " has shape " + tensor::shape_string(shape));
    }
    for (float& v : p.value.values()) {
      std::uint32_t bits = in.u32();
      std::memcpy(&v, &bits, sizeof v);
    }
  }
  if (in.pos != in.data.size()) throw Error(ErrorCode::BadFormat, "trailing bytes after checkpoint arrays");
  return cp;
}

void check_vocab(const Checkpoint& checkpoint, const std::string& vocab_digest) {
  if (checkpoint.vocab_digest != vocab_digest) {
    throw Error(ErrorCode::VocabMismatch,
                "checkpoint vocabulary " + checkpoint.vocab_digest + " differs from supplied " + vocab_digest);
  }
}

}  // namespace codesuggest::cli
