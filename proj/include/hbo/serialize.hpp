#pragma once

// Model file format (version 1), all integers and doubles little-endian:
//
//   offset  size  content
//   0       8     magic "HBOMODEL"
//   8       4     u32 format version
//   12      8     u64 header length H
//   20      H     UTF-8 JSON header: config, vocabulary, strength table
//   20+H    8     u64 payload length P (bytes)
//   28+H    P     IEEE-754 doubles: stats.mean[C], stats.stddev[C],
//                 stats.target_scale, embedding (row-major), then for each
//                 layer its weight (row-major) followed by its bias
//   28+H+P  8     u64 FNV-1a hash of the header and payload bytes
//
// Weights travel as raw bits, so a save/load round trip is bit-exact.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hbo/features.hpp"
#include "hbo/model.hpp"

namespace hbo {

static_assert(std::endian::native == std::endian::little, "model files assume a little-endian host");

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[8] = {'H', 'B', 'O', 'M', 'O', 'D', 'E', 'L'};

/// A trained model plus what is needed to build its inputs at prediction time.
struct ModelBundle {
  ScoreModel model;
  PlayerVocabulary vocab;
  TableStrengths strengths;
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const char* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

inline json config_to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"embedding_dim", c.embedding_dim},
          {"lineup_len", c.lineup_len},
          {"covariate_count", c.covariate_count},
          {"hidden_sizes", c.hidden_sizes},
          {"activation", to_string(c.activation)},
          {"seed", c.seed},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience}};
}

inline ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  c.lineup_len = j.at("lineup_len").get<std::size_t>();
  c.covariate_count = j.at("covariate_count").get<std::size_t>();
  c.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::size_t>>();
  const auto act = j.at("activation").get<std::string>();
  if (act == "relu") c.activation = Activation::relu;
  else if (act == "tanh") c.activation = Activation::tanh;
  else if (act == "identity") c.activation = Activation::identity;
  else throw ModelFormatError("unknown activation '" + act + "'");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  return c;
}

inline void put_doubles(std::string& out, const double* p, std::size_t n) {
  out.append(reinterpret_cast<const char*>(p), n * sizeof(double));
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  void read(void* dst, std::size_t n) {
    if (pos_ + n > data_.size()) throw ModelFormatError("model file is truncated");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T get() {
    T v;
    read(&v, sizeof v);
    return v;
  }
  std::string bytes(std::size_t n) {
    if (pos_ + n > data_.size()) throw ModelFormatError("model file is truncated");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_bundle(const ModelBundle& b) {
  check_shapes(b.model);
  const auto& m = b.model;
  json header;
  header["config"] = detail::config_to_json(m.config);
  header["vocabulary"] = b.vocab.to_json();
  json table = json::object();
  for (const auto& [team, s] : b.strengths.table()) table[team] = {s.attack, s.defense};
  header["strengths"] = {{"table", table},
                         {"fallback", {b.strengths.fallback().attack, b.strengths.fallback().defense}}};
  const std::string header_text = header.dump();

  std::string payload;
  detail::put_doubles(payload, m.stats.mean.data(), m.stats.mean.size());
  detail::put_doubles(payload, m.stats.stddev.data(), m.stats.stddev.size());
  detail::put_doubles(payload, &m.stats.target_scale, 1);
  auto put_matrix = [&](const Matrix& mat) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = mat;
    detail::put_doubles(payload, rm.data(), static_cast<std::size_t>(rm.size()));
  };
  put_matrix(m.embedding);
  for (const auto& l : m.layers) {
    put_matrix(l.weight);
    detail::put_doubles(payload, l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }

  std::string out(kModelMagic, sizeof kModelMagic);
  auto put_u = [&](auto v) { out.append(reinterpret_cast<const char*>(&v), sizeof v); };
  put_u(kModelFormatVersion);
  put_u(static_cast<std::uint64_t>(header_text.size()));
  out += header_text;
  put_u(static_cast<std::uint64_t>(payload.size()));
  out += payload;
  std::uint64_t h = detail::fnv1a(detail::kFnvOffset, header_text.data(), header_text.size());
  h = detail::fnv1a(h, payload.data(), payload.size());
  put_u(h);
  return out;
}

inline ModelBundle deserialize_bundle(std::string data) {
  detail::Reader r(std::move(data));
  char magic[sizeof kModelMagic];
  r.read(magic, sizeof magic);
  if (std::memcmp(magic, kModelMagic, sizeof magic) != 0)
    throw ModelFormatError("not a model file (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelFormatVersion)
    throw VersionError("unsupported model format version " + std::to_string(version) +
                       " (supported: " + std::to_string(kModelFormatVersion) + ")");
  const auto header_len = r.get<std::uint64_t>();
  if (header_len > r.remaining()) throw ModelFormatError("model file is truncated");
  const std::string header_text = r.bytes(header_len);
  const auto payload_len = r.get<std::uint64_t>();
  if (payload_len > r.remaining()) throw ModelFormatError("model file is truncated");
  const std::string payload = r.bytes(payload_len);
  const auto stored_hash = r.get<std::uint64_t>();
  if (r.remaining() != 0) throw ModelFormatError("trailing bytes after model payload");
  std::uint64_t h = detail::fnv1a(detail::kFnvOffset, header_text.data(), header_text.size());
  h = detail::fnv1a(h, payload.data(), payload.size());
  if (h != stored_hash) throw ModelFormatError("model file checksum mismatch (corrupt file)");

  ModelBundle b;
  json header;
  try {
    header = json::parse(header_text);
    b.model.config = detail::config_from_json(header.at("config"));
    b.vocab = PlayerVocabulary::from_json(header.at("vocabulary"));
    const auto& st = header.at("strengths");
    std::map<std::string, TeamStrength> table;
    for (const auto& [team, v] : st.at("table").items())
      table[team] = {v.at(0).get<double>(), v.at(1).get<double>()};
    b.strengths = TableStrengths(std::move(table), {st.at("fallback").at(0).get<double>(),
                                                    st.at("fallback").at(1).get<double>()});
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("corrupt model header: ") + e.what());
  }

  const auto& c = b.model.config;
  detail::Reader p(payload);
  auto get_vec = [&](std::size_t n) {
    std::vector<double> v(n);
    p.read(v.data(), n * sizeof(double));
    return v;
  };
  auto get_matrix = [&](std::size_t rows, std::size_t cols) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(
        static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    p.read(rm.data(), rows * cols * sizeof(double));
    return Matrix(rm);
  };
  b.model.stats.mean = get_vec(c.covariate_count);
  b.model.stats.stddev = get_vec(c.covariate_count);
  b.model.stats.target_scale = get_vec(1)[0];
  b.model.embedding = get_matrix(c.vocab_size + 1, c.embedding_dim);
  std::size_t in = c.input_width();
  auto widths = c.hidden_sizes;
  widths.push_back(2);
  for (auto out : widths) {
    DenseLayer l;
    l.weight = get_matrix(out, in);
    const auto bias = get_vec(out);
    l.bias = Eigen::Map<const Vector>(bias.data(), static_cast<Eigen::Index>(out));
    b.model.layers.push_back(std::move(l));
    in = out;
  }
  if (p.remaining() != 0) throw ModelFormatError("model payload size does not match its config");
  check_shapes(b.model);
  return b;
}

inline void save_bundle(const ModelBundle& b, const std::filesystem::path& path) {
  const std::string bytes = serialize_bundle(b);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model file: " + path.string());
}

inline ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_bundle(ss.str());
}

inline void save_model(const ScoreModel& model, const std::filesystem::path& path) {
  save_bundle({model, {}, {}}, path);
}

inline ScoreModel load_model(const std::filesystem::path& path) { return load_bundle(path).model; }

}  // namespace hbo
