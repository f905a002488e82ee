// Copyright 2026 The GuideCoT Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "guidecot/common/error.hpp"
#include "guidecot/common/rng.hpp"
#include "guidecot/cot/text.hpp"
#include "guidecot/cot/tokenizer.hpp"
#include "guidecot/nn/module.hpp"

namespace guidecot::cot {

struct DecodeConfig {
  double temperature{0.0};  // 0 = greedy
  double top_p{0.9};
  int max_tokens{256};
  int retries{3};
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DecodeConfig, temperature, top_p, max_tokens, retries)

enum class ModelScale { toy, small };

NLOHMANN_JSON_SERIALIZE_ENUM(ModelScale, {{ModelScale::toy, "toy"}, {ModelScale::small, "small"}})

struct SeqModelConfig {
  ModelScale scale{ModelScale::toy};
  int d_model{64};
  int heads{4};
  int ff{256};
  int encoder_layers{2};
  int decoder_layers{2};
  int context_length{512};
  std::uint64_t seed{11};
  TextConfig text;
  DecodeConfig decode;

  /// Encoder-decoder at the width and depth of a small pretrained text model.
  static SeqModelConfig small() {
    SeqModelConfig c;
    c.scale = ModelScale::small;
    c.d_model = 512;
    c.heads = 8;
    c.ff = 2048;
    c.encoder_layers = 6;
    c.decoder_layers = 6;
    c.context_length = 1024;
    return c;
  }

  void validate() const {
    if (d_model < 2 || d_model % 2 != 0 || heads < 1 || d_model % heads != 0) {
      throw Error(ErrorCode::architecture, "d_model must be even and divisible by heads");
    }
    if (ff < 1 || encoder_layers < 1 || decoder_layers < 1 || context_length < 8) {
      throw Error(ErrorCode::architecture, "invalid transformer dimensions");
    }
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SeqModelConfig, scale, d_model, heads, ff, encoder_layers, decoder_layers,
                                                context_length, seed, text, decode)

namespace detail {

struct AttentionWeights {
  nn::Linear q, k, v, o;
  AttentionWeights() = default;
  AttentionWeights(nn::ParameterStore& s, const std::string& name, int d, Rng& rng)
      : q(s, name + ".q", d, d, rng), k(s, name + ".k", d, d, rng), v(s, name + ".v", d, d, rng), o(s, name + ".o", d, d, rng) {}
};

struct EncoderLayer {
  nn::LayerNorm ln1, ln2;
  AttentionWeights self;
  nn::Linear ff1, ff2;
};

struct DecoderLayer {
  nn::LayerNorm ln1, ln2, ln3;
  AttentionWeights self, cross;
  nn::Linear ff1, ff2;
};

}  // namespace detail

/// One teacher-forced pair: encoder ids (question + goal sentence) and answer ids (no BOS/EOS).
struct SeqExample {
  std::string id;
  std::vector<int> source;
  std::vector<int> answer;
};

/// Number of positions contributing to the loss: answer tokens plus the end marker.
inline std::size_t target_token_count(const SeqExample& e) { return e.answer.size() + 1; }

/// Pre-LN encoder-decoder transformer with sinusoidal positions.
class Seq2Seq {
 public:
  explicit Seq2Seq(const SeqModelConfig& cfg, Tokenizer tokenizer = {}) : cfg_(cfg), tok_(std::move(tokenizer)) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int d = cfg.d_model;
    const int vocab = tok_.size();
    embed_ = store_.add_normal("embed", {vocab, d}, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    for (int l = 0; l < cfg.encoder_layers; ++l) {
      const std::string p = "enc" + std::to_string(l);
      enc_.push_back({nn::LayerNorm(store_, p + ".ln1", d), nn::LayerNorm(store_, p + ".ln2", d),
                      detail::AttentionWeights(store_, p + ".self", d, rng), nn::Linear(store_, p + ".ff1", d, cfg.ff, rng),
                      nn::Linear(store_, p + ".ff2", cfg.ff, d, rng)});
    }
    enc_norm_ = nn::LayerNorm(store_, "enc.norm", d);
    for (int l = 0; l < cfg.decoder_layers; ++l) {
      const std::string p = "dec" + std::to_string(l);
      dec_.push_back({nn::LayerNorm(store_, p + ".ln1", d), nn::LayerNorm(store_, p + ".ln2", d),
                      nn::LayerNorm(store_, p + ".ln3", d), detail::AttentionWeights(store_, p + ".self", d, rng),
                      detail::AttentionWeights(store_, p + ".cross", d, rng), nn::Linear(store_, p + ".ff1", d, cfg.ff, rng),
                      nn::Linear(store_, p + ".ff2", cfg.ff, d, rng)});
    }
    dec_norm_ = nn::LayerNorm(store_, "dec.norm", d);
    out_ = nn::Linear(store_, "out", d, vocab, rng);

    positions_.assign(static_cast<std::size_t>(cfg.context_length) * d, 0.0);
    for (int pos = 0; pos < cfg.context_length; ++pos) {
      for (int i = 0; i < d / 2; ++i) {
        const double angle = pos / std::pow(10000.0, 2.0 * i / d);
        positions_[static_cast<std::size_t>(pos) * d + 2 * i] = std::sin(angle);
        positions_[static_cast<std::size_t>(pos) * d + 2 * i + 1] = std::cos(angle);
      }
    }
  }

  Seq2Seq(const Seq2Seq&) = delete;
  Seq2Seq& operator=(const Seq2Seq&) = delete;
  Seq2Seq(Seq2Seq&&) = default;
  Seq2Seq& operator=(Seq2Seq&&) = default;

  const SeqModelConfig& config() const noexcept { return cfg_; }
  const Tokenizer& tokenizer() const noexcept { return tok_; }
  nn::ParameterStore& parameters() noexcept { return store_; }
  const nn::ParameterStore& parameters() const noexcept { return store_; }

  /// Packed encoder output [sum(len), d] for several sources.
  nn::Var encode(const std::vector<std::vector<int>>& sources) const {
    std::vector<int> lens;
    std::vector<int> ids;
    for (const auto& s : sources) {
      check_length(s.size(), "source");
      lens.push_back(static_cast<int>(s.size()));
      ids.insert(ids.end(), s.begin(), s.end());
    }
    nn::Var x = embed(ids, lens);
    for (const auto& layer : enc_) {
      const nn::Var h = layer.ln1(x);
      x = nn::add(x, attend(layer.self, h, h, lens, lens, false));
      x = nn::add(x, layer.ff2(nn::gelu(layer.ff1(layer.ln2(x)))));
    }
    return enc_norm_(x);
  }

  /// Teacher-forced logits [sum(len), V] for decoder inputs given the packed memory.
  nn::Var decode(const nn::Var& memory, const std::vector<int>& memory_lens, const std::vector<std::vector<int>>& inputs) const {
    std::vector<int> lens;
    std::vector<int> ids;
    for (const auto& s : inputs) {
      check_length(s.size(), "answer");
      lens.push_back(static_cast<int>(s.size()));
      ids.insert(ids.end(), s.begin(), s.end());
    }
    nn::Var y = embed(ids, lens);
    for (const auto& layer : dec_) {
      const nn::Var h = layer.ln1(y);
      y = nn::add(y, attend(layer.self, h, h, lens, lens, true));
      y = nn::add(y, attend(layer.cross, layer.ln2(y), memory, lens, memory_lens, false));
      y = nn::add(y, layer.ff2(nn::gelu(layer.ff1(layer.ln3(y)))));
    }
    return out_(dec_norm_(y));
  }

  /// Mean cross-entropy over answer tokens plus end markers of the batch.
  nn::Var loss(const std::vector<const SeqExample*>& batch) const {
    std::vector<std::vector<int>> sources;
    std::vector<std::vector<int>> inputs;
    std::vector<int> targets;
    std::vector<int> memory_lens;
    for (const auto* e : batch) {
      sources.push_back(e->source);
      memory_lens.push_back(static_cast<int>(e->source.size()));
      std::vector<int> in{Tokenizer::kBos};
      in.insert(in.end(), e->answer.begin(), e->answer.end());
      inputs.push_back(std::move(in));
      targets.insert(targets.end(), e->answer.begin(), e->answer.end());
      targets.push_back(Tokenizer::kEos);
    }
    const nn::Var logits = decode(encode(sources), memory_lens, inputs);
    return nn::cross_entropy(logits, targets, static_cast<double>(targets.size()));
  }

  /// Cached decoder state for incremental generation.
  struct Session {
    std::vector<nn::RowMatrix> cross_k, cross_v;  // per decoder layer, [Ls, d]
    std::vector<nn::RowMatrix> self_k, self_v;    // per decoder layer, grown row by row
    int length{0};
  };

  Session start(const std::vector<int>& source) const {
    nn::NoGradGuard guard;
    const nn::Var memory = encode({source});
    const nn::ConstMatMap m(memory->value.data(), memory->dim(0), memory->dim(1));
    Session s;
    const auto d = static_cast<Eigen::Index>(cfg_.d_model);
    for (const auto& layer : dec_) {
      s.cross_k.push_back(project(m, layer.cross.k));
      s.cross_v.push_back(project(m, layer.cross.v));
      s.self_k.emplace_back(0, d);
      s.self_v.emplace_back(0, d);
    }
    return s;
  }

  /// Feeds one token and returns next-token logits.
  Eigen::VectorXd step(Session& s, int token) const {
    check_length(static_cast<std::size_t>(s.length) + 1, "generation");
    const int d = cfg_.d_model;
    Eigen::RowVectorXd x(d);
    const double emb_scale = std::sqrt(static_cast<double>(d));
    for (int c = 0; c < d; ++c) {
      x(c) = embed_->value[static_cast<std::size_t>(token) * d + c] * emb_scale +
             positions_[static_cast<std::size_t>(s.length) * d + c];
    }
    for (std::size_t l = 0; l < dec_.size(); ++l) {
      const auto& layer = dec_[l];
      Eigen::RowVectorXd h = norm_row(x, layer.ln1);
      append_row(s.self_k[l], project_row(h, layer.self.k));
      append_row(s.self_v[l], project_row(h, layer.self.v));
      x += project_row(attend_row(project_row(h, layer.self.q), s.self_k[l], s.self_v[l]), layer.self.o);
      h = norm_row(x, layer.ln2);
      x += project_row(attend_row(project_row(h, layer.cross.q), s.cross_k[l], s.cross_v[l]), layer.cross.o);
      h = norm_row(x, layer.ln3);
      Eigen::RowVectorXd f = project_row(h, layer.ff1);
      for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = gelu_scalar(f(i));
      x += project_row(f, layer.ff2);
    }
    ++s.length;
    return project_row(norm_row(x, dec_norm_), out_).transpose();
  }

  /// Generates answer ids (without the end marker) for an encoder input.
  std::vector<int> generate(const std::vector<int>& source, const DecodeConfig& decode, Rng& rng) const {
    Session s = start(source);
    std::vector<int> out;
    int token = Tokenizer::kBos;
    for (int t = 0; t < decode.max_tokens; ++t) {
      const Eigen::VectorXd logits = step(s, token);
      token = choose(logits, decode, rng);
      if (token == Tokenizer::kEos) break;
      out.push_back(token);
    }
    return out;
  }

  std::string weights_hash() const { return fnv1a_hex(nlohmann::json(cfg_).dump() + tok_.to_json().dump() + store_.hash()); }

  nlohmann::json checkpoint_json(const nlohmann::json& training = nlohmann::json::object()) const {
    return {{"format", "guidecot-seq"}, {"version", 1},     {"config", cfg_}, {"vocabulary", tok_.to_json()},
            {"training", training},     {"weights", store_.to_json()}};
  }

  void save(const std::string& path, const nlohmann::json& training = nlohmann::json::object()) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot write sequence checkpoint '" + path + "'");
    out << checkpoint_json(training).dump();
  }

  static Seq2Seq from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "guidecot-seq") throw Error(ErrorCode::load, "not a sequence-model checkpoint");
    if (j.value("version", 0) != 1) throw Error(ErrorCode::load, "unsupported sequence checkpoint version");
    Seq2Seq model(j.at("config").get<SeqModelConfig>(), Tokenizer::from_json(j.at("vocabulary")));
    model.store_.load_json(j.at("weights"));
    return model;
  }

  static Seq2Seq load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::load, "cannot open sequence checkpoint '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::load, "malformed sequence checkpoint '" + path + "': " + e.what());
    }
    return from_json(j);
  }

  static int choose(const Eigen::VectorXd& logits, const DecodeConfig& decode, Rng& rng) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    if (decode.temperature <= 0.0) return static_cast<int>(best);
    std::vector<std::pair<double, int>> p;
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      const double w = std::exp((logits(i) - logits(best)) / decode.temperature);
      p.emplace_back(w, static_cast<int>(i));
      total += w;
    }
    std::stable_sort(p.begin(), p.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double kept = 0.0;
    std::size_t n = 0;
    while (n < p.size() && (n == 0 || kept < decode.top_p * total)) kept += p[n++].first;
    double u = uniform01(rng) * kept;
    for (std::size_t i = 0; i < n; ++i) {
      u -= p[i].first;
      if (u <= 0.0) return p[i].second;
    }
    return p[n - 1].second;
  }

 private:
  void check_length(std::size_t n, const char* what) const {
    if (n > static_cast<std::size_t>(cfg_.context_length)) {
      throw Error(ErrorCode::input, std::string(what) + " of " + std::to_string(n) + " tokens exceeds context length " +
                                        std::to_string(cfg_.context_length));
    }
  }

  nn::Var embed(const std::vector<int>& ids, const std::vector<int>& lens) const {
    const int d = cfg_.d_model;
    std::vector<double> pe;
    pe.reserve(ids.size() * static_cast<std::size_t>(d));
    for (int len : lens) {
      pe.insert(pe.end(), positions_.begin(), positions_.begin() + static_cast<std::ptrdiff_t>(len) * d);
    }
    const nn::Var e = nn::scale(nn::embedding(embed_, ids), std::sqrt(static_cast<double>(d)));
    return nn::add(e, nn::constant(std::move(pe), {static_cast<int>(ids.size()), d}));
  }

  nn::Var attend(const detail::AttentionWeights& w, const nn::Var& query, const nn::Var& kv, const std::vector<int>& q_lens,
                 const std::vector<int>& k_lens, bool causal) const {
    return w.o(nn::packed_attention(w.q(query), w.k(kv), w.v(kv), cfg_.heads, causal, q_lens, k_lens));
  }

  static nn::RowMatrix project(const nn::ConstMatMap& x, const nn::Linear& lin) {
    nn::RowMatrix y = x * nn::detail::mat(*lin.weight);
    y.rowwise() += nn::ConstVecMap(lin.bias->value.data(), lin.weight->dim(1)).transpose();
    return y;
  }

  static Eigen::RowVectorXd project_row(const Eigen::RowVectorXd& x, const nn::Linear& lin) {
    Eigen::RowVectorXd y = x * nn::detail::mat(*lin.weight);
    y += nn::ConstVecMap(lin.bias->value.data(), lin.weight->dim(1)).transpose();
    return y;
  }

  static Eigen::RowVectorXd norm_row(const Eigen::RowVectorXd& x, const nn::LayerNorm& ln, double eps = 1e-5) {
    const auto n = x.size();
    double mean = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) mean += x(c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (Eigen::Index c = 0; c < n; ++c) var += (x(c) - mean) * (x(c) - mean);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    Eigen::RowVectorXd y(n);
    for (Eigen::Index c = 0; c < n; ++c) {
      y(c) = (x(c) - mean) * is * ln.gamma->value[static_cast<std::size_t>(c)] + ln.beta->value[static_cast<std::size_t>(c)];
    }
    return y;
  }

  static void append_row(nn::RowMatrix& m, const Eigen::RowVectorXd& row) {
    m.conservativeResize(m.rows() + 1, Eigen::NoChange);
    m.row(m.rows() - 1) = row;
  }

  Eigen::RowVectorXd attend_row(const Eigen::RowVectorXd& q, const nn::RowMatrix& k, const nn::RowMatrix& v) const {
    const int dh = cfg_.d_model / cfg_.heads;
    const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
    Eigen::RowVectorXd out(cfg_.d_model);
    for (int h = 0; h < cfg_.heads; ++h) {
      Eigen::VectorXd s = (k.middleCols(h * dh, dh) * q.segment(h * dh, dh).transpose()) * scale_factor;
      const double mx = s.maxCoeff();
      for (Eigen::Index j = 0; j < s.size(); ++j) s(j) = std::exp(s(j) - mx);
      s /= s.sum();
      out.segment(h * dh, dh) = s.transpose() * v.middleCols(h * dh, dh);
    }
    return out;
  }

  static double gelu_scalar(double x) {
    constexpr double k = 0.7978845608028654;
    return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
  }

  SeqModelConfig cfg_;
  Tokenizer tok_;
  nn::ParameterStore store_;
  nn::Var embed_;
  std::vector<detail::EncoderLayer> enc_;
  nn::LayerNorm enc_norm_;
  std::vector<detail::DecoderLayer> dec_;
  nn::LayerNorm dec_norm_;
  nn::Linear out_;
  std::vector<double> positions_;
};

}  // namespace guidecot::cot
