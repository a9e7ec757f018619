#include "relgate/model/encoder.hpp"

#include <cmath>
#include <string>

#include "relgate/core/errors.hpp"
#include "relgate/core/ops.hpp"

namespace relgate {

void EncoderConfig::validate() const {
  if (vocab_size == 0 || hidden == 0 || layers == 0 || heads == 0 || max_seq_len == 0) {
    throw ConfigError("encoder dimensions must all be positive");
  }
  if (hidden % heads != 0) {
    throw ConfigError("hidden size " + std::to_string(hidden) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (init_stddev < 0.0) throw ConfigError("init_stddev must be non-negative");
}

Encoder::Encoder(EncoderConfig config, Rng& init_rng) : config_(config) {
  config_.validate();
  const std::size_t d = config_.hidden, ff = config_.effective_ffn_dim();
  const double sd = config_.init_stddev;
  token_embedding_ = normal_param({config_.vocab_size, d}, sd, init_rng);
  position_embedding_ = normal_param({config_.max_seq_len, d}, sd, init_rng);
  segment_embedding_ = normal_param({kNumSegments, d}, sd, init_rng);
  embedding_norm_gain_ = constant_param({d}, 1.0);
  embedding_norm_bias_ = zero_param({d});
  for (std::size_t l = 0; l < config_.layers; ++l) {
    Layer layer;
    layer.query_weight = normal_param({d, d}, sd, init_rng);
    layer.query_bias = zero_param({d});
    layer.key_weight = normal_param({d, d}, sd, init_rng);
    layer.key_bias = zero_param({d});
    layer.value_weight = normal_param({d, d}, sd, init_rng);
    layer.value_bias = zero_param({d});
    layer.output_weight = normal_param({d, d}, sd, init_rng);
    layer.output_bias = zero_param({d});
    layer.attention_norm_gain = constant_param({d}, 1.0);
    layer.attention_norm_bias = zero_param({d});
    layer.ffn_in_weight = normal_param({d, ff}, sd, init_rng);
    layer.ffn_in_bias = zero_param({ff});
    layer.ffn_out_weight = normal_param({ff, d}, sd, init_rng);
    layer.ffn_out_bias = zero_param({d});
    layer.ffn_norm_gain = constant_param({d}, 1.0);
    layer.ffn_norm_bias = zero_param({d});
    layers_.push_back(std::move(layer));
  }
}

std::vector<NamedParam> Encoder::parameters() const {
  std::vector<NamedParam> out{
      {"encoder.token_embedding", token_embedding_},
      {"encoder.position_embedding", position_embedding_},
      {"encoder.segment_embedding", segment_embedding_},
      {"encoder.embedding_norm.gain", embedding_norm_gain_},
      {"encoder.embedding_norm.bias", embedding_norm_bias_},
  };
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    out.push_back({p + "attention.query.weight", L.query_weight});
    out.push_back({p + "attention.query.bias", L.query_bias});
    out.push_back({p + "attention.key.weight", L.key_weight});
    out.push_back({p + "attention.key.bias", L.key_bias});
    out.push_back({p + "attention.value.weight", L.value_weight});
    out.push_back({p + "attention.value.bias", L.value_bias});
    out.push_back({p + "attention.output.weight", L.output_weight});
    out.push_back({p + "attention.output.bias", L.output_bias});
    out.push_back({p + "attention_norm.gain", L.attention_norm_gain});
    out.push_back({p + "attention_norm.bias", L.attention_norm_bias});
    out.push_back({p + "ffn.in.weight", L.ffn_in_weight});
    out.push_back({p + "ffn.in.bias", L.ffn_in_bias});
    out.push_back({p + "ffn.out.weight", L.ffn_out_weight});
    out.push_back({p + "ffn.out.bias", L.ffn_out_bias});
    out.push_back({p + "ffn_norm.gain", L.ffn_norm_gain});
    out.push_back({p + "ffn_norm.bias", L.ffn_norm_bias});
  }
  return out;
}

Encoder Encoder::clone() const {
  Encoder copy;
  copy.config_ = config_;
  copy.token_embedding_ = token_embedding_.clone();
  copy.position_embedding_ = position_embedding_.clone();
  copy.segment_embedding_ = segment_embedding_.clone();
  copy.embedding_norm_gain_ = embedding_norm_gain_.clone();
  copy.embedding_norm_bias_ = embedding_norm_bias_.clone();
  for (const auto& L : layers_) {
    copy.layers_.push_back(Layer{
        L.query_weight.clone(), L.query_bias.clone(), L.key_weight.clone(), L.key_bias.clone(),
        L.value_weight.clone(), L.value_bias.clone(), L.output_weight.clone(), L.output_bias.clone(),
        L.attention_norm_gain.clone(), L.attention_norm_bias.clone(), L.ffn_in_weight.clone(),
        L.ffn_in_bias.clone(), L.ffn_out_weight.clone(), L.ffn_out_bias.clone(), L.ffn_norm_gain.clone(),
        L.ffn_norm_bias.clone()});
  }
  return copy;
}

namespace {

Tensor maybe_dropout(const Tensor& x, double p, Rng* rng) { return rng ? dropout(x, p, *rng) : x; }

}  // namespace

Tensor Encoder::embed(const PaddedBatch& batch, Rng* dropout_rng) const {
  const std::size_t b = batch.batch, s = batch.seq_len;
  if (b == 0 || s == 0) throw ContractError("encoder: empty batch");
  if (s > config_.max_seq_len) {
    throw DimensionError("encoder: sequence length " + std::to_string(s) + " exceeds max_seq_len " +
                         std::to_string(config_.max_seq_len));
  }
  std::vector<std::int64_t> positions(b * s);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t t = 0; t < s; ++t) positions[i * s + t] = static_cast<std::int64_t>(t);
  for (auto seg : batch.segments) {
    if (seg < 0 || static_cast<std::size_t>(seg) >= kNumSegments) {
      throw DimensionError("encoder: segment id " + std::to_string(seg) + " out of range");
    }
  }
  const Shape index_shape{b, s};
  Tensor x = add(add(embedding(token_embedding_, batch.ids, index_shape),
                     embedding(position_embedding_, positions, index_shape)),
                 embedding(segment_embedding_, batch.segments, index_shape));
  x = layer_norm(x, embedding_norm_gain_, embedding_norm_bias_);
  return maybe_dropout(x, config_.dropout, dropout_rng);
}

AttentionResult Encoder::self_attention(std::size_t layer, const Tensor& x, const PaddedBatch& batch,
                                        Rng* dropout_rng) const {
  const auto& L = layers_.at(layer);
  const std::size_t b = batch.batch, s = batch.seq_len, d = config_.hidden, h = config_.heads, dh = d / h;
  if (x.shape() != Shape{b, s, d}) {
    throw DimensionError("self_attention: input " + shape_to_string(x.shape()) + " does not match batch " +
                         shape_to_string({b, s, d}));
  }
  auto split_heads = [&](const Tensor& t) {
    return reshape(permute(reshape(t, {b, s, h, dh}), {0, 2, 1, 3}), {b * h, s, dh});
  };
  Tensor q = split_heads(linear(x, L.query_weight, L.query_bias));
  Tensor k = split_heads(linear(x, L.key_weight, L.key_bias));
  Tensor v = split_heads(linear(x, L.value_weight, L.value_bias));

  std::vector<double> bias(b * h * s * s, 0.0);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < s; ++j) {
      if (batch.mask[i * s + j]) continue;
      for (std::size_t head = 0; head < h; ++head)
        for (std::size_t row = 0; row < s; ++row) bias[((i * h + head) * s + row) * s + j] = kMaskedScore;
    }
  Tensor scores = scale(bmm(q, permute(k, {0, 2, 1})), 1.0 / std::sqrt(static_cast<double>(dh)));
  scores = add(scores, Tensor::from_data({b * h, s, s}, std::move(bias)));
  Tensor probs = softmax(scores, 2);
  Tensor context = bmm(maybe_dropout(probs, config_.dropout, dropout_rng), v);
  context = reshape(permute(reshape(context, {b, h, s, dh}), {0, 2, 1, 3}), {b, s, d});
  Tensor attended = maybe_dropout(linear(context, L.output_weight, L.output_bias), config_.dropout, dropout_rng);
  return {layer_norm(add(x, attended), L.attention_norm_gain, L.attention_norm_bias), probs};
}

Tensor Encoder::feed_forward(std::size_t layer, const Tensor& x, Rng* dropout_rng) const {
  const auto& L = layers_.at(layer);
  Tensor inner = gelu(linear(x, L.ffn_in_weight, L.ffn_in_bias));
  Tensor out = maybe_dropout(linear(inner, L.ffn_out_weight, L.ffn_out_bias), config_.dropout, dropout_rng);
  return layer_norm(add(x, out), L.ffn_norm_gain, L.ffn_norm_bias);
}

EncoderOutput Encoder::encode(const PaddedBatch& batch, Rng* dropout_rng) const {
  const std::size_t b = batch.batch, s = batch.seq_len;
  if (batch.relation_positions.size() != b) throw ContractError("encoder: relation positions do not match batch");
  Tensor x = embed(batch, dropout_rng);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    x = self_attention(l, x, batch, dropout_rng).output;
    x = feed_forward(l, x, dropout_rng);
  }

  EncoderOutput out;
  out.hidden_states = x;
  std::vector<std::int64_t> first(b);
  for (std::size_t i = 0; i < b; ++i) first[i] = static_cast<std::int64_t>(i * s);
  out.h0 = gather_rows(x, first, {b});

  for (const auto& pos : batch.relation_positions) out.max_relations = std::max(out.max_relations, pos.size());
  const std::size_t n = std::max<std::size_t>(out.max_relations, 1);
  std::vector<std::int64_t> rows(b * n, -1);
  out.relation_mask.assign(b * n, 0);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& pos = batch.relation_positions[i];
    for (std::size_t r = 0; r < pos.size(); ++r) {
      if (pos[r] >= s || !batch.mask[i * s + pos[r]]) {
        throw DimensionError("encoder: relation position " + std::to_string(pos[r]) + " of sequence " +
                             std::to_string(i) + " is outside its tokens");
      }
      rows[i * n + r] = static_cast<std::int64_t>(i * s + pos[r]);
      out.relation_mask[i * n + r] = 1;
    }
  }
  out.h_r = gather_rows(x, rows, {b, n});
  return out;
}

}  // namespace relgate
