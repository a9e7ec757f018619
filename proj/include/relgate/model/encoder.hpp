#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "relgate/core/parameter.hpp"
#include "relgate/core/rng.hpp"
#include "relgate/core/tensor.hpp"
#include "relgate/text/brs.hpp"

namespace relgate {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ffn_dim = 0;  // 0 means 4 * hidden
  std::size_t max_seq_len = 256;
  double dropout = 0.1;
  double init_stddev = 0.02;

  std::size_t effective_ffn_dim() const { return ffn_dim == 0 ? 4 * hidden : ffn_dim; }
  /// Throws ConfigError on non-positive dims, hidden % heads != 0, or dropout outside [0, 1).
  void validate() const;
};

inline constexpr std::size_t kNumSegments = 2;
inline constexpr double kMaskedScore = -1e9;

/// h0 is the global [CLS] state; h_r holds each relation [CLS] state, with
/// zero rows (and relation_mask 0) past a sequence's own relation count.
struct EncoderOutput {
  Tensor hidden_states;  // [batch × seq × d]
  Tensor h0;             // [batch × d]
  Tensor h_r;            // [batch × n_max × d]
  std::size_t max_relations = 0;
  std::vector<std::uint8_t> relation_mask;  // [batch × n_max]
};

struct AttentionResult {
  Tensor output;         // [batch × seq × d], after residual and layer norm
  Tensor probabilities;  // [batch·heads × seq × seq]
};

/// Small post-LN BERT-style encoder. A null `dropout_rng` means eval mode.
class Encoder {
 public:
  struct Layer {
    Tensor query_weight, query_bias, key_weight, key_bias, value_weight, value_bias;
    Tensor output_weight, output_bias, attention_norm_gain, attention_norm_bias;
    Tensor ffn_in_weight, ffn_in_bias, ffn_out_weight, ffn_out_bias, ffn_norm_gain, ffn_norm_bias;
  };

  Encoder(EncoderConfig config, Rng& init_rng);

  const EncoderConfig& config() const { return config_; }
  std::vector<NamedParam> parameters() const;
  /// Deep copy with independent parameter storage.
  Encoder clone() const;

  /// Token + position + segment embeddings, layer norm, dropout -> [batch × seq × d].
  Tensor embed(const PaddedBatch& batch, Rng* dropout_rng) const;
  AttentionResult self_attention(std::size_t layer, const Tensor& x, const PaddedBatch& batch,
                                 Rng* dropout_rng) const;
  Tensor feed_forward(std::size_t layer, const Tensor& x, Rng* dropout_rng) const;
  EncoderOutput encode(const PaddedBatch& batch, Rng* dropout_rng) const;

  Tensor& token_embedding() { return token_embedding_; }

 private:
  Encoder() = default;

  EncoderConfig config_;
  Tensor token_embedding_, position_embedding_, segment_embedding_;
  Tensor embedding_norm_gain_, embedding_norm_bias_;
  std::vector<Layer> layers_;
};

}  // namespace relgate
