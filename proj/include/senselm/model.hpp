#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "senselm/config.hpp"
#include "senselm/lexicon.hpp"

namespace senselm {

template <typename Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

struct ModelConfig {
  std::size_t hidden = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 256;
  std::size_t max_positions = 128;
  std::size_t vocab_size = 0;
  std::size_t sense_count = 45;

  /// Throws ConfigError on zero dimensions or hidden % heads != 0.
  void validate() const;
  std::size_t head_dim() const { return hidden / heads; }
  /// Reads the shape keys (d, layers, heads, ff_dim, n_max); vocabulary and
  /// sense counts come from the artifacts.
  static ModelConfig from_config(const KeyValueConfig& config);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Optimizer treatment of a tensor: weight decay applies to `weight` and
/// `embedding` roles only.
enum class ParamRole : std::uint8_t { embedding, weight, bias, norm_gain, norm_bias };

template <typename Real>
struct TensorView {
  std::string name;
  Real* data;
  std::size_t rows;
  std::size_t cols;
  ParamRole role;
  std::size_t size() const { return rows * cols; }
  std::span<Real> values() const { return {data, rows * cols}; }
};

template <typename Real>
struct LayerParams {
  Matrix<Real> query, key, value, output;  // d x d, applied as W * x
  // No key bias: it shifts every logit of a query row equally and cancels in
  // the softmax.
  Vector<Real> query_bias, value_bias, output_bias;
  Vector<Real> attn_norm_gain, attn_norm_bias;
  Matrix<Real> ff_in;  // ff x d
  Vector<Real> ff_in_bias;
  Matrix<Real> ff_out;  // d x ff
  Vector<Real> ff_out_bias;
  Vector<Real> out_norm_gain, out_norm_bias;
};

/// W (d x D_W), S (d x D_S) and the positional table are stored once; the
/// same matrices serve the input embedding and the output scoring heads.
template <typename Real>
struct ModelParams {
  ModelConfig config;
  Matrix<Real> words;      // W, column w embeds token w
  Matrix<Real> senses;     // S, column s embeds supersense s
  Matrix<Real> positions;  // d x max_positions
  std::vector<LayerParams<Real>> layers;

  /// All-zero tensors shaped by `config` (layer-norm gains included).
  static ModelParams zeros(const ModelConfig& config);
  /// Flat list of every tensor in the fixed serialization order.
  std::vector<TensorView<Real>> tensors();
  std::vector<TensorView<const Real>> tensors() const;
  std::size_t parameter_count() const;
  void set_zero();
  bool all_finite() const;
  /// this += scale * other, tensor by tensor.
  void add_scaled(const ModelParams& other, Real scale);
};

template <typename Real>
struct NormCache {
  Matrix<Real> normalized;   // (x - mean) / std, per column
  Vector<Real> inv_std;      // per column
};

template <typename Real>
struct LayerTrace {
  Matrix<Real> input;                   // d x N
  Matrix<Real> query, key, value;       // d x N
  std::vector<Matrix<Real>> attention;  // per head, N x N; row i sums to 1 over keys
  Matrix<Real> context;                 // d x N
  NormCache<Real> attn_norm;
  Matrix<Real> hidden;  // output of the attention sublayer, d x N
  Matrix<Real> ff_pre;  // ff x N
  NormCache<Real> out_norm;
};

template <typename Real>
struct ForwardTrace {
  std::vector<TokenId> tokens;  // empty when encode() was fed raw vectors
  Matrix<Real> v_input;         // d x N
  std::vector<LayerTrace<Real>> layers;
  Matrix<Real> v_output;        // d x N
  std::size_t length() const { return static_cast<std::size_t>(v_input.cols()); }
};

/// Truncated normal(0, 0.02) rejected beyond two standard deviations for all
/// matrices; layer-norm gains 1; biases 0.
template <typename Real>
ModelParams<Real> init_params(const ModelConfig& config, std::uint64_t seed);

/// v_j = W x_j + S M x_j + p_j, one column per position.
template <typename Real>
Matrix<Real> input_embed(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                         std::span<const TokenId> tokens);

/// Bidirectional post-norm transformer stack. Throws NumericsError naming the
/// first layer that produces a non-finite activation.
template <typename Real>
ForwardTrace<Real> encode(const ModelParams<Real>& params, const Matrix<Real>& inputs);

/// input_embed followed by encode, keeping the token ids for backward.
template <typename Real>
ForwardTrace<Real> forward(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                           std::span<const TokenId> tokens);

template <typename Real>
Vector<Real> word_scores(const ModelParams<Real>& params, const Vector<Real>& v_output) {
  return params.words.transpose() * v_output;
}

template <typename Real>
Vector<Real> sense_scores(const ModelParams<Real>& params, const Vector<Real>& v_output) {
  return params.senses.transpose() * v_output;
}

/// Max-subtracted softmax.
template <typename Real>
Vector<Real> softmax(const Vector<Real>& scores) {
  const Real top = scores.maxCoeff();
  Vector<Real> out = (scores.array() - top).exp().matrix();
  return out / out.sum();
}

/// log sum exp(scores), max-subtracted.
template <typename Real>
Real log_sum_exp(std::span<const Real> scores) {
  Real top = scores[0];
  for (Real s : scores) top = s > top ? s : top;
  Real total = 0;
  for (Real s : scores) total += std::exp(s - top);
  return top + std::log(total);
}

/// Backpropagates d(loss)/d(v_output) through the stack, accumulating into
/// `grads`; returns d(loss)/d(v_input).
template <typename Real>
Matrix<Real> encode_backward(const ModelParams<Real>& params, const ForwardTrace<Real>& trace,
                             const Matrix<Real>& d_output, ModelParams<Real>& grads);

/// Scatters d(loss)/d(v_input) into W, S (through M) and the positional
/// table.
template <typename Real>
void embed_backward(const SenseMembershipMatrix& membership, std::span<const TokenId> tokens,
                    const Matrix<Real>& d_input, ModelParams<Real>& grads);

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& params);

}  // namespace senselm
