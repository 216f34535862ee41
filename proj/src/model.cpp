#include "senselm/model.hpp"

#include <cmath>
#include <numbers>

#include "senselm/errors.hpp"
#include "senselm/rng.hpp"

namespace senselm {

namespace {

constexpr double kNormEpsilon = 1e-12;
constexpr double kInitStd = 0.02;

template <typename Real>
Real gelu(Real x) {
  return Real(0.5) * x * (Real(1) + std::erf(x / std::numbers::sqrt2_v<Real>));
}

template <typename Real>
Real gelu_grad(Real x) {
  const Real cdf = Real(0.5) * (Real(1) + std::erf(x / std::numbers::sqrt2_v<Real>));
  const Real pdf = std::exp(Real(-0.5) * x * x) * (std::numbers::inv_sqrtpi_v<Real> / std::numbers::sqrt2_v<Real>);
  return cdf + x * pdf;
}

template <typename Real>
Matrix<Real> layer_norm(const Matrix<Real>& x, const Vector<Real>& gain, const Vector<Real>& bias,
                        NormCache<Real>& cache) {
  const auto d = static_cast<Real>(x.rows());
  const Eigen::Matrix<Real, 1, Eigen::Dynamic> mean = x.colwise().sum() / d;
  Matrix<Real> centered = x.rowwise() - mean;
  const Eigen::Matrix<Real, 1, Eigen::Dynamic> var = centered.array().square().colwise().sum() / d;
  cache.inv_std = (var.array() + Real(kNormEpsilon)).rsqrt().transpose();
  cache.normalized = centered.array().rowwise() * cache.inv_std.transpose().array();
  return (cache.normalized.array().colwise() * gain.array()).colwise() + bias.array();
}

// Returns d(loss)/dx given d(loss)/dy for y = gain * xhat + bias.
template <typename Real>
Matrix<Real> layer_norm_backward(const Matrix<Real>& d_out, const NormCache<Real>& cache, const Vector<Real>& gain,
                                 Vector<Real>& d_gain, Vector<Real>& d_bias) {
  const auto& xhat = cache.normalized;
  d_gain += (d_out.array() * xhat.array()).rowwise().sum().matrix();
  d_bias += d_out.rowwise().sum();
  const Matrix<Real> d_xhat = d_out.array().colwise() * gain.array();
  const auto d = static_cast<Real>(d_out.rows());
  const Eigen::Matrix<Real, 1, Eigen::Dynamic> sum1 = d_xhat.colwise().sum();
  const Eigen::Matrix<Real, 1, Eigen::Dynamic> sum2 = (d_xhat.array() * xhat.array()).colwise().sum();
  Matrix<Real> dx = (d_xhat * d).rowwise() - sum1;
  dx.array() -= xhat.array().rowwise() * sum2.array();
  dx.array().rowwise() *= (cache.inv_std.array() / d).transpose();
  return dx;
}

template <typename Real>
Real truncated_normal(CounterRng& rng) {
  for (;;) {
    const double z = rng.normal();
    if (std::abs(z) <= 2.0) return static_cast<Real>(z * kInitStd);
  }
}

template <typename Real, typename Params>
auto collect_tensors(Params& p) {
  using Value = std::conditional_t<std::is_const_v<Params>, const Real, Real>;
  std::vector<TensorView<Value>> out;
  auto add = [&](std::string name, auto& tensor, ParamRole role) {
    out.push_back(TensorView<Value>{std::move(name), tensor.data(), static_cast<std::size_t>(tensor.rows()),
                                    static_cast<std::size_t>(tensor.cols()), role});
  };
  add("words", p.words, ParamRole::embedding);
  add("senses", p.senses, ParamRole::embedding);
  add("positions", p.positions, ParamRole::embedding);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    add(prefix + "attn.query", layer.query, ParamRole::weight);
    add(prefix + "attn.query_bias", layer.query_bias, ParamRole::bias);
    add(prefix + "attn.key", layer.key, ParamRole::weight);
    add(prefix + "attn.value", layer.value, ParamRole::weight);
    add(prefix + "attn.value_bias", layer.value_bias, ParamRole::bias);
    add(prefix + "attn.output", layer.output, ParamRole::weight);
    add(prefix + "attn.output_bias", layer.output_bias, ParamRole::bias);
    add(prefix + "attn_norm.gain", layer.attn_norm_gain, ParamRole::norm_gain);
    add(prefix + "attn_norm.bias", layer.attn_norm_bias, ParamRole::norm_bias);
    add(prefix + "ff.in", layer.ff_in, ParamRole::weight);
    add(prefix + "ff.in_bias", layer.ff_in_bias, ParamRole::bias);
    add(prefix + "ff.out", layer.ff_out, ParamRole::weight);
    add(prefix + "ff.out_bias", layer.ff_out_bias, ParamRole::bias);
    add(prefix + "out_norm.gain", layer.out_norm_gain, ParamRole::norm_gain);
    add(prefix + "out_norm.bias", layer.out_norm_bias, ParamRole::norm_bias);
  }
  return out;
}

}  // namespace

void ModelConfig::validate() const {
  if (hidden == 0 || layers > 1024 || heads == 0 || ff_dim == 0 || max_positions == 0 || vocab_size == 0 ||
      sense_count == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (hidden % heads != 0) {
    throw ConfigError("hidden size " + std::to_string(hidden) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
}

ModelConfig ModelConfig::from_config(const KeyValueConfig& config) {
  ModelConfig out;
  out.hidden = config.get_uint("d", out.hidden);
  out.layers = config.get_uint("layers", out.layers);
  out.heads = config.get_uint("heads", out.heads);
  out.ff_dim = config.get_uint("ff_dim", out.ff_dim);
  out.max_positions = config.get_uint("n_max", out.max_positions);
  return out;
}

template <typename Real>
ModelParams<Real> ModelParams<Real>::zeros(const ModelConfig& config) {
  config.validate();
  const auto d = static_cast<Eigen::Index>(config.hidden);
  const auto ff = static_cast<Eigen::Index>(config.ff_dim);
  ModelParams p;
  p.config = config;
  p.words = Matrix<Real>::Zero(d, static_cast<Eigen::Index>(config.vocab_size));
  p.senses = Matrix<Real>::Zero(d, static_cast<Eigen::Index>(config.sense_count));
  p.positions = Matrix<Real>::Zero(d, static_cast<Eigen::Index>(config.max_positions));
  p.layers.resize(config.layers);
  for (auto& layer : p.layers) {
    layer.query = layer.key = layer.value = layer.output = Matrix<Real>::Zero(d, d);
    layer.query_bias = layer.value_bias = layer.output_bias = Vector<Real>::Zero(d);
    layer.attn_norm_gain = layer.attn_norm_bias = Vector<Real>::Zero(d);
    layer.ff_in = Matrix<Real>::Zero(ff, d);
    layer.ff_in_bias = Vector<Real>::Zero(ff);
    layer.ff_out = Matrix<Real>::Zero(d, ff);
    layer.ff_out_bias = Vector<Real>::Zero(d);
    layer.out_norm_gain = layer.out_norm_bias = Vector<Real>::Zero(d);
  }
  return p;
}

template <typename Real>
std::vector<TensorView<Real>> ModelParams<Real>::tensors() {
  return collect_tensors<Real>(*this);
}

template <typename Real>
std::vector<TensorView<const Real>> ModelParams<Real>::tensors() const {
  return collect_tensors<Real>(*this);
}

template <typename Real>
std::size_t ModelParams<Real>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors()) total += t.size();
  return total;
}

template <typename Real>
void ModelParams<Real>::set_zero() {
  for (auto& t : tensors()) std::fill(t.data, t.data + t.size(), Real(0));
}

template <typename Real>
bool ModelParams<Real>::all_finite() const {
  for (const auto& t : tensors()) {
    for (Real v : t.values()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

template <typename Real>
void ModelParams<Real>::add_scaled(const ModelParams& other, Real scale) {
  auto mine = tensors();
  auto theirs = other.tensors();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    for (std::size_t k = 0; k < mine[i].size(); ++k) mine[i].data[k] += scale * theirs[i].data[k];
  }
}

template <typename Real>
ModelParams<Real> init_params(const ModelConfig& config, std::uint64_t seed) {
  auto params = ModelParams<Real>::zeros(config);
  CounterRng rng = derive_rng(seed, RngStream::init);
  for (auto& tensor : params.tensors()) {
    switch (tensor.role) {
      case ParamRole::embedding:
      case ParamRole::weight:
        for (Real& v : tensor.values()) v = truncated_normal<Real>(rng);
        break;
      case ParamRole::norm_gain:
        for (Real& v : tensor.values()) v = Real(1);
        break;
      case ParamRole::bias:
      case ParamRole::norm_bias:
        break;
    }
  }
  return params;
}

template <typename Real>
Matrix<Real> input_embed(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                         std::span<const TokenId> tokens) {
  const auto& config = params.config;
  if (tokens.size() > config.max_positions) {
    throw LengthError("sequence of " + std::to_string(tokens.size()) + " tokens exceeds " +
                      std::to_string(config.max_positions) + " positions");
  }
  if (membership.nonzeros() > 0 && membership.sense_count() != config.sense_count) {
    throw ContractError("membership matrix has " + std::to_string(membership.sense_count()) +
                        " senses, model expects " + std::to_string(config.sense_count));
  }
  Matrix<Real> out(static_cast<Eigen::Index>(config.hidden), static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const TokenId token = tokens[j];
    if (token >= config.vocab_size) throw ContractError("token id " + std::to_string(token) + " outside vocabulary");
    const auto col = static_cast<Eigen::Index>(j);
    out.col(col) = params.words.col(token) + params.positions.col(col);
    for (SenseId s : membership.senses_of(token)) out.col(col) += params.senses.col(s);
  }
  return out;
}

template <typename Real>
ForwardTrace<Real> encode(const ModelParams<Real>& params, const Matrix<Real>& inputs) {
  const auto& config = params.config;
  if (inputs.cols() == 0) throw ContractError("encode needs at least one position");
  if (static_cast<std::size_t>(inputs.rows()) != config.hidden) throw ContractError("input width differs from d");
  const auto n = inputs.cols();
  const auto dh = static_cast<Eigen::Index>(config.head_dim());
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dh));

  ForwardTrace<Real> trace;
  trace.v_input = inputs;
  trace.layers.resize(params.layers.size());
  Matrix<Real> x = inputs;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& p = params.layers[l];
    auto& t = trace.layers[l];
    t.input = x;
    t.query = (p.query * x).colwise() + p.query_bias;
    t.key = p.key * x;
    t.value = (p.value * x).colwise() + p.value_bias;
    t.context.resize(x.rows(), n);
    t.attention.resize(config.heads);
    for (std::size_t h = 0; h < config.heads; ++h) {
      const auto row = static_cast<Eigen::Index>(h) * dh;
      Matrix<Real> scores = t.query.middleRows(row, dh).transpose() * t.key.middleRows(row, dh) * scale;
      const Vector<Real> top = scores.rowwise().maxCoeff();
      scores = (scores.colwise() - top).array().exp();
      const Vector<Real> total = scores.rowwise().sum();
      scores.array().colwise() /= total.array();
      t.context.middleRows(row, dh).noalias() = t.value.middleRows(row, dh) * scores.transpose();
      t.attention[h] = std::move(scores);
    }
    Matrix<Real> residual = x + ((p.output * t.context).colwise() + p.output_bias);
    t.hidden = layer_norm(residual, p.attn_norm_gain, p.attn_norm_bias, t.attn_norm);
    t.ff_pre = (p.ff_in * t.hidden).colwise() + p.ff_in_bias;
    const Matrix<Real> activated = t.ff_pre.unaryExpr([](Real v) { return gelu(v); });
    residual = t.hidden + ((p.ff_out * activated).colwise() + p.ff_out_bias);
    x = layer_norm(residual, p.out_norm_gain, p.out_norm_bias, t.out_norm);
    if (!x.allFinite()) throw NumericsError("non-finite activation in encoder layer " + std::to_string(l));
  }
  trace.v_output = std::move(x);
  return trace;
}

template <typename Real>
ForwardTrace<Real> forward(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                           std::span<const TokenId> tokens) {
  auto trace = encode(params, input_embed(params, membership, tokens));
  trace.tokens.assign(tokens.begin(), tokens.end());
  return trace;
}

template <typename Real>
Matrix<Real> encode_backward(const ModelParams<Real>& params, const ForwardTrace<Real>& trace,
                             const Matrix<Real>& d_output, ModelParams<Real>& grads) {
  const auto& config = params.config;
  if (trace.layers.size() != params.layers.size()) throw ContractError("trace does not match the model depth");
  const auto dh = static_cast<Eigen::Index>(config.head_dim());
  const Real scale = Real(1) / std::sqrt(static_cast<Real>(dh));

  Matrix<Real> dy = d_output;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& p = params.layers[l];
    const auto& t = trace.layers[l];
    auto& g = grads.layers[l];

    // Feed-forward sublayer.
    Matrix<Real> d_residual = layer_norm_backward(dy, t.out_norm, p.out_norm_gain, g.out_norm_gain, g.out_norm_bias);
    const Matrix<Real> activated = t.ff_pre.unaryExpr([](Real v) { return gelu(v); });
    g.ff_out.noalias() += d_residual * activated.transpose();
    g.ff_out_bias += d_residual.rowwise().sum();
    Matrix<Real> d_pre = p.ff_out.transpose() * d_residual;
    d_pre.array() *= t.ff_pre.unaryExpr([](Real v) { return gelu_grad(v); }).array();
    g.ff_in.noalias() += d_pre * t.hidden.transpose();
    g.ff_in_bias += d_pre.rowwise().sum();
    Matrix<Real> d_hidden = d_residual;
    d_hidden.noalias() += p.ff_in.transpose() * d_pre;

    // Attention sublayer.
    d_residual = layer_norm_backward(d_hidden, t.attn_norm, p.attn_norm_gain, g.attn_norm_gain, g.attn_norm_bias);
    Matrix<Real> dx = d_residual;
    g.output.noalias() += d_residual * t.context.transpose();
    g.output_bias += d_residual.rowwise().sum();
    const Matrix<Real> d_context = p.output.transpose() * d_residual;

    Matrix<Real> d_query(t.query.rows(), t.query.cols());
    Matrix<Real> d_key(t.key.rows(), t.key.cols());
    Matrix<Real> d_value(t.value.rows(), t.value.cols());
    for (std::size_t h = 0; h < config.heads; ++h) {
      const auto row = static_cast<Eigen::Index>(h) * dh;
      const auto& attn = t.attention[h];
      const auto dc = d_context.middleRows(row, dh);
      d_value.middleRows(row, dh).noalias() = dc * attn;
      Matrix<Real> d_attn = dc.transpose() * t.value.middleRows(row, dh);
      const Vector<Real> inner = (d_attn.array() * attn.array()).rowwise().sum();
      Matrix<Real> d_scores = attn.array() * (d_attn.colwise() - inner).array();
      d_query.middleRows(row, dh).noalias() = t.key.middleRows(row, dh) * d_scores.transpose() * scale;
      d_key.middleRows(row, dh).noalias() = t.query.middleRows(row, dh) * d_scores * scale;
    }
    g.query.noalias() += d_query * t.input.transpose();
    g.key.noalias() += d_key * t.input.transpose();
    g.value.noalias() += d_value * t.input.transpose();
    g.query_bias += d_query.rowwise().sum();
    g.value_bias += d_value.rowwise().sum();
    dx.noalias() += p.query.transpose() * d_query;
    dx.noalias() += p.key.transpose() * d_key;
    dx.noalias() += p.value.transpose() * d_value;
    dy = std::move(dx);
  }
  return dy;
}

template <typename Real>
void embed_backward(const SenseMembershipMatrix& membership, std::span<const TokenId> tokens,
                    const Matrix<Real>& d_input, ModelParams<Real>& grads) {
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    grads.words.col(tokens[j]) += d_input.col(col);
    grads.positions.col(col) += d_input.col(col);
    for (SenseId s : membership.senses_of(tokens[j])) grads.senses.col(s) += d_input.col(col);
  }
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& params) {
  auto out = ModelParams<To>::zeros(params.config);
  auto dst = out.tensors();
  auto src = params.tensors();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    for (std::size_t k = 0; k < dst[i].size(); ++k) dst[i].data[k] = static_cast<To>(src[i].data[k]);
  }
  return out;
}

#define SENSELM_INSTANTIATE(Real)                                                                                \
  template struct ModelParams<Real>;                                                                             \
  template ModelParams<Real> init_params<Real>(const ModelConfig&, std::uint64_t);                               \
  template Matrix<Real> input_embed<Real>(const ModelParams<Real>&, const SenseMembershipMatrix&,                \
                                          std::span<const TokenId>);                                             \
  template ForwardTrace<Real> encode<Real>(const ModelParams<Real>&, const Matrix<Real>&);                       \
  template ForwardTrace<Real> forward<Real>(const ModelParams<Real>&, const SenseMembershipMatrix&,              \
                                            std::span<const TokenId>);                                           \
  template Matrix<Real> encode_backward<Real>(const ModelParams<Real>&, const ForwardTrace<Real>&,               \
                                              const Matrix<Real>&, ModelParams<Real>&);                          \
  template void embed_backward<Real>(const SenseMembershipMatrix&, std::span<const TokenId>, const Matrix<Real>&, \
                                     ModelParams<Real>&);

SENSELM_INSTANTIATE(float)
SENSELM_INSTANTIATE(double)
SENSELM_INSTANTIATE(long double)
#undef SENSELM_INSTANTIATE

template ModelParams<double> cast_params<double, float>(const ModelParams<float>&);
template ModelParams<float> cast_params<float, double>(const ModelParams<double>&);
template ModelParams<float> cast_params<float, float>(const ModelParams<float>&);
template ModelParams<double> cast_params<double, double>(const ModelParams<double>&);
template ModelParams<long double> cast_params<long double, double>(const ModelParams<double>&);

}  // namespace senselm
