#include "senselm/objective.hpp"

#include "senselm/parallel.hpp"

namespace senselm {

namespace {

struct Normalizers {
  std::size_t lm_tokens = 0;
  std::size_t sense_targets = 0;
};

bool sense_scored(const MaskTarget& target, OovMode mode) {
  if (target.allowed.empty()) return false;
  return target.span.length() == 1 || mode == OovMode::average_embedding;
}

template <typename Real>
Normalizers check_batch(const ModelParams<Real>& params, std::span<const ForwardTrace<Real>> traces,
                        std::span<const MaskPlan> plans, OovMode mode) {
  if (traces.size() != plans.size()) {
    throw ContractError("batch has " + std::to_string(traces.size()) + " traces but " +
                        std::to_string(plans.size()) + " plans");
  }
  Normalizers n;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    const auto length = traces[i].length();
    if (traces[i].v_output.rows() != static_cast<Eigen::Index>(params.config.hidden)) {
      throw ContractError("trace " + std::to_string(i) + " is missing or has the wrong width");
    }
    for (const auto& target : plans[i].targets) {
      if (target.span.end > length || target.gold.size() != target.span.length()) {
        throw ContractError("plan " + std::to_string(i) + " does not fit its trace");
      }
      for (TokenId gold : target.gold) {
        if (gold >= params.config.vocab_size) throw ContractError("gold id outside the vocabulary");
      }
      for (SenseId s : target.allowed) {
        if (s >= params.config.sense_count) throw ContractError("allowed sense outside the inventory");
      }
      n.lm_tokens += target.span.length();
      if (sense_scored(target, mode)) ++n.sense_targets;
    }
  }
  return n;
}

// Output-head work for one sequence: losses, plus (when requested) the score
// gradients and the gradient flowing into v_output.
template <typename Real>
struct HeadResult {
  std::vector<TargetLoss> losses;
  Matrix<Real> lm_inputs;      // d x T
  Matrix<Real> lm_dscores;     // D_W x T
  Matrix<Real> sense_inputs;   // d x U
  Matrix<Real> sense_dscores;  // D_S x U
  Matrix<Real> d_output;       // d x N
};

struct Scales {
  double lm = 0;
  double allowed = 0;
  double reg = 0;
};

template <typename Real>
HeadResult<Real> output_head(const ModelParams<Real>& params, const ForwardTrace<Real>& trace, const MaskPlan& plan,
                             std::size_t sequence, const ObjectiveConfig& objective, const Scales& scales,
                             bool want_grad) {
  HeadResult<Real> out;
  const auto& v = trace.v_output;
  std::size_t lm_count = 0;
  std::size_t sense_count = 0;
  for (const auto& target : plan.targets) {
    lm_count += target.span.length();
    if (sense_scored(target, objective.mode)) ++sense_count;
  }

  out.lm_inputs.resize(v.rows(), static_cast<Eigen::Index>(lm_count));
  std::size_t col = 0;
  for (const auto& target : plan.targets) {
    for (std::size_t p = target.span.begin; p < target.span.end; ++p) {
      out.lm_inputs.col(static_cast<Eigen::Index>(col++)) = v.col(static_cast<Eigen::Index>(p));
    }
  }
  Matrix<Real> scores = params.words.transpose() * out.lm_inputs;
  if (want_grad) out.lm_dscores.resize(scores.rows(), scores.cols());

  out.sense_inputs.resize(v.rows(), static_cast<Eigen::Index>(sense_count));
  if (want_grad) out.sense_dscores.resize(params.senses.cols(), static_cast<Eigen::Index>(sense_count));

  col = 0;
  std::size_t sense_col = 0;
  for (std::size_t t = 0; t < plan.targets.size(); ++t) {
    const auto& target = plan.targets[t];
    TargetLoss loss;
    loss.sequence = sequence;
    loss.target = t;
    loss.lm_tokens = target.span.length();
    for (std::size_t p = 0; p < target.span.length(); ++p, ++col) {
      const auto c = static_cast<Eigen::Index>(col);
      const Vector<Real> y = scores.col(c);
      const std::span<const Real> ys(y.data(), static_cast<std::size_t>(y.size()));
      loss.lm += static_cast<LossValue>(lm_loss(ys, target.gold[p]));
      if (want_grad) {
        Vector<Real> d = softmax(y) * static_cast<Real>(scales.lm);
        d(target.gold[p]) -= static_cast<Real>(scales.lm);
        out.lm_dscores.col(c) = d;
      }
    }
    if (sense_scored(target, objective.mode)) {
      const auto sc = static_cast<Eigen::Index>(sense_col++);
      Vector<Real> mean = Vector<Real>::Zero(v.rows());
      for (std::size_t p = target.span.begin; p < target.span.end; ++p) mean += v.col(static_cast<Eigen::Index>(p));
      mean /= static_cast<Real>(target.span.length());
      out.sense_inputs.col(sc) = mean;
      const Vector<Real> y = sense_scores(params, mean);
      const std::span<const Real> ys(y.data(), static_cast<std::size_t>(y.size()));
      loss.sense_scored = true;
      loss.slm_allowed = static_cast<LossValue>(slm_allowed_loss<Real>(ys, target.allowed));
      loss.slm_reg = static_cast<LossValue>(slm_reg_loss<Real>(ys, target.allowed));
      if (want_grad) {
        const Vector<Real> prob = softmax(y);
        Real allowed_mass = 0;
        for (SenseId s : target.allowed) allowed_mass += prob(s);
        Vector<Real> d = prob * static_cast<Real>(scales.allowed + scales.reg);
        const Real share = Real(1) / static_cast<Real>(target.allowed.size());
        for (SenseId s : target.allowed) {
          d(s) -= static_cast<Real>(scales.allowed) * prob(s) / allowed_mass + static_cast<Real>(scales.reg) * share;
        }
        out.sense_dscores.col(sc) = d;
      }
    }
    out.losses.push_back(loss);
  }

  if (want_grad) {
    out.d_output = Matrix<Real>::Zero(v.rows(), v.cols());
    const Matrix<Real> d_lm = params.words * out.lm_dscores;
    const Matrix<Real> d_sense = params.senses * out.sense_dscores;
    col = 0;
    sense_col = 0;
    for (const auto& target : plan.targets) {
      for (std::size_t p = target.span.begin; p < target.span.end; ++p) {
        out.d_output.col(static_cast<Eigen::Index>(p)) += d_lm.col(static_cast<Eigen::Index>(col++));
      }
      if (sense_scored(target, objective.mode)) {
        const auto share = static_cast<Real>(1.0 / static_cast<double>(target.span.length()));
        const auto sc = static_cast<Eigen::Index>(sense_col++);
        for (std::size_t p = target.span.begin; p < target.span.end; ++p) {
          out.d_output.col(static_cast<Eigen::Index>(p)) += d_sense.col(sc) * share;
        }
      }
    }
  }
  return out;
}

Scales make_scales(const ObjectiveConfig& objective, const Normalizers& n) {
  Scales s;
  if (objective.terms.lm && n.lm_tokens > 0) s.lm = 1.0 / static_cast<double>(n.lm_tokens);
  if (n.sense_targets > 0) {
    const double per_target = objective.sense_weight / static_cast<double>(n.sense_targets);
    if (objective.terms.slm_allowed) s.allowed = per_target;
    if (objective.terms.slm_reg) s.reg = per_target;
  }
  return s;
}

LossReport summarize(std::vector<TargetLoss> targets, const Normalizers& n, const ObjectiveConfig& objective) {
  LossReport report;
  report.lm_tokens = n.lm_tokens;
  report.sense_targets = n.sense_targets;
  for (const auto& t : targets) {
    report.lm += t.lm;
    report.slm_allowed += t.slm_allowed;
    report.slm_reg += t.slm_reg;
  }
  if (n.lm_tokens > 0) report.lm /= static_cast<LossValue>(n.lm_tokens);
  if (n.sense_targets > 0) {
    report.slm_allowed /= static_cast<LossValue>(n.sense_targets);
    report.slm_reg /= static_cast<LossValue>(n.sense_targets);
  }
  report.slm = report.slm_allowed + report.slm_reg;
  const auto& terms = objective.terms;
  report.total = (terms.lm ? report.lm : LossValue(0)) +
                 static_cast<LossValue>(objective.sense_weight) *
                     ((terms.slm_allowed ? report.slm_allowed : LossValue(0)) +
                      (terms.slm_reg ? report.slm_reg : LossValue(0)));
  report.targets = std::move(targets);
  return report;
}

template <typename Real>
ModelParams<Real> layer_gradients(const ModelConfig& config) {
  ModelParams<Real> g;
  g.config = config;
  auto full = ModelParams<Real>::zeros(ModelConfig{config.hidden, config.layers, config.heads, config.ff_dim, 1, 1, 1});
  g.layers = std::move(full.layers);
  return g;
}

}  // namespace

std::string_view to_string(OovMode mode) {
  return mode == OovMode::sixty_k_no_oov ? "60k" : "avg";
}

OovMode parse_oov_mode(std::string_view text) {
  if (text == "60k" || text == "sixty_k_no_oov") return OovMode::sixty_k_no_oov;
  if (text == "avg" || text == "average_embedding") return OovMode::average_embedding;
  throw ConfigError("unknown OOV mode '" + std::string(text) + "' (expected 60k or avg)");
}

template <typename Real>
LossReport batch_loss(const ModelParams<Real>& params, std::span<const ForwardTrace<Real>> traces,
                      std::span<const MaskPlan> plans, const ObjectiveConfig& objective) {
  const Normalizers n = check_batch(params, traces, plans, objective.mode);
  const Scales scales = make_scales(objective, n);
  std::vector<TargetLoss> targets;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto head = output_head(params, traces[i], plans[i], i, objective, scales, false);
    targets.insert(targets.end(), head.losses.begin(), head.losses.end());
  }
  return summarize(std::move(targets), n, objective);
}

template <typename Real>
ModelParams<Real> backward(const ModelParams<Real>& params, const SenseMembershipMatrix& membership,
                           std::span<const ForwardTrace<Real>> traces, std::span<const MaskPlan> plans,
                           const ObjectiveConfig& objective, LossReport* report, std::size_t threads) {
  const Normalizers n = check_batch(params, traces, plans, objective.mode);
  for (const auto& trace : traces) {
    if (trace.tokens.size() != trace.length() || trace.layers.size() != params.layers.size()) {
      throw ContractError("backward needs full forward traces (use forward(), not encode())");
    }
  }
  const Scales scales = make_scales(objective, n);

  std::vector<HeadResult<Real>> heads(traces.size());
  std::vector<ModelParams<Real>> layer_grads(traces.size());
  std::vector<Matrix<Real>> d_inputs(traces.size());
  parallel_for(traces.size(), threads, [&](std::size_t i) {
    heads[i] = output_head(params, traces[i], plans[i], i, objective, scales, true);
    layer_grads[i] = layer_gradients<Real>(params.config);
    d_inputs[i] = encode_backward(params, traces[i], heads[i].d_output, layer_grads[i]);
  });

  auto grads = ModelParams<Real>::zeros(params.config);
  Eigen::Index lm_cols = 0;
  Eigen::Index sense_cols = 0;
  for (const auto& h : heads) {
    lm_cols += h.lm_inputs.cols();
    sense_cols += h.sense_inputs.cols();
  }
  const auto d = static_cast<Eigen::Index>(params.config.hidden);
  Matrix<Real> lm_in(d, lm_cols), lm_ds(params.words.cols(), lm_cols);
  Matrix<Real> sense_in(d, sense_cols), sense_ds(params.senses.cols(), sense_cols);
  Eigen::Index lc = 0;
  Eigen::Index sc = 0;
  for (const auto& h : heads) {
    lm_in.middleCols(lc, h.lm_inputs.cols()) = h.lm_inputs;
    lm_ds.middleCols(lc, h.lm_inputs.cols()) = h.lm_dscores;
    lc += h.lm_inputs.cols();
    sense_in.middleCols(sc, h.sense_inputs.cols()) = h.sense_inputs;
    sense_ds.middleCols(sc, h.sense_inputs.cols()) = h.sense_dscores;
    sc += h.sense_inputs.cols();
  }
  grads.words.noalias() += lm_in * lm_ds.transpose();
  grads.senses.noalias() += sense_in * sense_ds.transpose();

  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto& g = grads.layers;
    const auto& src = layer_grads[i].layers;
    for (std::size_t l = 0; l < g.size(); ++l) {
      g[l].query += src[l].query;
      g[l].key += src[l].key;
      g[l].value += src[l].value;
      g[l].output += src[l].output;
      g[l].query_bias += src[l].query_bias;
      g[l].value_bias += src[l].value_bias;
      g[l].output_bias += src[l].output_bias;
      g[l].attn_norm_gain += src[l].attn_norm_gain;
      g[l].attn_norm_bias += src[l].attn_norm_bias;
      g[l].ff_in += src[l].ff_in;
      g[l].ff_in_bias += src[l].ff_in_bias;
      g[l].ff_out += src[l].ff_out;
      g[l].ff_out_bias += src[l].ff_out_bias;
      g[l].out_norm_gain += src[l].out_norm_gain;
      g[l].out_norm_bias += src[l].out_norm_bias;
    }
    embed_backward(membership, std::span<const TokenId>(traces[i].tokens), d_inputs[i], grads);
  }

  if (report != nullptr) {
    std::vector<TargetLoss> targets;
    for (auto& h : heads) targets.insert(targets.end(), h.losses.begin(), h.losses.end());
    *report = summarize(std::move(targets), n, objective);
  }
  return grads;
}

#define SENSELM_INSTANTIATE(Real)                                                                                 \
  template LossReport batch_loss<Real>(const ModelParams<Real>&, std::span<const ForwardTrace<Real>>,             \
                                       std::span<const MaskPlan>, const ObjectiveConfig&);                       \
  template ModelParams<Real> backward<Real>(const ModelParams<Real>&, const SenseMembershipMatrix&,               \
                                            std::span<const ForwardTrace<Real>>, std::span<const MaskPlan>,      \
                                            const ObjectiveConfig&, LossReport*, std::size_t);

SENSELM_INSTANTIATE(float)
SENSELM_INSTANTIATE(double)
SENSELM_INSTANTIATE(long double)
#undef SENSELM_INSTANTIATE

}  // namespace senselm
