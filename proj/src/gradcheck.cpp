#include "senselm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "senselm/errors.hpp"
#include "senselm/rng.hpp"
#include "senselm/synthetic.hpp"

namespace senselm {

void GradCheckOptions::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw ConfigError("grad-check eps must be positive");
  if (!(tol > 0.0)) throw ConfigError("grad-check tol must be positive");
  if (samples_per_group == 0) throw ConfigError("grad-check needs at least one sample per group");
}

ModelParams<double> grad_check_params(const ModelConfig& config, std::uint64_t seed) {
  auto params = ModelParams<double>::zeros(config);
  auto tensors = params.tensors();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto& tensor = tensors[t];
    auto rng = derive_rng(seed, RngStream::grad_check, 0x1000 + t);
    double mean = 0.0, sd = 0.1;
    switch (tensor.role) {
      case ParamRole::embedding: sd = 0.5; break;
      case ParamRole::weight: sd = 1.0 / std::sqrt(static_cast<double>(tensor.cols)); break;
      case ParamRole::norm_gain: mean = 1.0; break;
      case ParamRole::bias:
      case ParamRole::norm_bias: break;
    }
    for (double& x : tensor.values()) x = mean + sd * rng.normal();
  }
  return params;
}

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

std::string GradCheckReport::to_text() const {
  std::ostringstream out;
  out.precision(3);
  if (!label.empty()) out << "[" << label << "]\n";
  for (const auto& g : groups) {
    out << (g.passed ? "ok   " : "FAIL ") << g.name << "  checked=" << g.checked << "  max_rel=" << std::scientific
        << g.max_rel_error << std::defaultfloat << '\n';
    if (!g.passed) {
      for (const auto& e : g.worst) {
        out << "       index " << e.index << ": analytic=" << std::scientific << e.analytic
            << " numeric=" << e.numeric << " rel=" << e.rel_error << std::defaultfloat
            << (e.refined ? " (extended precision)" : "") << '\n';
      }
    }
  }
  out << (passed ? "PASS" : "FAIL") << " max relative error " << std::scientific << max_rel_error << " (tol "
      << tol << ")\n";
  return out.str();
}

namespace {

std::vector<std::size_t> sample_indices(std::size_t size, std::size_t count, CounterRng& rng) {
  std::vector<std::size_t> all(size);
  for (std::size_t i = 0; i < size; ++i) all[i] = i;
  if (count >= size) return all;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(size - i));
    std::swap(all[i], all[j]);
  }
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

GradCheckReport grad_check(ModelParams<double> params, const ModelParams<double>& analytic, const LossFunction& loss,
                           const GradCheckOptions& options, std::string label,
                           const PreciseLossFunction& precise_loss) {
  options.validate();
  GradCheckReport report;
  report.label = std::move(label);
  report.tol = options.tol;
  auto tensors = params.tensors();
  const auto grads = analytic.tensors();
  if (grads.size() != tensors.size()) throw ContractError("gradient structure does not match the parameters");
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto& tensor = tensors[t];
    GradCheckGroup group;
    group.name = tensor.name;
    auto rng = derive_rng(options.seed, RngStream::grad_check, t);
    std::vector<GradCheckEntry> entries;
    for (std::size_t index : sample_indices(tensor.size(), options.samples_per_group, rng)) {
      double& x = tensor.data[index];
      const double saved = x;
      x = saved + options.eps;
      const double up = loss(params);
      x = saved - options.eps;
      const double down = loss(params);
      GradCheckEntry e;
      e.index = index;
      e.analytic = grads[t].data[index];
      e.numeric = (up - down) / (2.0 * options.eps);
      e.rel_error = relative_error(e.analytic, e.numeric);
      if (e.rel_error >= 0.1 * options.tol && precise_loss) {
        x = saved + options.eps;
        const long double precise_up = precise_loss(params);
        x = saved - options.eps;
        const long double precise_down = precise_loss(params);
        e.numeric = static_cast<double>((precise_up - precise_down) / (2.0L * options.eps));
        e.rel_error = relative_error(e.analytic, e.numeric);
        e.refined = true;
      }
      x = saved;
      entries.push_back(e);
    }
    group.checked = entries.size();
    std::sort(entries.begin(), entries.end(),
              [](const GradCheckEntry& a, const GradCheckEntry& b) { return a.rel_error > b.rel_error; });
    if (!entries.empty()) group.max_rel_error = entries.front().rel_error;
    if (entries.size() > options.worst_kept) entries.resize(options.worst_kept);
    group.worst = std::move(entries);
    group.passed = group.max_rel_error < options.tol;
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.passed = report.passed && group.passed;
    report.groups.push_back(std::move(group));
  }
  return report;
}

GradCheckReport grad_check(const ModelParams<double>& params, const SenseMembershipMatrix& membership,
                           std::span<const EncodedSequence> inputs, std::span<const MaskPlan> plans,
                           const ObjectiveConfig& objective, const GradCheckOptions& options, std::string label) {
  options.validate();
  if (inputs.size() != plans.size()) throw ContractError("grad-check batch has mismatched inputs and plans");
  auto traces_for = [&](const ModelParams<double>& p) {
    std::vector<ForwardTrace<double>> traces;
    traces.reserve(inputs.size());
    for (const auto& seq : inputs) traces.push_back(forward(p, membership, std::span<const TokenId>(seq.ids)));
    return traces;
  };
  const auto traces = traces_for(params);
  const auto analytic = backward<double>(params, membership, traces, plans, objective);
  auto loss = [&](const ModelParams<double>& p) {
    const auto t = traces_for(p);
    return static_cast<double>(batch_loss<double>(p, t, plans, objective).total);
  };
  auto precise_loss = [&](const ModelParams<double>& p) -> long double {
    const auto wide = cast_params<long double>(p);
    std::vector<ForwardTrace<long double>> traces;
    for (const auto& seq : inputs) traces.push_back(forward(wide, membership, std::span<const TokenId>(seq.ids)));
    return batch_loss<long double>(wide, traces, plans, objective).total;
  };
  return grad_check(params, analytic, loss, options, std::move(label), precise_loss);
}

std::vector<GradCheckReport> check_model_gradients(const RunConfig& run, const GradCheckOptions& options) {
  options.validate();
  const std::uint64_t seed = options.seed;
  const auto problem = make_grad_check_problem(run.synthetic_vocab, 8, 16, seed);
  ModelConfig model = run.model;
  model.vocab_size = problem.vocab.size();
  model.sense_count = problem.membership.sense_count();
  model.validate();
  const auto params = grad_check_params(model, seed);

  struct Case {
    const char* label;
    OovMode mode;
    LossTerms terms;
  };
  const Case cases[] = {
      {"60k lm", OovMode::sixty_k_no_oov, {true, false, false}},
      {"60k slm_allowed", OovMode::sixty_k_no_oov, {false, true, false}},
      {"60k slm_reg", OovMode::sixty_k_no_oov, {false, false, true}},
      {"60k total", OovMode::sixty_k_no_oov, {true, true, true}},
      {"avg total", OovMode::average_embedding, {true, true, true}},
  };
  std::vector<GradCheckReport> reports;
  for (const auto& c : cases) {
    MaskPolicy policy = run.masking;
    if (c.mode == OovMode::average_embedding) policy.whole_word = true;
    std::vector<EncodedSequence> inputs;
    std::vector<MaskPlan> plans;
    for (std::size_t i = 0; i < problem.sequences.size(); ++i) {
      auto plan = plan_masking(problem.sequences[i], problem.lexicon, policy,
                               derive_rng(seed, RngStream::grad_check, 1000, i).next());
      inputs.push_back(apply_plan(problem.sequences[i], plan, problem.vocab));
      plans.push_back(std::move(plan));
    }
    ObjectiveConfig objective;
    objective.mode = c.mode;
    objective.sense_weight = run.objective.sense_weight;
    objective.terms = c.terms;
    reports.push_back(grad_check(params, problem.membership, inputs, plans, objective, options, c.label));
  }
  return reports;
}

}  // namespace senselm
