#pragma once

#include <vector>

#include "senselm/masker.hpp"
#include "senselm/model.hpp"
#include "senselm/objective.hpp"
#include "senselm/synthetic.hpp"

namespace senselm::testing {

// Masked batch over a generated problem, ready for forward/backward.
struct MaskedBatch {
  GradCheckProblem problem;
  std::vector<EncodedSequence> inputs;
  std::vector<MaskPlan> plans;
};

inline MaskedBatch masked_batch(std::size_t vocab_size, std::size_t sequences, std::size_t words, std::uint64_t seed,
                                bool whole_word = false) {
  MaskedBatch b{make_grad_check_problem(vocab_size, sequences, words, seed), {}, {}};
  MaskPolicy policy;
  policy.mask_rate = 0.3;
  policy.whole_word = whole_word;
  for (std::size_t i = 0; i < b.problem.sequences.size(); ++i) {
    b.plans.push_back(plan_masking(b.problem.sequences[i], b.problem.lexicon, policy, seed * 1000 + i));
    b.inputs.push_back(apply_plan(b.problem.sequences[i], b.plans.back(), b.problem.vocab));
  }
  return b;
}

inline ModelConfig small_config(std::size_t vocab_size, std::size_t layers = 2) {
  ModelConfig c;
  c.hidden = 16;
  c.layers = layers;
  c.heads = 4;
  c.ff_dim = 32;
  c.max_positions = 64;
  c.vocab_size = vocab_size;
  c.sense_count = 45;
  return c;
}

template <typename Real>
std::vector<ForwardTrace<Real>> forward_all(const ModelParams<Real>& params, const SenseMembershipMatrix& m,
                                            const std::vector<EncodedSequence>& inputs) {
  std::vector<ForwardTrace<Real>> traces;
  for (const auto& seq : inputs) traces.push_back(forward(params, m, std::span<const TokenId>(seq.ids)));
  return traces;
}

}  // namespace senselm::testing
