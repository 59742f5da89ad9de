#pragma once

#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "space.hpp"

namespace must {

enum class InferVariant { must, base, max, equal, fixed };

struct InferenceRule {
  InferVariant variant = InferVariant::must;
  double alpha = 0.0;  // fixed variant only
  double beta = 0.0;

  static InferenceRule parse(const std::string& name, std::span<const double> alpha_beta = {});
};

const char* variant_name(InferVariant v);

// Per-sample confidence ratio between the best state match and the best
// object match. Negative cosines carry no confidence and are floored at 0;
// a vanishing denominator falls back to 0.5.
std::vector<double> omega(const ScoreSet& scores);

// Blended candidate-pair scores for the given rule, one column per closed
// pair.
Tensor score_pairs(const InferenceRule& rule, const ScoreSet& scores,
                   const CompositionSpace& space);

// must-rule scoring with externally supplied omegas (identity tests force
// omega = 0.5 here).
Tensor score_pairs_must_with_omega(const ScoreSet& scores, const CompositionSpace& space,
                                   std::span<const double> omega_per_sample);

// Top-k pair ids per sample after adding `unseen_bias` to every unseen-pair
// column. Ties break toward the lower pair id; an infinite bias is treated
// as the limit (one split strictly dominates, ranking within each split
// unchanged).
std::vector<std::vector<PairId>> predict_topk(const Tensor& pair_scores,
                                              const CompositionSpace& space, size_t k,
                                              double unseen_bias);

void validate_scoreset(const ScoreSet& scores, const CompositionSpace& space);

}  // namespace must
