#pragma once

#include <span>
#include <vector>

#include "space.hpp"
#include "tensor.hpp"

namespace must {

struct CurvePoint {
  double bias = 0.0;
  double acc_seen = 0.0;
  double acc_unseen = 0.0;
};

// One calibration-bias sweep at a fixed top-k.
struct SweepResult {
  size_t k = 1;
  double auc = 0.0;
  double best_hm = 0.0;
  double best_seen = 0.0;
  double best_unseen = 0.0;
  double bias_at_best_hm = 0.0;
  double acc_adj = 0.0;  // state accuracy of top-1 predictions at the best-HM bias
  double acc_obj = 0.0;
  std::vector<CurvePoint> curve;  // sorted by bias, sentinels included
};

struct EvalReport {
  std::vector<SweepResult> per_k;  // k = 1..max_k
  // Top-1 headline numbers.
  double auc = 0.0;
  double best_hm = 0.0;
  double best_seen = 0.0;
  double best_unseen = 0.0;
  double acc_adj = 0.0;
  double acc_obj = 0.0;
  std::vector<CurvePoint> curve;
};

double harmonic_mean(double a_seen, double a_unseen);

// The generalized-CZSL protocol: candidate biases are the per-sample margins
// between the best seen-pair and best unseen-pair score (plus +-inf
// sentinels); each bias yields (A_seen, A_unseen) at top-k and the AUC is
// the trapezoidal area under that curve.
SweepResult bias_sweep(const Tensor& pair_scores, std::span<const PairId> labels,
                       const CompositionSpace& space, size_t k);

EvalReport evaluate(const Tensor& pair_scores, std::span<const PairId> labels,
                    const CompositionSpace& space, size_t max_k);

// Fraction of predictions matching on the state / the object component.
std::pair<double, double> component_accuracy(std::span<const PairId> predicted,
                                             std::span<const PairId> truth,
                                             const CompositionSpace& space);

}  // namespace must
