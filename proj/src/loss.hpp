#pragma once

#include <optional>
#include <span>
#include <vector>

#include "model.hpp"

namespace must {

struct LossConfig {
  double gamma = 1.0;
  double lambda = 1.0;
  double temperature = 1.0;
  bool weight_detached = true;
  bool clamp_weights = true;
  // When unset both fall back to gamma; the ablation harness splits them.
  std::optional<double> gamma_components;
  std::optional<double> gamma_pair;

  double effective_gamma_components() const { return gamma_components.value_or(gamma); }
  double effective_gamma_pair() const { return gamma_pair.value_or(gamma); }
};

// Validated per-sample labels for one batch.
struct BatchLabels {
  std::vector<int32_t> state;
  std::vector<int32_t> object;
  std::vector<PairId> pair;  // -1 where (s,o) is outside the closed world

  static BatchLabels from_pairs(const CompositionSpace& space, std::span<const Pair> pairs);
  size_t size() const { return state.size(); }
};

struct LossBreakdown {
  double total = 0.0;
  double l_pair = 0.0;
  double l_state = 0.0;
  double l_object = 0.0;
  // Applied modulating weights per sample; mu is the raw product factor
  // before the gamma power.
  std::vector<double> w_state;
  std::vector<double> w_object;
  std::vector<double> mu;
};

// Externally frozen applied weights, used by the detached-mode gradient
// oracle: the finite-difference loss must keep the weights constant while
// the parameters move.
struct FixedWeights {
  std::vector<double> w_state;
  std::vector<double> w_object;
  std::vector<double> w_pair;  // mu^gamma, already powered
};

// (1 - d)^gamma with the clamping policy applied to d first.
double modulating_weight(double d, double gamma, bool clamp = true);

// Node-level builders over precomputed score nodes; each returns the scalar
// loss node and exposes the per-sample applied weight node via *weight_out.
NodeId build_loss_object(Graph& g, NodeId d_object, NodeId d_state, const BatchLabels& labels,
                         const CompositionSpace& space, const LossConfig& cfg,
                         NodeId* weight_out = nullptr, const std::vector<double>* fixed_w = nullptr);
NodeId build_loss_state(Graph& g, NodeId d_state, NodeId d_object, const BatchLabels& labels,
                        const CompositionSpace& space, const LossConfig& cfg,
                        NodeId* weight_out = nullptr, const std::vector<double>* fixed_w = nullptr);
// d_pair columns must be indexed by seen pairs in seen_ids() order.
NodeId build_loss_composition(Graph& g, NodeId d_pair_seen, NodeId d_state, NodeId d_object,
                              const BatchLabels& labels, const CompositionSpace& space,
                              const LossConfig& cfg, NodeId* weight_out = nullptr,
                              NodeId* mu_out = nullptr,
                              const std::vector<double>* fixed_w = nullptr);

struct TotalLossNodes {
  NodeId total = -1;
  NodeId l_pair = -1;
  NodeId l_state = -1;
  NodeId l_object = -1;
  NodeId w_state = -1;
  NodeId w_object = -1;
  NodeId w_pair = -1;
  NodeId mu = -1;
};

// Full blended objective over one batch; one graph, one backward pass.
TotalLossNodes build_total_loss(Graph& g, MustModel& model, const Tensor& X,
                                const BatchLabels& labels, const LossConfig& cfg,
                                const FixedWeights* fixed = nullptr);

LossBreakdown read_breakdown(const Graph& g, const TotalLossNodes& nodes);

// Convenience: build, optionally backprop, and report the breakdown.
LossBreakdown total_loss(MustModel& model, const Tensor& X, const BatchLabels& labels,
                         const LossConfig& cfg, bool backprop);

// Standard focal loss over arbitrary logits, for the baseline comparison
// harness. Gradient flows through the modulating factor.
NodeId build_focal_ce(Graph& g, NodeId logits, const std::vector<int32_t>& labels, double gamma,
                      double temperature = 1.0);
double focal_ce_baseline(const Tensor& logits, const std::vector<int32_t>& labels, double gamma,
                         Tensor* grad_logits = nullptr);

}  // namespace must
