#include "loss.hpp"

#include <cmath>

#include "errors.hpp"

namespace must {

namespace {

// Picks the ground-truth counterpart similarity, applies the psi gate and
// the clamp policy, and raises (1 - d) to gamma. Detached by default so the
// weight acts as a per-sample constant.
NodeId build_component_weight(Graph& g, NodeId counterpart_scores,
                              const std::vector<int32_t>& counterpart_labels,
                              const std::vector<double>& psi_gate, const LossConfig& cfg,
                              double gamma) {
  NodeId d = g.gather_cols(counterpart_scores, counterpart_labels);
  NodeId gated = g.mul(d, g.input(Tensor::vector(psi_gate)));
  NodeId base = cfg.clamp_weights ? g.clamp01(gated) : gated;
  NodeId w = g.pow_const(g.affine(base, -1.0, 1.0), gamma);
  return cfg.weight_detached ? g.detach(w) : w;
}

NodeId weighted_ce(Graph& g, NodeId logits, const std::vector<int32_t>& labels, NodeId weight,
                   double temperature) {
  NodeId logp = g.log_softmax_rows(logits, temperature);
  NodeId nll = g.affine(g.gather_cols(logp, labels), -1.0, 0.0);
  return g.mean_all(g.mul(weight, nll));
}

std::vector<double> psi_vector(const CompositionSpace& space, const BatchLabels& labels) {
  std::vector<double> gate(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    gate[i] = static_cast<double>(space.psi(labels.state[i], labels.object[i]));
  }
  return gate;
}

}  // namespace

BatchLabels BatchLabels::from_pairs(const CompositionSpace& space, std::span<const Pair> pairs) {
  BatchLabels out;
  out.state.reserve(pairs.size());
  out.object.reserve(pairs.size());
  out.pair.reserve(pairs.size());
  for (const Pair& p : pairs) {
    space.check_state(p.state);
    space.check_object(p.object);
    out.state.push_back(p.state);
    out.object.push_back(p.object);
    out.pair.push_back(space.pair_id(p.state, p.object));
  }
  return out;
}

double modulating_weight(double d, double gamma, bool clamp) {
  if (std::isnan(d) || std::isnan(gamma)) fail(Errc::numerical, "modulating_weight: NaN input");
  if (gamma < 0) fail(Errc::config, "modulating_weight: gamma must be non-negative");
  double base = clamp ? (d < 0.0 ? 0.0 : (d > 1.0 ? 1.0 : d)) : d;
  if (gamma == 0.0) return 1.0;
  return std::pow(1.0 - base, gamma);
}

NodeId build_loss_object(Graph& g, NodeId d_object, NodeId d_state, const BatchLabels& labels,
                         const CompositionSpace& space, const LossConfig& cfg, NodeId* weight_out,
                         const std::vector<double>* fixed_w) {
  NodeId w = fixed_w ? g.input(Tensor::vector(*fixed_w))
                     : build_component_weight(g, d_state, labels.state, psi_vector(space, labels),
                                              cfg, cfg.effective_gamma_components());
  if (weight_out) *weight_out = w;
  return weighted_ce(g, d_object, labels.object, w, cfg.temperature);
}

NodeId build_loss_state(Graph& g, NodeId d_state, NodeId d_object, const BatchLabels& labels,
                        const CompositionSpace& space, const LossConfig& cfg, NodeId* weight_out,
                        const std::vector<double>* fixed_w) {
  NodeId w = fixed_w ? g.input(Tensor::vector(*fixed_w))
                     : build_component_weight(g, d_object, labels.object, psi_vector(space, labels),
                                              cfg, cfg.effective_gamma_components());
  if (weight_out) *weight_out = w;
  return weighted_ce(g, d_state, labels.state, w, cfg.temperature);
}

NodeId build_loss_composition(Graph& g, NodeId d_pair_seen, NodeId d_state, NodeId d_object,
                              const BatchLabels& labels, const CompositionSpace& space,
                              const LossConfig& cfg, NodeId* weight_out, NodeId* mu_out,
                              const std::vector<double>* fixed_w) {
  // Targets are positions within the seen-pair candidate list.
  std::vector<PairId> seen_pos(space.n_pairs(), -1);
  for (size_t i = 0; i < space.seen_ids().size(); ++i) seen_pos[space.seen_ids()[i]] = static_cast<PairId>(i);
  std::vector<int32_t> targets(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    const PairId pid = labels.pair[i];
    if (pid < 0 || seen_pos[pid] < 0) {
      fail(Errc::split_violation,
           "composition loss target (" + space.state_names()[labels.state[i]] + ", " +
               space.object_names()[labels.object[i]] + ") is not a seen training pair");
    }
    targets[i] = seen_pos[pid];
  }

  NodeId w;
  if (fixed_w) {
    w = g.input(Tensor::vector(*fixed_w));
    if (mu_out) *mu_out = w;
  } else {
    // psi_hat of a pair's own components is identically 1, so the gated
    // similarities reduce to the plain ground-truth picks.
    NodeId ds = g.gather_cols(d_state, labels.state);
    NodeId dob = g.gather_cols(d_object, labels.object);
    if (cfg.clamp_weights) {
      ds = g.clamp01(ds);
      dob = g.clamp01(dob);
    }
    NodeId mu = g.mul(g.affine(ds, -1.0, 1.0), g.affine(dob, -1.0, 1.0));
    if (mu_out) *mu_out = mu;
    w = g.pow_const(mu, cfg.effective_gamma_pair());
    if (cfg.weight_detached) w = g.detach(w);
  }
  if (weight_out) *weight_out = w;
  return weighted_ce(g, d_pair_seen, targets, w, cfg.temperature);
}

TotalLossNodes build_total_loss(Graph& g, MustModel& model, const Tensor& X,
                                const BatchLabels& labels, const LossConfig& cfg,
                                const FixedWeights* fixed) {
  const CompositionSpace& space = model.space();
  ScoreNodes scores = model.build_scores(g, X, space.seen_ids());

  TotalLossNodes out;
  out.l_object = build_loss_object(g, scores.d_object, scores.d_state, labels, space, cfg,
                                   &out.w_object, fixed ? &fixed->w_object : nullptr);
  out.l_state = build_loss_state(g, scores.d_state, scores.d_object, labels, space, cfg,
                                 &out.w_state, fixed ? &fixed->w_state : nullptr);
  out.l_pair = build_loss_composition(g, scores.d_pair, scores.d_state, scores.d_object, labels,
                                      space, cfg, &out.w_pair, &out.mu,
                                      fixed ? &fixed->w_pair : nullptr);
  out.total = g.add(out.l_pair, g.affine(g.add(out.l_state, out.l_object), cfg.lambda, 0.0));
  return out;
}

LossBreakdown read_breakdown(const Graph& g, const TotalLossNodes& nodes) {
  LossBreakdown b;
  b.total = g.value(nodes.total)[0];
  b.l_pair = g.value(nodes.l_pair)[0];
  b.l_state = g.value(nodes.l_state)[0];
  b.l_object = g.value(nodes.l_object)[0];
  b.w_state = g.value(nodes.w_state).data();
  b.w_object = g.value(nodes.w_object).data();
  b.mu = g.value(nodes.mu).data();
  return b;
}

LossBreakdown total_loss(MustModel& model, const Tensor& X, const BatchLabels& labels,
                         const LossConfig& cfg, bool backprop) {
  Graph g;
  TotalLossNodes nodes = build_total_loss(g, model, X, labels, cfg);
  if (backprop) g.backward(nodes.total);
  return read_breakdown(g, nodes);
}

NodeId build_focal_ce(Graph& g, NodeId logits, const std::vector<int32_t>& labels, double gamma,
                      double temperature) {
  if (gamma < 0) fail(Errc::config, "focal loss: gamma must be non-negative");
  NodeId logp = g.log_softmax_rows(logits, temperature);
  NodeId logp_t = g.gather_cols(logp, labels);
  NodeId one_minus_pt = g.affine(g.exp(logp_t), -1.0, 1.0);
  NodeId w = g.pow_const(one_minus_pt, gamma);
  NodeId nll = g.affine(logp_t, -1.0, 0.0);
  return g.mean_all(g.mul(w, nll));
}

double focal_ce_baseline(const Tensor& logits, const std::vector<int32_t>& labels, double gamma,
                         Tensor* grad_logits) {
  Graph g;
  NodeId in = g.input_view(&logits);
  NodeId loss = build_focal_ce(g, in, labels, gamma);
  if (grad_logits) {
    g.backward(loss);
    *grad_logits = g.grad(in);
  }
  return g.value(loss)[0];
}

}  // namespace must
