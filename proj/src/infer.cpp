#include "infer.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace must {

namespace {
constexpr double kOmegaFloor = 1e-9;
}

const char* variant_name(InferVariant v) {
  switch (v) {
    case InferVariant::must: return "must";
    case InferVariant::base: return "base";
    case InferVariant::max: return "max";
    case InferVariant::equal: return "equal";
    case InferVariant::fixed: return "fixed";
  }
  return "?";
}

InferenceRule InferenceRule::parse(const std::string& name, std::span<const double> alpha_beta) {
  InferenceRule r;
  if (name == "must") {
    r.variant = InferVariant::must;
  } else if (name == "base") {
    r.variant = InferVariant::base;
  } else if (name == "max") {
    r.variant = InferVariant::max;
  } else if (name == "equal") {
    r.variant = InferVariant::equal;
  } else if (name == "fixed") {
    r.variant = InferVariant::fixed;
    if (alpha_beta.size() != 2) {
      fail(Errc::config, "fixed inference requires alpha and beta");
    }
    r.alpha = alpha_beta[0];
    r.beta = alpha_beta[1];
    if (r.alpha < 0 || r.beta < 0) fail(Errc::config, "fixed inference: alpha/beta must be >= 0");
  } else {
    fail(Errc::config, "unknown inference variant '" + name + "'");
  }
  return r;
}

void validate_scoreset(const ScoreSet& scores, const CompositionSpace& space) {
  const size_t b = scores.d_state.rows();
  if (scores.d_object.rows() != b || scores.d_pair.rows() != b) {
    fail(Errc::shape, "score set: inconsistent batch sizes");
  }
  if (scores.d_state.cols() != static_cast<size_t>(space.n_states()) ||
      scores.d_object.cols() != static_cast<size_t>(space.n_objects()) ||
      scores.d_pair.cols() != space.n_pairs()) {
    fail(Errc::shape, "score set: column counts do not match the space");
  }
  constexpr double lim = 1.0 + 1e-9;
  for (const Tensor* t : {&scores.d_state, &scores.d_object, &scores.d_pair}) {
    for (double v : t->data()) {
      if (!(v >= -lim && v <= lim)) fail(Errc::numerical, "score set: entry outside [-1, 1]");
    }
  }
}

std::vector<double> omega(const ScoreSet& scores) {
  const size_t b = scores.d_state.rows();
  std::vector<double> out(b);
  for (size_t i = 0; i < b; ++i) {
    double ms = 0.0, mo = 0.0;
    for (size_t s = 0; s < scores.d_state.cols(); ++s) {
      ms = std::max(ms, scores.d_state.at(i, s));
    }
    for (size_t o = 0; o < scores.d_object.cols(); ++o) {
      mo = std::max(mo, scores.d_object.at(i, o));
    }
    out[i] = (ms + mo < kOmegaFloor) ? 0.5 : ms / (ms + mo);
  }
  return out;
}

Tensor score_pairs_must_with_omega(const ScoreSet& scores, const CompositionSpace& space,
                                   std::span<const double> omega_per_sample) {
  validate_scoreset(scores, space);
  const size_t b = scores.d_state.rows();
  if (omega_per_sample.size() != b) fail(Errc::shape, "omega length != batch size");
  Tensor out(b, space.n_pairs());
  for (size_t i = 0; i < b; ++i) {
    const double w = omega_per_sample[i];
    for (size_t pid = 0; pid < space.n_pairs(); ++pid) {
      const Pair p = space.pairs()[pid];
      out.at(i, pid) = w * scores.d_state.at(i, p.state) +
                       (1.0 - w) * scores.d_object.at(i, p.object) + scores.d_pair.at(i, pid);
    }
  }
  return out;
}

Tensor score_pairs(const InferenceRule& rule, const ScoreSet& scores,
                   const CompositionSpace& space) {
  validate_scoreset(scores, space);
  if (rule.variant == InferVariant::must) {
    return score_pairs_must_with_omega(scores, space, omega(scores));
  }
  const size_t b = scores.d_state.rows();
  Tensor out(b, space.n_pairs());
  for (size_t i = 0; i < b; ++i) {
    for (size_t pid = 0; pid < space.n_pairs(); ++pid) {
      const Pair p = space.pairs()[pid];
      const double ds = scores.d_state.at(i, p.state);
      const double dobj = scores.d_object.at(i, p.object);
      const double dp = scores.d_pair.at(i, pid);
      switch (rule.variant) {
        case InferVariant::base:
          out.at(i, pid) = dp;
          break;
        case InferVariant::max:
          out.at(i, pid) = std::max(ds, dobj) + dp;
          break;
        case InferVariant::equal:
          out.at(i, pid) = 0.5 * (ds + dobj) + dp;
          break;
        case InferVariant::fixed:
          out.at(i, pid) = rule.alpha * ds + rule.beta * dobj + dp;
          break;
        case InferVariant::must:
          break;  // handled above
      }
    }
  }
  return out;
}

std::vector<std::vector<PairId>> predict_topk(const Tensor& pair_scores,
                                              const CompositionSpace& space, size_t k,
                                              double unseen_bias) {
  if (pair_scores.cols() != space.n_pairs()) {
    fail(Errc::shape, "pair score columns do not match the space");
  }
  if (k < 1 || k > space.n_pairs()) {
    fail(Errc::config, "top-k with k=" + std::to_string(k) + " outside [1, |C_closed|]");
  }
  const size_t b = pair_scores.rows();
  const bool plus_inf = std::isinf(unseen_bias) && unseen_bias > 0;
  const bool minus_inf = std::isinf(unseen_bias) && unseen_bias < 0;

  std::vector<std::vector<PairId>> out(b);
  std::vector<PairId> order(space.n_pairs());
  for (size_t i = 0; i < b; ++i) {
    for (size_t pid = 0; pid < order.size(); ++pid) order[pid] = static_cast<PairId>(pid);
    auto better = [&](PairId a, PairId c) {
      const bool ua = space.is_unseen(a), uc = space.is_unseen(c);
      if (plus_inf || minus_inf) {
        if (ua != uc) return plus_inf ? ua : !ua;
        const double sa = pair_scores.at(i, a), sc = pair_scores.at(i, c);
        if (sa != sc) return sa > sc;
        return a < c;
      }
      const double sa = pair_scores.at(i, a) + (ua ? unseen_bias : 0.0);
      const double sc = pair_scores.at(i, c) + (uc ? unseen_bias : 0.0);
      if (sa != sc) return sa > sc;
      return a < c;
    };
    std::partial_sort(order.begin(), order.begin() + k, order.end(), better);
    out[i].assign(order.begin(), order.begin() + k);
  }
  return out;
}

}  // namespace must
