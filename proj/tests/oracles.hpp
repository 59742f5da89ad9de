#pragma once

// Independent reference implementations used as test oracles. These stay
// deliberately naive (full re-scans, full sorts, per-sample scalar loops) so
// they share no code path with the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "model.hpp"
#include "space.hpp"
#include "tensor.hpp"

namespace must::test {

struct OraclePoint {
  double bias;
  double acc_seen;
  double acc_unseen;
};

struct OracleSweep {
  double auc = 0.0;
  double best_hm = 0.0;
  double best_bias = 0.0;
  std::vector<OraclePoint> curve;
};

// Brute-force bias enumeration: every distinct per-sample margin is an
// operating point; each evaluation re-scores and fully sorts all pairs.
inline OracleSweep brute_force_sweep(const Tensor& scores, const std::vector<PairId>& labels,
                                     const CompositionSpace& space, size_t k) {
  const double inf = std::numeric_limits<double>::infinity();
  const size_t n = labels.size();

  std::vector<double> biases = {-inf, inf};
  for (size_t i = 0; i < n; ++i) {
    double best_seen = -inf, best_unseen = -inf;
    for (size_t pid = 0; pid < space.n_pairs(); ++pid) {
      const double v = scores.at(i, pid);
      if (space.is_seen(static_cast<PairId>(pid))) best_seen = std::max(best_seen, v);
      else best_unseen = std::max(best_unseen, v);
    }
    biases.push_back(best_seen - best_unseen);
  }
  std::sort(biases.begin(), biases.end());
  biases.erase(std::unique(biases.begin(), biases.end()), biases.end());

  size_t n_seen = 0, n_unseen = 0;
  for (PairId l : labels) (space.is_unseen(l) ? n_unseen : n_seen) += 1;

  OracleSweep out;
  for (double bias : biases) {
    size_t hit_seen = 0, hit_unseen = 0;
    for (size_t i = 0; i < n; ++i) {
      std::vector<PairId> order(space.n_pairs());
      for (size_t pid = 0; pid < order.size(); ++pid) order[pid] = static_cast<PairId>(pid);
      std::sort(order.begin(), order.end(), [&](PairId a, PairId b) {
        const bool ua = space.is_unseen(a), ub = space.is_unseen(b);
        if (std::isinf(bias)) {
          if (ua != ub) return bias > 0 ? ua : ub;
          if (scores.at(i, a) != scores.at(i, b)) return scores.at(i, a) > scores.at(i, b);
          return a < b;
        }
        const double va = scores.at(i, a) + (ua ? bias : 0.0);
        const double vb = scores.at(i, b) + (ub ? bias : 0.0);
        if (va != vb) return va > vb;
        return a < b;
      });
      bool hit = false;
      for (size_t j = 0; j < k; ++j) hit = hit || order[j] == labels[i];
      if (hit) (space.is_unseen(labels[i]) ? hit_unseen : hit_seen) += 1;
    }
    out.curve.push_back({bias, static_cast<double>(hit_seen) / static_cast<double>(n_seen),
                         static_cast<double>(hit_unseen) / static_cast<double>(n_unseen)});
  }

  for (size_t i = 0; i + 1 < out.curve.size(); ++i) {
    out.auc += (out.curve[i].acc_seen - out.curve[i + 1].acc_seen) *
               (out.curve[i].acc_unseen + out.curve[i + 1].acc_unseen) / 2.0;
  }
  out.best_bias = out.curve.front().bias;
  for (const OraclePoint& pt : out.curve) {
    const double s = pt.acc_seen + pt.acc_unseen;
    const double hm = s == 0.0 ? 0.0 : 2.0 * pt.acc_seen * pt.acc_unseen / s;
    if (hm > out.best_hm) {
      out.best_hm = hm;
      out.best_bias = pt.bias;
    }
  }
  return out;
}

// Scalar-loop forward pass of one embedding head applied to a single row.
inline std::vector<double> naive_head_forward(const std::vector<double>& x,
                                              const EmbeddingHead& head) {
  const size_t in = head.w1.value.rows(), hid = head.w1.value.cols();
  const size_t out = head.w2.value.cols();
  std::vector<double> h(hid, 0.0);
  for (size_t j = 0; j < hid; ++j) {
    for (size_t i = 0; i < in; ++i) h[j] += x[i] * head.w1.value.at(i, j);
    h[j] += head.b1.value[j];
    if (h[j] < 0) h[j] = 0;
  }
  std::vector<double> y(out, 0.0);
  for (size_t j = 0; j < out; ++j) {
    for (size_t i = 0; i < hid; ++i) y[j] += h[i] * head.w2.value.at(i, j);
    y[j] += head.b2.value[j];
  }
  return y;
}

inline double naive_cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Plain per-sample softmax cross-entropy, no log-sum-exp tricks.
inline double naive_ce(const std::vector<double>& logits, int32_t label, double temperature) {
  double denom = 0;
  for (double v : logits) denom += std::exp(v / temperature);
  return -std::log(std::exp(logits[label] / temperature) / denom);
}

}  // namespace must::test
