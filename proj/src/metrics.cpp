#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"

namespace must {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ScoredId {
  double score;
  PairId id;
};

// Per-sample pair scores split by seen/unseen, each ordered by
// (score desc, id asc).
struct SampleView {
  std::vector<ScoredId> seen;
  std::vector<ScoredId> unseen;
  PairId label;
  bool label_unseen;
};

void sort_desc(std::vector<ScoredId>& v) {
  std::sort(v.begin(), v.end(), [](const ScoredId& a, const ScoredId& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
}

// Walks the bias-adjusted merge of the two ordered lists and reports the
// top-k pair ids. Infinite bias is the limit ordering: one split strictly
// dominates, ranking within each split unchanged.
void merged_topk(const SampleView& sv, double bias, size_t k, std::vector<PairId>& out) {
  out.clear();
  size_t si = 0, ui = 0;
  const bool plus_inf = std::isinf(bias) && bias > 0;
  const bool minus_inf = std::isinf(bias) && bias < 0;
  while (out.size() < k && (si < sv.seen.size() || ui < sv.unseen.size())) {
    bool take_unseen;
    if (si >= sv.seen.size()) {
      take_unseen = true;
    } else if (ui >= sv.unseen.size()) {
      take_unseen = false;
    } else if (plus_inf) {
      take_unseen = true;
    } else if (minus_inf) {
      take_unseen = false;
    } else {
      const double ss = sv.seen[si].score;
      const double us = sv.unseen[ui].score + bias;
      if (ss != us) {
        take_unseen = us > ss;
      } else {
        take_unseen = sv.unseen[ui].id < sv.seen[si].id;
      }
    }
    out.push_back(take_unseen ? sv.unseen[ui++].id : sv.seen[si++].id);
  }
}

}  // namespace

double harmonic_mean(double a_seen, double a_unseen) {
  if (a_seen + a_unseen == 0.0) return 0.0;
  return 2.0 * a_seen * a_unseen / (a_seen + a_unseen);
}

SweepResult bias_sweep(const Tensor& pair_scores, std::span<const PairId> labels,
                       const CompositionSpace& space, size_t k) {
  if (pair_scores.cols() != space.n_pairs()) {
    fail(Errc::shape, "bias_sweep: score columns do not match the space");
  }
  if (pair_scores.rows() != labels.size()) {
    fail(Errc::shape, "bias_sweep: one label per score row required");
  }
  if (k < 1 || k > space.n_pairs()) fail(Errc::config, "bias_sweep: invalid top-k");
  if (space.seen_ids().empty() || space.unseen_ids().empty()) {
    fail(Errc::protocol, "bias_sweep: space must contain both seen and unseen pairs");
  }

  const size_t n = labels.size();
  std::vector<SampleView> views(n);
  size_t n_seen_labeled = 0, n_unseen_labeled = 0;
  std::vector<double> margins(n);
  for (size_t i = 0; i < n; ++i) {
    SampleView& sv = views[i];
    space.check_pair_id(labels[i]);
    sv.label = labels[i];
    sv.label_unseen = space.is_unseen(labels[i]);
    (sv.label_unseen ? n_unseen_labeled : n_seen_labeled) += 1;
    sv.seen.reserve(space.seen_ids().size());
    sv.unseen.reserve(space.unseen_ids().size());
    for (PairId pid : space.seen_ids()) sv.seen.push_back({pair_scores.at(i, pid), pid});
    for (PairId pid : space.unseen_ids()) sv.unseen.push_back({pair_scores.at(i, pid), pid});
    sort_desc(sv.seen);
    sort_desc(sv.unseen);
    margins[i] = sv.seen.front().score - sv.unseen.front().score;
  }
  if (n_unseen_labeled == 0) {
    fail(Errc::protocol, "bias_sweep: no unseen-labeled samples in the evaluation set");
  }
  if (n_seen_labeled == 0) {
    fail(Errc::protocol, "bias_sweep: no seen-labeled samples in the evaluation set");
  }

  // Operating points: the distinct per-sample margins plus the two limits.
  std::sort(margins.begin(), margins.end());
  margins.erase(std::unique(margins.begin(), margins.end()), margins.end());
  std::vector<double> biases;
  biases.reserve(margins.size() + 2);
  biases.push_back(-kInf);
  biases.insert(biases.end(), margins.begin(), margins.end());
  biases.push_back(kInf);

  SweepResult res;
  res.k = k;
  res.curve.reserve(biases.size());
  std::vector<PairId> topk;
  for (double bias : biases) {
    size_t hit_seen = 0, hit_unseen = 0;
    for (const SampleView& sv : views) {
      merged_topk(sv, bias, k, topk);
      const bool hit = std::find(topk.begin(), topk.end(), sv.label) != topk.end();
      if (hit) (sv.label_unseen ? hit_unseen : hit_seen) += 1;
    }
    CurvePoint pt;
    pt.bias = bias;
    pt.acc_seen = static_cast<double>(hit_seen) / static_cast<double>(n_seen_labeled);
    pt.acc_unseen = static_cast<double>(hit_unseen) / static_cast<double>(n_unseen_labeled);
    res.curve.push_back(pt);
  }

  for (size_t i = 0; i + 1 < res.curve.size(); ++i) {
    const CurvePoint& a = res.curve[i];
    const CurvePoint& b = res.curve[i + 1];
    res.auc += (a.acc_seen - b.acc_seen) * (a.acc_unseen + b.acc_unseen) / 2.0;
  }

  res.bias_at_best_hm = res.curve.front().bias;
  for (const CurvePoint& pt : res.curve) {
    res.best_seen = std::max(res.best_seen, pt.acc_seen);
    res.best_unseen = std::max(res.best_unseen, pt.acc_unseen);
    const double hm = harmonic_mean(pt.acc_seen, pt.acc_unseen);
    if (hm > res.best_hm) {
      res.best_hm = hm;
      res.bias_at_best_hm = pt.bias;
    }
  }

  // Component accuracies of the top-1 prediction at the best-HM bias.
  std::vector<PairId> top1(n);
  for (size_t i = 0; i < n; ++i) {
    merged_topk(views[i], res.bias_at_best_hm, 1, topk);
    top1[i] = topk.front();
  }
  std::vector<PairId> truth(labels.begin(), labels.end());
  auto [adj, obj] = component_accuracy(top1, truth, space);
  res.acc_adj = adj;
  res.acc_obj = obj;
  return res;
}

EvalReport evaluate(const Tensor& pair_scores, std::span<const PairId> labels,
                    const CompositionSpace& space, size_t max_k) {
  if (max_k < 1) fail(Errc::config, "evaluate: max_k must be >= 1");
  EvalReport report;
  for (size_t k = 1; k <= max_k; ++k) {
    report.per_k.push_back(bias_sweep(pair_scores, labels, space, k));
  }
  const SweepResult& top1 = report.per_k.front();
  report.auc = top1.auc;
  report.best_hm = top1.best_hm;
  report.best_seen = top1.best_seen;
  report.best_unseen = top1.best_unseen;
  report.acc_adj = top1.acc_adj;
  report.acc_obj = top1.acc_obj;
  report.curve = top1.curve;
  return report;
}

std::pair<double, double> component_accuracy(std::span<const PairId> predicted,
                                             std::span<const PairId> truth,
                                             const CompositionSpace& space) {
  if (predicted.size() != truth.size()) {
    fail(Errc::shape, "component_accuracy: prediction/label length mismatch");
  }
  if (predicted.empty()) return {0.0, 0.0};
  size_t state_hits = 0, object_hits = 0;
  for (size_t i = 0; i < predicted.size(); ++i) {
    const Pair p = space.pair(predicted[i]);
    const Pair t = space.pair(truth[i]);
    if (p.state == t.state) ++state_hits;
    if (p.object == t.object) ++object_hits;
  }
  const double n = static_cast<double>(predicted.size());
  return {static_cast<double>(state_hits) / n, static_cast<double>(object_hits) / n};
}

}  // namespace must
