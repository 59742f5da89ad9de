#include "train.hpp"

#include <cmath>
#include <cstdio>

#include "errors.hpp"
#include "infer.hpp"
#include "metrics.hpp"
#include "rng.hpp"

namespace must {

namespace {

Tensor gather_rows(const Tensor& m, std::span<const size_t> rows) {
  Tensor out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t d = 0; d < m.cols(); ++d) out.at(i, d) = m.at(rows[i], d);
  }
  return out;
}

// Validation sweep with the MUST inference rule at top-1.
double validation_auc(const MustModel& model, const DatasetBundle& bundle,
                      const std::vector<size_t>& val_idx, double* hm_out) {
  std::vector<size_t> feature_rows(val_idx.size());
  std::vector<PairId> labels(val_idx.size());
  for (size_t i = 0; i < val_idx.size(); ++i) {
    const Sample& s = bundle.samples[val_idx[i]];
    feature_rows[i] = static_cast<size_t>(s.feature_row);
    labels[i] = bundle.space.pair_id(s.state, s.object);
  }
  Tensor X = gather_rows(bundle.features, feature_rows);
  ScoreSet scores = compute_scores(model, X);
  Tensor blended = score_pairs(InferenceRule{InferVariant::must}, scores, bundle.space);
  SweepResult sweep = bias_sweep(blended, labels, bundle.space, 1);
  if (hm_out) *hm_out = sweep.best_hm;
  return sweep.auc;
}

}  // namespace

TrainResult train(const DatasetBundle& bundle, const TrainParams& params,
                  const LossConfig& loss_cfg) {
  if (params.epochs < 0) fail(Errc::config, "train: epochs must be >= 0");
  if (params.batch_size < 1) fail(Errc::config, "train: batch size must be >= 1");
  if (params.eval_every < 1) fail(Errc::config, "train: eval_every must be >= 1");
  if (params.patience < 1) fail(Errc::config, "train: patience must be >= 1");

  const std::vector<size_t> train_idx = bundle.split_indices(Split::train);
  std::vector<size_t> val_idx = bundle.split_indices(Split::val_seen);
  for (size_t i : bundle.split_indices(Split::val_unseen)) val_idx.push_back(i);
  if (train_idx.empty()) fail(Errc::config, "train: bundle has no train split");
  const bool can_validate = !bundle.split_indices(Split::val_unseen).empty() &&
                            !bundle.split_indices(Split::val_seen).empty();

  ModelConfig mcfg;
  mcfg.feat_dim = bundle.feat_dim();
  mcfg.embed_dim = params.embed_dim;
  mcfg.word_dim = bundle.word_dim();
  mcfg.init_seed = params.seed;
  MustModel model(bundle.space, bundle.word_states, bundle.word_objects, mcfg);

  Adam optimizer(model.params(), AdamConfig{.lr = params.lr});

  TrainResult result;
  result.model = model;
  result.best_val_auc = -1.0;
  result.best_epoch = 0;

  Rng shuffle_rng(stream_seed(params.seed, "shuffle"));
  std::vector<size_t> order(train_idx);
  int32_t evals_since_improve = 0;

  for (int32_t epoch = 1; epoch <= params.epochs; ++epoch) {
    // Seeded shuffle; the last incomplete batch is kept.
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double sum_pair = 0, sum_state = 0, sum_object = 0;
    size_t n_steps = 0;
    for (size_t start = 0; start < order.size(); start += params.batch_size) {
      const size_t end = std::min(order.size(), start + params.batch_size);
      std::vector<size_t> feature_rows;
      std::vector<Pair> label_pairs;
      feature_rows.reserve(end - start);
      for (size_t i = start; i < end; ++i) {
        const Sample& s = bundle.samples[order[i]];
        feature_rows.push_back(static_cast<size_t>(s.feature_row));
        label_pairs.push_back({s.state, s.object});
      }
      Tensor X = gather_rows(bundle.features, feature_rows);
      BatchLabels labels = BatchLabels::from_pairs(bundle.space, label_pairs);

      LossBreakdown bd;
      if (params.focal_composition) {
        // Baseline harness: focal loss on the composition head, plain CE on
        // the component heads (gamma 0), same lambda blend.
        Graph g;
        ScoreNodes scores = model.build_scores(g, X, bundle.space.seen_ids());
        LossConfig plain = loss_cfg;
        plain.gamma_components = 0.0;
        NodeId l_obj = build_loss_object(g, scores.d_object, scores.d_state, labels, bundle.space, plain);
        NodeId l_sta = build_loss_state(g, scores.d_state, scores.d_object, labels, bundle.space, plain);
        std::vector<int32_t> targets(labels.size());
        std::vector<PairId> seen_pos(bundle.space.n_pairs(), -1);
        for (size_t i = 0; i < bundle.space.seen_ids().size(); ++i) {
          seen_pos[bundle.space.seen_ids()[i]] = static_cast<PairId>(i);
        }
        for (size_t i = 0; i < labels.size(); ++i) {
          if (labels.pair[i] < 0 || seen_pos[labels.pair[i]] < 0) {
            fail(Errc::split_violation, "train: batch label is not a seen pair");
          }
          targets[i] = seen_pos[labels.pair[i]];
        }
        NodeId l_pair = build_focal_ce(g, scores.d_pair, targets,
                                       loss_cfg.effective_gamma_pair(), loss_cfg.temperature);
        NodeId total = g.add(l_pair, g.affine(g.add(l_sta, l_obj), loss_cfg.lambda, 0.0));
        g.backward(total);
        bd.total = g.value(total)[0];
        bd.l_pair = g.value(l_pair)[0];
        bd.l_state = g.value(l_sta)[0];
        bd.l_object = g.value(l_obj)[0];
      } else {
        bd = total_loss(model, X, labels, loss_cfg, /*backprop=*/true);
      }
      if (std::isnan(bd.total)) {
        fail(Errc::numerical, "train: NaN loss at epoch " + std::to_string(epoch) + " step " +
                                  std::to_string(n_steps + 1));
      }
      optimizer.step();
      sum_pair += bd.l_pair;
      sum_state += bd.l_state;
      sum_object += bd.l_object;
      ++n_steps;
    }

    HistoryRow row;
    row.epoch = epoch;
    row.l_pair = sum_pair / static_cast<double>(n_steps);
    row.l_state = sum_state / static_cast<double>(n_steps);
    row.l_object = sum_object / static_cast<double>(n_steps);

    if (can_validate && (epoch % params.eval_every == 0 || epoch == params.epochs)) {
      double hm = 0;
      const double auc = validation_auc(model, bundle, val_idx, &hm);
      row.val_auc = auc;
      row.val_hm = hm;
      if (auc > result.best_val_auc) {
        result.best_val_auc = auc;
        result.best_epoch = epoch;
        result.model = model;
        evals_since_improve = 0;
      } else {
        ++evals_since_improve;
      }
    }
    result.history.push_back(row);
    if (can_validate && evals_since_improve >= params.patience) break;
  }

  if (result.best_val_auc < 0) {
    // Never evaluated (no validation split or zero epochs): hand back the
    // latest parameters.
    result.model = model;
    result.best_val_auc = 0.0;
  }
  return result;
}

std::string history_csv(const std::vector<HistoryRow>& history) {
  std::string out = "epoch,l_pair,l_state,l_object,val_auc,val_hm\n";
  char buf[256];
  for (const HistoryRow& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g", r.epoch, r.l_pair, r.l_state,
                  r.l_object);
    out += buf;
    if (r.val_auc) {
      std::snprintf(buf, sizeof(buf), ",%.17g,%.17g\n", *r.val_auc, *r.val_hm);
      out += buf;
    } else {
      out += ",,\n";
    }
  }
  return out;
}

}  // namespace must
