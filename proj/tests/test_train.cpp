#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "errors.hpp"
#include "synth.hpp"
#include "testutil.hpp"
#include "train.hpp"

using namespace must;

namespace {

DatasetBundle tiny_bundle(uint64_t seed = 1) {
  SynthConfig cfg;
  cfg.n_states = 6;
  cfg.n_objects = 5;
  cfg.seen_pairs = 15;
  cfg.unseen_pairs = 4;
  cfg.samples_per_pair = 12;
  cfg.feat_dim = 16;
  cfg.word_dim = 8;
  cfg.seed = seed;
  cfg.sigma_states.assign(cfg.n_states, 0.4);
  cfg.sigma_objects.assign(cfg.n_objects, 0.2);
  cfg.noise = 0.03;
  return synth_generate(cfg);
}

TrainParams fast_params(uint64_t seed = 1) {
  TrainParams p;
  p.epochs = 30;
  p.batch_size = 64;
  p.lr = 2e-3;
  p.eval_every = 5;
  p.patience = 50;
  p.seed = seed;
  p.embed_dim = 16;
  return p;
}

LossConfig fast_loss() {
  LossConfig cfg;
  cfg.gamma = 1.0;
  cfg.lambda = 1.0;
  cfg.temperature = 0.05;
  return cfg;
}

}  // namespace

TEST_CASE("zero epochs returns the initialized checkpoint with empty history") {
  DatasetBundle bundle = tiny_bundle();
  TrainParams p = fast_params();
  p.epochs = 0;
  TrainResult r = train(bundle, p, fast_loss());
  CHECK(r.history.empty());
  CHECK(r.best_epoch == 0);

  // Identical to a freshly initialized model.
  ModelConfig mcfg{bundle.feat_dim(), p.embed_dim, bundle.word_dim(), p.seed};
  MustModel fresh(bundle.space, bundle.word_states, bundle.word_objects, mcfg);
  auto got = r.model.params();
  auto want = fresh.params();
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < got.size(); ++i) CHECK(got[i]->value.data() == want[i]->value.data());
}

TEST_CASE("training is deterministic for a fixed seed") {
  DatasetBundle bundle = tiny_bundle(2);
  TrainParams p = fast_params(7);
  p.epochs = 8;
  TrainResult a = train(bundle, p, fast_loss());
  TrainResult b = train(bundle, p, fast_loss());
  CHECK(history_csv(a.history) == history_csv(b.history));
  auto pa = a.model.params();
  auto pb = b.model.params();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.data() == pb[i]->value.data());

  p.seed = 8;
  TrainResult c = train(bundle, p, fast_loss());
  CHECK(history_csv(a.history) != history_csv(c.history));
}

TEST_CASE("thirty epochs reduce all three loss terms") {
  DatasetBundle bundle = tiny_bundle(3);
  TrainResult r = train(bundle, fast_params(3), fast_loss());
  REQUIRE(r.history.size() >= 2);
  const HistoryRow& first = r.history.front();
  const HistoryRow& last = r.history.back();
  CHECK(last.l_pair < first.l_pair);
  CHECK(last.l_state < first.l_state);
  CHECK(last.l_object < first.l_object);
}

TEST_CASE("selected checkpoint maximizes the recorded validation AUC") {
  DatasetBundle bundle = tiny_bundle(4);
  TrainParams p = fast_params(4);
  p.eval_every = 3;
  TrainResult r = train(bundle, p, fast_loss());
  double max_auc = -1.0;
  for (const HistoryRow& row : r.history) {
    if (row.val_auc) max_auc = std::max(max_auc, *row.val_auc);
  }
  CHECK(r.best_val_auc == max_auc);
}

TEST_CASE("gamma zero trains with unit weights") {
  DatasetBundle bundle = tiny_bundle(5);
  LossConfig cfg = fast_loss();
  cfg.gamma = 0.0;

  // Spot-check one batch: the breakdown weights are identically 1.
  ModelConfig mcfg{bundle.feat_dim(), 16, bundle.word_dim(), 5};
  MustModel model(bundle.space, bundle.word_states, bundle.word_objects, mcfg);
  std::vector<Pair> pairs;
  Tensor X(8, bundle.feat_dim());
  const auto train_idx = bundle.split_indices(Split::train);
  for (size_t i = 0; i < 8; ++i) {
    const Sample& s = bundle.samples[train_idx[i]];
    pairs.push_back({s.state, s.object});
    for (size_t d = 0; d < X.cols(); ++d) X.at(i, d) = bundle.features.at(s.feature_row, d);
  }
  BatchLabels labels = BatchLabels::from_pairs(bundle.space, pairs);
  LossBreakdown bd = total_loss(model, X, labels, cfg, false);
  for (double w : bd.w_state) CHECK(w == 1.0);
  for (double w : bd.w_object) CHECK(w == 1.0);

  TrainParams p = fast_params(5);
  p.epochs = 6;
  TrainResult r = train(bundle, p, cfg);
  CHECK(r.history.size() == 6);
}

TEST_CASE("focal baseline configuration trains") {
  DatasetBundle bundle = tiny_bundle(6);
  TrainParams p = fast_params(6);
  p.epochs = 6;
  p.focal_composition = true;
  LossConfig cfg = fast_loss();
  TrainResult r = train(bundle, p, cfg);
  CHECK(r.history.size() == 6);
  CHECK(r.history.back().l_pair < r.history.front().l_pair);
}

TEST_CASE("diverging run aborts with step diagnostics") {
  DatasetBundle bundle = tiny_bundle(7);
  TrainParams p = fast_params(7);
  p.lr = 1e200;
  p.epochs = 5;
  try {
    train(bundle, p, fast_loss());
    FAIL("expected NumericalError");
  } catch (const MustError& e) {
    CHECK(e.code() == Errc::numerical);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("early stopping respects patience") {
  DatasetBundle bundle = tiny_bundle(8);
  TrainParams p = fast_params(8);
  p.epochs = 30;
  p.eval_every = 1;
  p.patience = 2;
  p.lr = 1e-9;  // effectively frozen: AUC cannot improve after the first eval
  TrainResult r = train(bundle, p, fast_loss());
  CHECK(r.history.size() < 30);
}
