#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "errors.hpp"
#include "gradcheck.hpp"
#include "loss.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace must;

namespace {

struct ScoreFixture {
  CompositionSpace space = test::tiny_space();
  Tensor d_state;
  Tensor d_object;
  Tensor d_pair;  // columns = seen pairs
  BatchLabels labels;

  explicit ScoreFixture(uint64_t seed, size_t batch = 6) {
    Rng rng(seed);
    d_state = test::random_tensor(batch, space.n_states(), rng);
    d_object = test::random_tensor(batch, space.n_objects(), rng);
    d_pair = test::random_tensor(batch, space.seen_ids().size(), rng);
    std::vector<Pair> pairs;
    for (size_t i = 0; i < batch; ++i) {
      pairs.push_back(space.pairs()[space.seen_ids()[rng.below(space.seen_ids().size())]]);
    }
    labels = BatchLabels::from_pairs(space, pairs);
  }
};

double eval_loss_object(const ScoreFixture& f, const LossConfig& cfg) {
  Graph g;
  NodeId loss = build_loss_object(g, g.input_view(&f.d_object), g.input_view(&f.d_state), f.labels,
                                  f.space, cfg);
  return g.value(loss)[0];
}

}  // namespace

TEST_CASE("modulating weight examples") {
  CHECK(modulating_weight(1.0, 2.5) == 0.0);
  CHECK(modulating_weight(0.3, 0.0) == 1.0);
  CHECK(modulating_weight(-0.7, 0.0) == 1.0);
  CHECK(modulating_weight(0.5, 1.0) == doctest::Approx(0.5));
  // Clamping: negative similarity carries weight 1, not > 1.
  CHECK(modulating_weight(-0.5, 2.0, true) == 1.0);
  // Unclamped mode keeps the raw base.
  CHECK(modulating_weight(-0.5, 2.0, false) == doctest::Approx(2.25));
  CHECK_THROWS_AS(modulating_weight(std::nan(""), 1.0), MustError);
  CHECK_THROWS_AS(modulating_weight(0.5, -1.0), MustError);
}

TEST_CASE("weight monotone non-increasing in the similarity") {
  for (double gamma : {0.5, 1.0, 2.0, 6.0}) {
    double prev = 2.0;
    for (double d = -1.0; d <= 1.0; d += 0.01) {
      const double w = modulating_weight(d, gamma, true);
      CHECK(w <= prev + 1e-15);
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
      prev = w;
    }
  }
}

TEST_CASE("gamma 0 reduces every loss to plain cross-entropy") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    ScoreFixture f(seed);
    LossConfig cfg;
    cfg.gamma = 0.0;
    Graph g;
    NodeId lo = build_loss_object(g, g.input_view(&f.d_object), g.input_view(&f.d_state), f.labels,
                                  f.space, cfg);
    NodeId ls = build_loss_state(g, g.input_view(&f.d_state), g.input_view(&f.d_object), f.labels,
                                 f.space, cfg);
    NodeId lp = build_loss_composition(g, g.input_view(&f.d_pair), g.input_view(&f.d_state),
                                       g.input_view(&f.d_object), f.labels, f.space, cfg);

    std::vector<PairId> seen_pos(f.space.n_pairs(), -1);
    for (size_t i = 0; i < f.space.seen_ids().size(); ++i) {
      seen_pos[f.space.seen_ids()[i]] = static_cast<PairId>(i);
    }
    double ce_o = 0, ce_s = 0, ce_p = 0;
    for (size_t i = 0; i < f.labels.size(); ++i) {
      std::vector<double> lo_row(f.d_object.cols()), ls_row(f.d_state.cols()),
          lp_row(f.d_pair.cols());
      for (size_t j = 0; j < lo_row.size(); ++j) lo_row[j] = f.d_object.at(i, j);
      for (size_t j = 0; j < ls_row.size(); ++j) ls_row[j] = f.d_state.at(i, j);
      for (size_t j = 0; j < lp_row.size(); ++j) lp_row[j] = f.d_pair.at(i, j);
      ce_o += test::naive_ce(lo_row, f.labels.object[i], cfg.temperature);
      ce_s += test::naive_ce(ls_row, f.labels.state[i], cfg.temperature);
      ce_p += test::naive_ce(lp_row, seen_pos[f.labels.pair[i]], cfg.temperature);
    }
    const double n = static_cast<double>(f.labels.size());
    CHECK(std::fabs(g.value(lo)[0] - ce_o / n) < 1e-12);
    CHECK(std::fabs(g.value(ls)[0] - ce_s / n) < 1e-12);
    CHECK(std::fabs(g.value(lp)[0] - ce_p / n) < 1e-12);
  }
}

TEST_CASE("object loss matches the per-sample oracle") {
  for (uint64_t seed = 30; seed < 40; ++seed) {
    ScoreFixture f(seed);
    for (bool clamp : {true, false}) {
      LossConfig cfg;
      cfg.gamma = 1.7;
      cfg.clamp_weights = clamp;
      double expect = 0;
      for (size_t i = 0; i < f.labels.size(); ++i) {
        const double psi =
            static_cast<double>(f.space.psi(f.labels.state[i], f.labels.object[i]));
        const double dbar = psi * f.d_state.at(i, f.labels.state[i]);
        const double w = modulating_weight(dbar, cfg.gamma, clamp);
        std::vector<double> row(f.d_object.cols());
        for (size_t j = 0; j < row.size(); ++j) row[j] = f.d_object.at(i, j);
        expect += w * test::naive_ce(row, f.labels.object[i], cfg.temperature);
      }
      expect /= static_cast<double>(f.labels.size());
      CHECK(std::fabs(eval_loss_object(f, cfg) - expect) < 1e-12);
    }
  }
}

TEST_CASE("fully matched counterpart removes the sample") {
  ScoreFixture f(50, 2);
  f.d_state.at(0, f.labels.state[0]) = 1.0;  // ground-truth state similarity = 1
  LossConfig cfg;
  cfg.gamma = 2.0;
  Graph g;
  NodeId w_node = -1;
  NodeId loss = build_loss_object(g, g.input_view(&f.d_object), g.input_view(&f.d_state), f.labels,
                                  f.space, cfg, &w_node);
  CHECK(g.value(w_node)[0] == 0.0);
  std::vector<double> row(f.d_object.cols());
  for (size_t j = 0; j < row.size(); ++j) row[j] = f.d_object.at(1, j);
  const double psi1 = static_cast<double>(f.space.psi(f.labels.state[1], f.labels.object[1]));
  const double w1 =
      modulating_weight(psi1 * f.d_state.at(1, f.labels.state[1]), cfg.gamma, true);
  const double expect = w1 * test::naive_ce(row, f.labels.object[1], cfg.temperature) / 2.0;
  CHECK(std::fabs(g.value(loss)[0] - expect) < 1e-12);
}

TEST_CASE("state loss is the exact mirror of the object loss") {
  ScoreFixture f(60);
  LossConfig cfg;
  cfg.gamma = 1.3;

  // Mirror the whole setup: swap the roles of states and objects.
  std::vector<Pair> seen_m, unseen_m;
  for (PairId pid : f.space.seen_ids()) {
    const Pair p = f.space.pairs()[pid];
    seen_m.push_back({p.object, p.state});
  }
  for (PairId pid : f.space.unseen_ids()) {
    const Pair p = f.space.pairs()[pid];
    unseen_m.push_back({p.object, p.state});
  }
  CompositionSpace mirrored = CompositionSpace::build(f.space.object_names(),
                                                      f.space.state_names(), seen_m, unseen_m);
  std::vector<Pair> mirrored_labels;
  for (size_t i = 0; i < f.labels.size(); ++i) {
    mirrored_labels.push_back({f.labels.object[i], f.labels.state[i]});
  }
  BatchLabels ml = BatchLabels::from_pairs(mirrored, mirrored_labels);

  Graph g;
  NodeId a = build_loss_state(g, g.input_view(&f.d_object), g.input_view(&f.d_state), ml, mirrored,
                              cfg);
  NodeId b = build_loss_object(g, g.input_view(&f.d_object), g.input_view(&f.d_state), f.labels,
                               f.space, cfg);
  CHECK(g.value(a)[0] == g.value(b)[0]);
}

TEST_CASE("composition loss weight is the product of the component factors") {
  ScoreFixture f(70, 3);
  LossConfig cfg;
  cfg.gamma = 1.0;

  // Zero similarities: plain CE weight.
  f.d_state.fill(0.0);
  f.d_object.fill(0.0);
  {
    Graph g;
    NodeId w = -1, mu = -1;
    build_loss_composition(g, g.input_view(&f.d_pair), g.input_view(&f.d_state),
                           g.input_view(&f.d_object), f.labels, f.space, cfg, &w, &mu);
    for (double v : g.value(w).data()) CHECK(v == 1.0);
  }
  // One component fully matched: sample masked out.
  f.d_state.at(0, f.labels.state[0]) = 1.0;
  {
    Graph g;
    NodeId w = -1;
    build_loss_composition(g, g.input_view(&f.d_pair), g.input_view(&f.d_state),
                           g.input_view(&f.d_object), f.labels, f.space, cfg, &w);
    CHECK(g.value(w)[0] == 0.0);
  }
  // Both at 0.5 with gamma 1: weight (0.5)(0.5) = 0.25.
  f.d_state.at(1, f.labels.state[1]) = 0.5;
  f.d_object.at(1, f.labels.object[1]) = 0.5;
  {
    Graph g;
    NodeId w = -1;
    build_loss_composition(g, g.input_view(&f.d_pair), g.input_view(&f.d_state),
                           g.input_view(&f.d_object), f.labels, f.space, cfg, &w);
    CHECK(g.value(w)[1] == doctest::Approx(0.25));
  }
}

TEST_CASE("composition loss rejects unseen labels") {
  ScoreFixture f(80, 2);
  const PairId unseen = f.space.unseen_ids()[0];
  std::vector<Pair> pairs = {f.space.pairs()[unseen], f.space.pairs()[f.space.seen_ids()[0]]};
  BatchLabels labels = BatchLabels::from_pairs(f.space, pairs);
  Graph g;
  try {
    build_loss_composition(g, g.input_view(&f.d_pair), g.input_view(&f.d_state),
                           g.input_view(&f.d_object), labels, f.space, LossConfig{});
    FAIL("expected SplitViolation");
  } catch (const MustError& e) {
    CHECK(e.code() == Errc::split_violation);
  }
}

TEST_CASE("psi gate keeps the weight valid for non-seen labels in component losses") {
  ScoreFixture f(85, 1);
  const PairId unseen = f.space.unseen_ids()[0];
  BatchLabels labels = BatchLabels::from_pairs(f.space, std::vector<Pair>{f.space.pairs()[unseen]});
  LossConfig cfg;
  cfg.gamma = 3.0;
  Graph g;
  NodeId w = -1;
  build_loss_object(g, g.input_view(&f.d_object), g.input_view(&f.d_state), labels, f.space, cfg,
                    &w);
  // psi = 0 makes dbar = 0 and the weight exactly 1.
  CHECK(g.value(w)[0] == 1.0);
}

TEST_CASE("weights stay in [0, 1] with clamping on") {
  for (uint64_t seed = 90; seed < 95; ++seed) {
    ScoreFixture f(seed);
    LossConfig cfg;
    cfg.gamma = 2.3;
    Graph g;
    NodeId wo = -1, ws = -1, wp = -1, mu = -1;
    build_loss_object(g, g.input_view(&f.d_object), g.input_view(&f.d_state), f.labels, f.space,
                      cfg, &wo);
    build_loss_state(g, g.input_view(&f.d_state), g.input_view(&f.d_object), f.labels, f.space,
                     cfg, &ws);
    build_loss_composition(g, g.input_view(&f.d_pair), g.input_view(&f.d_state),
                           g.input_view(&f.d_object), f.labels, f.space, cfg, &wp, &mu);
    for (NodeId n : {wo, ws, wp, mu}) {
      for (double v : g.value(n).data()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("total loss: lambda scaling and breakdown identity") {
  CompositionSpace sp = test::tiny_space();
  Rng rng(100);
  Tensor ws = test::random_tensor(sp.n_states(), 6, rng);
  Tensor wo = test::random_tensor(sp.n_objects(), 6, rng);
  MustModel model(sp, ws, wo, ModelConfig{10, 8, 6, 100});
  Tensor X = test::random_tensor(5, 10, rng);
  std::vector<Pair> pairs;
  for (size_t i = 0; i < 5; ++i) {
    pairs.push_back(sp.pairs()[sp.seen_ids()[rng.below(sp.seen_ids().size())]]);
  }
  BatchLabels labels = BatchLabels::from_pairs(model.space(), pairs);

  LossConfig cfg;
  cfg.lambda = 0.0;
  LossBreakdown b0 = total_loss(model, X, labels, cfg, false);
  CHECK(b0.total == b0.l_pair);  // exact with lambda = 0

  cfg.lambda = 1.5;
  LossBreakdown b1 = total_loss(model, X, labels, cfg, false);
  CHECK(std::fabs(b1.total - (b1.l_pair + cfg.lambda * (b1.l_state + b1.l_object))) < 1e-12);
  CHECK(b1.w_state.size() == 5);
  CHECK(b1.mu.size() == 5);
}

TEST_CASE("loss gradients: detached vs frozen-weight oracle and attached mode") {
  CompositionSpace sp = test::tiny_space();
  Rng rng(110);
  Tensor wvs = test::random_tensor(sp.n_states(), 6, rng);
  Tensor wvo = test::random_tensor(sp.n_objects(), 6, rng);
  MustModel model(sp, wvs, wvo, ModelConfig{10, 8, 6, 110});
  Tensor X = test::random_tensor(4, 10, rng);
  std::vector<Pair> pairs;
  for (size_t i = 0; i < 4; ++i) {
    pairs.push_back(sp.pairs()[sp.seen_ids()[rng.below(sp.seen_ids().size())]]);
  }
  BatchLabels labels = BatchLabels::from_pairs(model.space(), pairs);
  auto params = model.params();

  LossConfig cfg;
  cfg.gamma = 1.4;
  cfg.lambda = 0.8;

  SUBCASE("detached") {
    cfg.weight_detached = true;
    for (Param* p : params) p->zero_grad();
    Graph g;
    TotalLossNodes nodes = build_total_loss(g, model, X, labels, cfg);
    g.backward(nodes.total);
    FixedWeights frozen;
    frozen.w_state = g.value(nodes.w_state).data();
    frozen.w_object = g.value(nodes.w_object).data();
    frozen.w_pair = g.value(nodes.w_pair).data();
    auto loss_fn = [&] {
      Graph gg;
      return gg.value(build_total_loss(gg, model, X, labels, cfg, &frozen).total)[0];
    };
    // The frozen-weight objective agrees with the detached graph at the base
    // point and shares its gradient.
    CHECK(std::fabs(loss_fn() - g.value(nodes.total)[0]) < 1e-14);
    GradCheckResult r = finite_diff_check(loss_fn, params, 1e-5, 1e-4);
    CHECK(r.all_pass);
  }

  SUBCASE("attached") {
    cfg.weight_detached = false;
    for (Param* p : params) p->zero_grad();
    Graph g;
    TotalLossNodes nodes = build_total_loss(g, model, X, labels, cfg);
    g.backward(nodes.total);
    auto loss_fn = [&] {
      Graph gg;
      return gg.value(build_total_loss(gg, model, X, labels, cfg).total)[0];
    };
    GradCheckResult r = finite_diff_check(loss_fn, params, 1e-5, 1e-4);
    CHECK(r.all_pass);
  }
}

TEST_CASE("focal loss basics and oracle") {
  // Single class: p_t = 1 exactly, zero loss.
  Tensor one(1, 1);
  one.at(0, 0) = 4.2;
  CHECK(focal_ce_baseline(one, {0}, 2.0) == 0.0);

  Rng rng(120);
  Tensor logits = test::random_tensor(6, 5, rng, -2.0, 2.0);
  std::vector<int32_t> labels;
  for (size_t i = 0; i < 6; ++i) labels.push_back(static_cast<int32_t>(rng.below(5)));

  // gamma 0 is plain cross-entropy.
  double ce = 0;
  for (size_t i = 0; i < 6; ++i) {
    std::vector<double> row(5);
    for (size_t j = 0; j < 5; ++j) row[j] = logits.at(i, j);
    ce += test::naive_ce(row, labels[i], 1.0);
  }
  CHECK(std::fabs(focal_ce_baseline(logits, labels, 0.0) - ce / 6.0) < 1e-12);

  // Naive per-sample focal loop.
  for (double gamma : {0.5, 2.0}) {
    double expect = 0;
    for (size_t i = 0; i < 6; ++i) {
      std::vector<double> row(5);
      double denom = 0;
      for (size_t j = 0; j < 5; ++j) {
        row[j] = logits.at(i, j);
        denom += std::exp(row[j]);
      }
      const double pt = std::exp(row[labels[i]]) / denom;
      expect += -std::pow(1.0 - pt, gamma) * std::log(pt);
    }
    CHECK(std::fabs(focal_ce_baseline(logits, labels, gamma) - expect / 6.0) < 1e-12);
  }

  // Gradient wrt the logits against central differences.
  Tensor grad;
  focal_ce_baseline(logits, labels, 2.0, &grad);
  for (size_t i = 0; i < logits.numel(); ++i) {
    Tensor bumped = logits;
    bumped[i] += 1e-6;
    const double fp = focal_ce_baseline(bumped, labels, 2.0);
    bumped[i] -= 2e-6;
    const double fm = focal_ce_baseline(bumped, labels, 2.0);
    CHECK(std::fabs(grad[i] - (fp - fm) / 2e-6) < 1e-7);
  }
}
