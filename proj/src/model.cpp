#include "model.hpp"

#include <cmath>

#include "errors.hpp"

namespace must {

namespace {

// Kaiming-style uniform fan-in init, deterministic per rng stream.
Tensor init_weight(size_t in_dim, size_t out_dim, Rng& rng) {
  Tensor w(in_dim, out_dim);
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim));
  for (double& v : w.data()) v = rng.uniform(-bound, bound);
  return w;
}

Tensor init_bias(size_t in_dim, size_t out_dim, Rng& rng) {
  Tensor b(out_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (double& v : b.data()) v = rng.uniform(-bound, bound);
  return b;
}

NodeId param_or_input(Graph& g, const Param& p, bool trainable) {
  // Trainable leaves require a non-const owner; the const facade only ever
  // passes trainable=false.
  if (trainable) return g.param(const_cast<Param*>(&p));
  return g.input_view(&p.value);
}

}  // namespace

EmbeddingHead::EmbeddingHead(const std::string& name, int32_t in_dim, int32_t out_dim, Rng& rng)
    : w1(name + ".w1", init_weight(in_dim, out_dim, rng)),
      b1(name + ".b1", init_bias(in_dim, out_dim, rng)),
      w2(name + ".w2", init_weight(out_dim, out_dim, rng)),
      b2(name + ".b2", init_bias(out_dim, out_dim, rng)) {}

NodeId EmbeddingHead::apply(Graph& g, NodeId x, bool trainable) const {
  NodeId h = g.linear(x, param_or_input(g, w1, trainable), param_or_input(g, b1, trainable));
  h = g.relu(h);
  return g.linear(h, param_or_input(g, w2, trainable), param_or_input(g, b2, trainable));
}

std::vector<Param*> EmbeddingHead::params() { return {&w1, &b1, &w2, &b2}; }

LinearEmbedder::LinearEmbedder(const std::string& name, int32_t in_dim, int32_t out_dim, Rng& rng)
    : w(name + ".w", init_weight(in_dim, out_dim, rng)),
      b(name + ".b", init_bias(in_dim, out_dim, rng)) {}

NodeId LinearEmbedder::apply(Graph& g, NodeId x, bool trainable) const {
  return g.linear(x, param_or_input(g, w, trainable), param_or_input(g, b, trainable));
}

std::vector<Param*> LinearEmbedder::params() { return {&w, &b}; }

MlpCompositionEmbedder::MlpCompositionEmbedder(int32_t in_dim, int32_t out_dim, Rng& rng)
    : mlp("embed_pair", in_dim, out_dim, rng) {}

NodeId MlpCompositionEmbedder::prototypes(Graph& g, NodeId pair_inputs, bool trainable) const {
  return mlp.apply(g, pair_inputs, trainable);
}

std::vector<Param*> MlpCompositionEmbedder::params() { return mlp.params(); }

std::unique_ptr<CompositionEmbedder> MlpCompositionEmbedder::clone() const {
  auto c = std::make_unique<MlpCompositionEmbedder>();
  c->mlp = mlp;
  return c;
}

MustModel::MustModel(CompositionSpace space, Tensor word_states, Tensor word_objects,
                     ModelConfig cfg)
    : space_(std::move(space)),
      cfg_(cfg),
      word_states_(std::move(word_states)),
      word_objects_(std::move(word_objects)) {
  if (cfg_.feat_dim <= 0 || cfg_.embed_dim <= 0 || cfg_.word_dim <= 0) {
    fail(Errc::config, "model dimensions must be positive");
  }
  if (word_states_.rows() != static_cast<size_t>(space_.n_states()) ||
      word_states_.cols() != static_cast<size_t>(cfg_.word_dim)) {
    fail(Errc::missing_embedding, "state word-vector matrix does not cover all states");
  }
  if (word_objects_.rows() != static_cast<size_t>(space_.n_objects()) ||
      word_objects_.cols() != static_cast<size_t>(cfg_.word_dim)) {
    fail(Errc::missing_embedding, "object word-vector matrix does not cover all objects");
  }

  Rng rng(stream_seed(cfg_.init_seed, "model-init"));
  head_state = EmbeddingHead("head_state", cfg_.feat_dim, cfg_.embed_dim, rng);
  head_object = EmbeddingHead("head_object", cfg_.feat_dim, cfg_.embed_dim, rng);
  head_pair = EmbeddingHead("head_pair", cfg_.feat_dim, cfg_.embed_dim, rng);
  embed_state = LinearEmbedder("embed_state", cfg_.word_dim, cfg_.embed_dim, rng);
  embed_object = LinearEmbedder("embed_object", cfg_.word_dim, cfg_.embed_dim, rng);
  embed_pair = std::make_unique<MlpCompositionEmbedder>(2 * cfg_.word_dim, cfg_.embed_dim, rng);

  // Concatenated [w_s ; w_o] rows for every closed pair, fixed up front.
  pair_inputs_ = Tensor(space_.n_pairs(), 2 * cfg_.word_dim);
  for (size_t pid = 0; pid < space_.n_pairs(); ++pid) {
    const Pair p = space_.pairs()[pid];
    for (int32_t d = 0; d < cfg_.word_dim; ++d) {
      pair_inputs_.at(pid, d) = word_states_.at(p.state, d);
      pair_inputs_.at(pid, cfg_.word_dim + d) = word_objects_.at(p.object, d);
    }
  }
}

MustModel::MustModel(const MustModel& o)
    : head_state(o.head_state),
      head_object(o.head_object),
      head_pair(o.head_pair),
      embed_state(o.embed_state),
      embed_object(o.embed_object),
      embed_pair(o.embed_pair ? o.embed_pair->clone() : nullptr),
      space_(o.space_),
      cfg_(o.cfg_),
      word_states_(o.word_states_),
      word_objects_(o.word_objects_),
      pair_inputs_(o.pair_inputs_) {}

MustModel& MustModel::operator=(const MustModel& o) {
  if (this == &o) return *this;
  MustModel tmp(o);
  *this = std::move(tmp);
  return *this;
}

std::vector<Param*> MustModel::params() {
  std::vector<Param*> out;
  for (auto* head : {&head_state, &head_object, &head_pair}) {
    for (Param* p : head->params()) out.push_back(p);
  }
  for (Param* p : embed_state.params()) out.push_back(p);
  for (Param* p : embed_object.params()) out.push_back(p);
  for (Param* p : embed_pair->params()) out.push_back(p);
  return out;
}

std::vector<const Param*> MustModel::params() const {
  std::vector<const Param*> out;
  for (Param* p : const_cast<MustModel*>(this)->params()) out.push_back(p);
  return out;
}

Tensor MustModel::gather_pair_inputs(std::span<const PairId> candidates) const {
  Tensor out(candidates.size(), pair_inputs_.cols());
  for (size_t i = 0; i < candidates.size(); ++i) {
    space_.check_pair_id(candidates[i]);
    for (size_t d = 0; d < pair_inputs_.cols(); ++d) {
      out.at(i, d) = pair_inputs_.at(candidates[i], d);
    }
  }
  return out;
}

ScoreNodes MustModel::build_scores_impl(Graph& g, const Tensor& X,
                                        std::span<const PairId> candidates, bool trainable) const {
  if (X.cols() != static_cast<size_t>(cfg_.feat_dim)) {
    fail(Errc::shape, "input feature dim " + std::to_string(X.cols()) + " != model feat_dim " +
                          std::to_string(cfg_.feat_dim));
  }
  NodeId x = g.input_view(&X);
  ScoreNodes out;

  NodeId hs = head_state.apply(g, x, trainable);
  NodeId proto_s = embed_state.apply(g, g.input_view(&word_states_), trainable);
  out.d_state = g.cosine_rows(hs, proto_s);

  NodeId ho = head_object.apply(g, x, trainable);
  NodeId proto_o = embed_object.apply(g, g.input_view(&word_objects_), trainable);
  out.d_object = g.cosine_rows(ho, proto_o);

  if (!candidates.empty()) {
    NodeId hp = head_pair.apply(g, x, trainable);
    NodeId cand_inputs = g.input(gather_pair_inputs(candidates));
    NodeId proto_p = embed_pair->prototypes(g, cand_inputs, trainable);
    out.d_pair = g.cosine_rows(hp, proto_p);
  }
  return out;
}

ScoreNodes MustModel::build_scores(Graph& g, const Tensor& X, std::span<const PairId> candidates) {
  return build_scores_impl(g, X, candidates, true);
}

ScoreNodes MustModel::build_scores_frozen(Graph& g, const Tensor& X,
                                          std::span<const PairId> candidates) const {
  return build_scores_impl(g, X, candidates, false);
}

std::pair<Tensor, Tensor> component_scores(const MustModel& m, const Tensor& X) {
  Graph g;
  ScoreNodes n = m.build_scores_frozen(g, X, {});
  return {g.value(n.d_state), g.value(n.d_object)};
}

Tensor composition_scores(const MustModel& m, const Tensor& X, std::span<const PairId> candidates) {
  Graph g;
  ScoreNodes n = m.build_scores_frozen(g, X, candidates);
  return g.value(n.d_pair);
}

ScoreSet compute_scores(const MustModel& m, const Tensor& X) {
  std::vector<PairId> all(m.space().n_pairs());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<PairId>(i);
  Graph g;
  ScoreNodes n = m.build_scores_frozen(g, X, all);
  return {g.value(n.d_state), g.value(n.d_object), g.value(n.d_pair)};
}

Tensor pair_prototype(const MustModel& m, Pair p) {
  const CompositionSpace& sp = m.space();
  sp.check_state(p.state);
  sp.check_object(p.object);
  const int32_t dw = m.config().word_dim;
  Tensor in(static_cast<size_t>(1), 2 * dw);
  for (int32_t d = 0; d < dw; ++d) {
    in.at(0, d) = m.word_states().at(p.state, d);
    in.at(0, dw + d) = m.word_objects().at(p.object, d);
  }
  Graph g;
  NodeId proto = m.embed_pair->prototypes(g, g.input_view(&in), false);
  return g.value(proto).row(0);
}

}  // namespace must
