#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"
#include "space.hpp"

namespace must {

struct ModelConfig {
  int32_t feat_dim = 512;   // backbone feature width
  int32_t embed_dim = 512;  // k, the joint embedding space
  int32_t word_dim = 300;
  uint64_t init_seed = 1;
};

// fc -> ReLU -> fc, hidden width equal to the output width. trainable=true
// binds the params as graph leaves (requires a non-const owner), otherwise
// the current values enter as frozen inputs.
struct EmbeddingHead {
  Param w1, b1, w2, b2;

  EmbeddingHead() = default;
  EmbeddingHead(const std::string& name, int32_t in_dim, int32_t out_dim, Rng& rng);

  NodeId apply(Graph& g, NodeId x, bool trainable) const;
  std::vector<Param*> params();
};

// Single projection of frozen word vectors into the joint space.
struct LinearEmbedder {
  Param w, b;

  LinearEmbedder() = default;
  LinearEmbedder(const std::string& name, int32_t in_dim, int32_t out_dim, Rng& rng);

  NodeId apply(Graph& g, NodeId x, bool trainable) const;
  std::vector<Param*> params();
};

// Maps concatenated component word vectors to composition prototypes.
// Pluggable so a graph-based embedder can slot in behind the same contract.
class CompositionEmbedder {
 public:
  virtual ~CompositionEmbedder() = default;
  virtual NodeId prototypes(Graph& g, NodeId pair_inputs, bool trainable) const = 0;
  virtual std::vector<Param*> params() = 0;
  virtual std::unique_ptr<CompositionEmbedder> clone() const = 0;
};

class MlpCompositionEmbedder : public CompositionEmbedder {
 public:
  MlpCompositionEmbedder() = default;
  MlpCompositionEmbedder(int32_t in_dim, int32_t out_dim, Rng& rng);

  NodeId prototypes(Graph& g, NodeId pair_inputs, bool trainable) const override;
  std::vector<Param*> params() override;
  std::unique_ptr<CompositionEmbedder> clone() const override;

  EmbeddingHead mlp;  // same two-layer shape as the feature heads
};

struct ScoreNodes {
  NodeId d_state = -1;
  NodeId d_object = -1;
  NodeId d_pair = -1;
};

// Per-sample cosine scores against every state, object, and closed pair.
struct ScoreSet {
  Tensor d_state;   // [b, |S|]
  Tensor d_object;  // [b, |O|]
  Tensor d_pair;    // [b, |C_closed|]
};

// The MUST architecture: three feature heads into a shared k-dim space plus
// the three label embedders producing class prototypes in the same space.
class MustModel {
 public:
  MustModel() = default;
  MustModel(CompositionSpace space, Tensor word_states, Tensor word_objects, ModelConfig cfg);

  MustModel(const MustModel& o);
  MustModel& operator=(const MustModel& o);
  MustModel(MustModel&&) = default;
  MustModel& operator=(MustModel&&) = default;

  const CompositionSpace& space() const { return space_; }
  const ModelConfig& config() const { return cfg_; }
  const Tensor& word_states() const { return word_states_; }
  const Tensor& word_objects() const { return word_objects_; }

  std::vector<Param*> params();
  std::vector<const Param*> params() const;

  // Training-mode graph: leaves bound to the model's Params so backward
  // accumulates gradients. X must outlive the graph.
  ScoreNodes build_scores(Graph& g, const Tensor& X, std::span<const PairId> candidates);
  ScoreNodes build_scores_frozen(Graph& g, const Tensor& X, std::span<const PairId> candidates) const;

 private:
  ScoreNodes build_scores_impl(Graph& g, const Tensor& X, std::span<const PairId> candidates,
                               bool trainable) const;
  Tensor gather_pair_inputs(std::span<const PairId> candidates) const;

 public:
  EmbeddingHead head_state, head_object, head_pair;
  LinearEmbedder embed_state, embed_object;
  std::unique_ptr<CompositionEmbedder> embed_pair;

 private:
  CompositionSpace space_;
  ModelConfig cfg_;
  Tensor word_states_;   // [|S|, word_dim], frozen
  Tensor word_objects_;  // [|O|, word_dim], frozen
  Tensor pair_inputs_;   // [|C|, 2*word_dim], frozen concatenations
};

// Forward-only scoring; deterministic given parameters and inputs.
std::pair<Tensor, Tensor> component_scores(const MustModel& m, const Tensor& X);
Tensor composition_scores(const MustModel& m, const Tensor& X, std::span<const PairId> candidates);
ScoreSet compute_scores(const MustModel& m, const Tensor& X);

// Prototype of one composition pair in the joint space.
Tensor pair_prototype(const MustModel& m, Pair p);

}  // namespace must
