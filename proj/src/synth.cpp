#include "synth.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "rng.hpp"

namespace must {

namespace {

void fisher_yates(std::vector<size_t>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.below(i)]);
  }
}

std::vector<double> unit_gaussian(size_t dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm = 0;
  for (double& x : v) {
    x = rng.gaussian();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// Quantize to f32 so the bundle round-trips bit-exactly through the 32-bit
// feature files.
void round_f32(Tensor& t) {
  for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

void validate(const SynthConfig& cfg) {
  if (cfg.n_states < 1 || cfg.n_objects < 1) fail(Errc::config, "synth: need >= 1 state and object");
  if (cfg.feat_dim < 1 || cfg.word_dim < 1) fail(Errc::config, "synth: dims must be >= 1");
  if (cfg.samples_per_pair < 1) fail(Errc::config, "synth: samples_per_pair must be >= 1");
  if (cfg.noise < 0) fail(Errc::config, "synth: noise must be >= 0");
  const int64_t grid = static_cast<int64_t>(cfg.n_states) * cfg.n_objects;
  if (cfg.seen_pairs < 1) fail(Errc::config, "synth: need >= 1 seen pair");
  if (cfg.unseen_pairs < 0) fail(Errc::config, "synth: unseen_pairs must be >= 0");
  if (cfg.seen_pairs + cfg.unseen_pairs > grid) {
    fail(Errc::config, "synth: seen + unseen pairs exceed the |S| x |O| grid");
  }
  if (cfg.sigma_states.size() != static_cast<size_t>(cfg.n_states)) {
    fail(Errc::config, "synth: sigma_states needs one entry per state");
  }
  if (cfg.sigma_objects.size() != static_cast<size_t>(cfg.n_objects)) {
    fail(Errc::config, "synth: sigma_objects needs one entry per object");
  }
  for (double s : cfg.sigma_states) {
    if (!(s >= 0)) fail(Errc::config, "synth: deviation scales must be >= 0");
  }
  for (double s : cfg.sigma_objects) {
    if (!(s >= 0)) fail(Errc::config, "synth: deviation scales must be >= 0");
  }
}

std::string class_name(const char* prefix, int32_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%02d", prefix, i);
  return buf;
}

}  // namespace

std::vector<double> synth_word_vector(const std::string& name, int32_t dim, uint64_t seed) {
  Rng rng(stream_seed(seed, "words:" + name));
  return unit_gaussian(static_cast<size_t>(dim), rng);
}

DatasetBundle synth_generate(const SynthConfig& cfg) {
  validate(cfg);

  // Pick the seen set first, covering every state and object before filling
  // the remaining budget at random; unseen pairs come from the rest.
  Rng pair_rng(stream_seed(cfg.seed, "pairs"));
  std::vector<size_t> cells(static_cast<size_t>(cfg.n_states) * cfg.n_objects);
  for (size_t i = 0; i < cells.size(); ++i) cells[i] = i;
  fisher_yates(cells, pair_rng);

  std::vector<bool> state_covered(cfg.n_states, false), object_covered(cfg.n_objects, false);
  std::vector<Pair> seen, rest;
  for (size_t cell : cells) {
    const int32_t s = static_cast<int32_t>(cell / cfg.n_objects);
    const int32_t o = static_cast<int32_t>(cell % cfg.n_objects);
    if (static_cast<int32_t>(seen.size()) < cfg.seen_pairs &&
        (!state_covered[s] || !object_covered[o])) {
      seen.push_back({s, o});
      state_covered[s] = object_covered[o] = true;
    } else {
      rest.push_back({s, o});
    }
  }
  for (const Pair& p : rest) {
    if (static_cast<int32_t>(seen.size()) >= cfg.seen_pairs) break;
    seen.push_back(p);
  }
  std::vector<Pair> unseen;
  for (const Pair& p : rest) {
    if (static_cast<int32_t>(unseen.size()) >= cfg.unseen_pairs) break;
    if (std::find(seen.begin(), seen.end(), p) == seen.end()) unseen.push_back(p);
  }
  if (static_cast<int32_t>(unseen.size()) < cfg.unseen_pairs) {
    fail(Errc::config, "synth: not enough grid cells left for the unseen pairs");
  }
  for (const Pair& p : unseen) {
    if (!state_covered[p.state] || !object_covered[p.object]) {
      fail(Errc::split_violation, "synth: unseen pair uses a component absent from all seen pairs");
    }
  }

  std::vector<std::string> state_names, object_names;
  for (int32_t i = 0; i < cfg.n_states; ++i) state_names.push_back(class_name("s", i));
  for (int32_t i = 0; i < cfg.n_objects; ++i) object_names.push_back(class_name("o", i));
  CompositionSpace space = CompositionSpace::build(state_names, object_names, seen, unseen);

  DatasetBundle bundle;
  bundle.word_states = Tensor(cfg.n_states, cfg.word_dim);
  for (int32_t i = 0; i < cfg.n_states; ++i) {
    auto w = synth_word_vector(state_names[i], cfg.word_dim, cfg.seed);
    for (int32_t d = 0; d < cfg.word_dim; ++d) bundle.word_states.at(i, d) = w[d];
  }
  bundle.word_objects = Tensor(cfg.n_objects, cfg.word_dim);
  for (int32_t i = 0; i < cfg.n_objects; ++i) {
    auto w = synth_word_vector(object_names[i], cfg.word_dim, cfg.seed);
    for (int32_t d = 0; d < cfg.word_dim; ++d) bundle.word_objects.at(i, d) = w[d];
  }
  round_f32(bundle.word_states);
  round_f32(bundle.word_objects);

  // Class prototypes and the fixed per-pair perturbations.
  Rng proto_rng(stream_seed(cfg.seed, "prototypes"));
  std::vector<std::vector<double>> proto_s(cfg.n_states), proto_o(cfg.n_objects);
  for (auto& p : proto_s) p = unit_gaussian(cfg.feat_dim, proto_rng);
  for (auto& p : proto_o) p = unit_gaussian(cfg.feat_dim, proto_rng);

  Rng dev_rng(stream_seed(cfg.seed, "pair-deviation"));
  const size_t n_pairs = space.n_pairs();
  std::vector<std::vector<double>> eps_s(n_pairs), eps_o(n_pairs);
  for (size_t pid = 0; pid < n_pairs; ++pid) {
    eps_s[pid] = unit_gaussian(cfg.feat_dim, dev_rng);
    eps_o[pid] = unit_gaussian(cfg.feat_dim, dev_rng);
  }

  Rng noise_rng(stream_seed(cfg.seed, "sample-noise"));
  const size_t spp = static_cast<size_t>(cfg.samples_per_pair);
  bundle.features = Tensor(n_pairs * spp, cfg.feat_dim);
  bundle.samples.reserve(n_pairs * spp);

  // Seen-pair samples split train / val_seen / test_seen; unseen pairs
  // alternate between validation and test wholesale, matching the
  // pair-level unseen splits of the real benchmarks.
  const size_t n_val = std::max<size_t>(1, spp / 6);
  const size_t n_test = std::max<size_t>(1, spp / 6);
  if (n_val + n_test >= spp) {
    fail(Errc::config, "synth: samples_per_pair too small to carve out val/test");
  }

  size_t unseen_rank = 0;
  size_t row = 0;
  for (size_t pid = 0; pid < n_pairs; ++pid) {
    const Pair p = space.pairs()[pid];
    const bool pair_seen = space.is_seen(static_cast<PairId>(pid));
    std::vector<double> base(cfg.feat_dim);
    double norm = 0;
    for (int32_t d = 0; d < cfg.feat_dim; ++d) {
      base[d] = proto_s[p.state][d] + cfg.sigma_states[p.state] * eps_s[pid][d] +
                proto_o[p.object][d] + cfg.sigma_objects[p.object] * eps_o[pid][d];
      norm += base[d] * base[d];
    }
    norm = std::sqrt(norm);
    if (norm < 1e-9) fail(Errc::numerical, "synth: degenerate pair direction");
    for (double& v : base) v /= norm;

    Split unseen_split = (unseen_rank % 2 == 0) ? Split::val_unseen : Split::test_unseen;
    if (!pair_seen) ++unseen_rank;

    for (size_t j = 0; j < spp; ++j, ++row) {
      for (int32_t d = 0; d < cfg.feat_dim; ++d) {
        bundle.features.at(row, d) = base[d] + cfg.noise * noise_rng.gaussian();
      }
      Sample smp;
      smp.feature_row = static_cast<int64_t>(row);
      smp.state = p.state;
      smp.object = p.object;
      if (pair_seen) {
        if (j < spp - n_val - n_test) smp.split = Split::train;
        else if (j < spp - n_test) smp.split = Split::val_seen;
        else smp.split = Split::test_seen;
      } else {
        smp.split = unseen_split;
      }
      bundle.samples.push_back(smp);
    }
  }
  round_f32(bundle.features);
  bundle.space = std::move(space);
  return bundle;
}

}  // namespace must
