#pragma once

#include <cstdint>
#include <vector>

#include "io.hpp"

namespace must {

// Controls the synthetic compositional dataset. Per-class deviation scales
// model how strongly a component's appearance drifts per composition; the
// per-pair perturbations are fixed, so deviation is structural rather than
// noise.
struct SynthConfig {
  int32_t n_states = 12;
  int32_t n_objects = 10;
  int32_t seen_pairs = 60;
  int32_t unseen_pairs = 20;
  int32_t samples_per_pair = 30;
  int32_t feat_dim = 64;
  int32_t word_dim = 32;
  std::vector<double> sigma_states;   // one entry per state class
  std::vector<double> sigma_objects;  // one entry per object class
  double noise = 0.02;                // per-dimension sample noise std
  uint64_t seed = 1;
};

// Deterministic per seed. Every unseen pair is built from components that
// occur in some seen pair; when the seen budget cannot cover all components
// this throws SplitViolation.
DatasetBundle synth_generate(const SynthConfig& cfg);

// Unit word vector derived from a class name, shared by generator and docs.
std::vector<double> synth_word_vector(const std::string& name, int32_t dim, uint64_t seed);

}  // namespace must
