#include "must/must.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "errors.hpp"
#include "infer.hpp"
#include "io.hpp"
#include "runner.hpp"

namespace {

thread_local std::string g_last_error;

int set_error(const must::MustError& e) {
  g_last_error = e.what();
  return e.is_config() ? MUST_ERR_CONFIG : MUST_ERR_RUNTIME;
}

int set_error(const std::exception& e) {
  g_last_error = e.what();
  return MUST_ERR_RUNTIME;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MUST_OK;
  } catch (const must::MustError& e) {
    return set_error(e);
  } catch (const std::exception& e) {
    return set_error(e);
  }
}

std::optional<std::string> opt_str(const char* s) {
  if (!s) return std::nullopt;
  return std::string(s);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename T>
void require(const T* p, const char* what) {
  if (!p) must::fail(must::Errc::config, std::string(what) + " must not be NULL");
}

}  // namespace

struct must_bundle {
  must::DatasetBundle bundle;
};

struct must_model {
  must::MustModel model;
};

extern "C" {

const char* must_version(void) { return "0.1.0"; }

const char* must_last_error(void) { return g_last_error.c_str(); }

int must_cmd_synth(const char* config_path, const char* overrides, const char* out_dir) {
  return guarded([&] {
    require(out_dir, "out_dir");
    must::cmd_synth(opt_str(config_path), overrides ? overrides : "", out_dir);
  });
}

int must_cmd_train(const char* data_dir, const char* config_path, const char* overrides,
                   const char* out_dir) {
  return guarded([&] {
    require(data_dir, "data_dir");
    require(out_dir, "out_dir");
    must::cmd_train(data_dir, opt_str(config_path), overrides ? overrides : "", out_dir);
  });
}

int must_cmd_eval(const char* data_dir, const char* ckpt_path, const char* inference,
                  const double* alpha, const double* beta, int topk, const char* report_path,
                  const char* curve_csv) {
  return guarded([&] {
    require(data_dir, "data_dir");
    require(ckpt_path, "ckpt_path");
    require(report_path, "report_path");
    must::EvalOptions opts;
    opts.inference = inference ? inference : "must";
    if (alpha) opts.alpha = *alpha;
    if (beta) opts.beta = *beta;
    opts.topk = topk;
    std::optional<std::filesystem::path> curve;
    if (curve_csv) curve = std::filesystem::path(curve_csv);
    must::cmd_eval(data_dir, ckpt_path, opts, report_path, curve);
  });
}

int must_cmd_gradcheck(uint64_t seed, double tol, char** report_out) {
  bool all_pass = false;
  const int rc = guarded([&] {
    must::GradcheckOutcome outcome = must::cmd_gradcheck(seed, tol);
    all_pass = outcome.all_pass;
    if (report_out) *report_out = dup_string(outcome.report);
  });
  if (rc != MUST_OK) return rc;
  if (!all_pass) {
    g_last_error = "gradient check failed; see report";
    return MUST_ERR_RUNTIME;
  }
  return MUST_OK;
}

void must_string_free(char* s) { std::free(s); }

int must_bundle_load(const char* dir, must_bundle** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    auto holder = std::make_unique<must_bundle>();
    holder->bundle = must::load_bundle(dir);
    *out = holder.release();
  });
}

void must_bundle_free(must_bundle* b) { delete b; }

int must_bundle_counts(const must_bundle* b, uint32_t* n_states, uint32_t* n_objects,
                       uint32_t* n_pairs, uint64_t* n_samples) {
  return guarded([&] {
    require(b, "bundle");
    if (n_states) *n_states = static_cast<uint32_t>(b->bundle.space.n_states());
    if (n_objects) *n_objects = static_cast<uint32_t>(b->bundle.space.n_objects());
    if (n_pairs) *n_pairs = static_cast<uint32_t>(b->bundle.space.n_pairs());
    if (n_samples) *n_samples = b->bundle.samples.size();
  });
}

int must_bundle_feat_dim(const must_bundle* b, uint32_t* feat_dim) {
  return guarded([&] {
    require(b, "bundle");
    if (feat_dim) *feat_dim = static_cast<uint32_t>(b->bundle.feat_dim());
  });
}

int must_model_load(const char* ckpt_path, must_model** out) {
  return guarded([&] {
    require(ckpt_path, "ckpt_path");
    require(out, "out");
    auto holder = std::make_unique<must_model>();
    holder->model = must::load_checkpoint(ckpt_path);
    *out = holder.release();
  });
}

void must_model_free(must_model* m) { delete m; }

int must_model_dims(const must_model* m, uint32_t* feat_dim, uint32_t* embed_dim,
                    uint32_t* n_pairs) {
  return guarded([&] {
    require(m, "model");
    if (feat_dim) *feat_dim = static_cast<uint32_t>(m->model.config().feat_dim);
    if (embed_dim) *embed_dim = static_cast<uint32_t>(m->model.config().embed_dim);
    if (n_pairs) *n_pairs = static_cast<uint32_t>(m->model.space().n_pairs());
  });
}

int must_model_score(const must_model* m, const double* features, size_t n, size_t feat_dim,
                     const char* inference, const double* alpha, const double* beta,
                     double* out_scores) {
  return guarded([&] {
    require(m, "model");
    require(features, "features");
    require(out_scores, "out_scores");
    if (feat_dim != static_cast<size_t>(m->model.config().feat_dim)) {
      must::fail(must::Errc::shape, "feature dim does not match the model");
    }
    must::Tensor X = must::Tensor::matrix(
        n, feat_dim, std::vector<double>(features, features + n * feat_dim));
    must::ScoreSet scores = must::compute_scores(m->model, X);

    must::InferenceRule rule;
    const std::string name = inference ? inference : "must";
    if (name == "fixed") {
      if (!alpha || !beta) must::fail(must::Errc::config, "fixed inference requires alpha and beta");
      const double ab[2] = {*alpha, *beta};
      rule = must::InferenceRule::parse(name, ab);
    } else {
      rule = must::InferenceRule::parse(name);
    }
    must::Tensor blended = must::score_pairs(rule, scores, m->model.space());
    std::memcpy(out_scores, blended.data().data(), blended.numel() * sizeof(double));
  });
}

}  // extern "C"
