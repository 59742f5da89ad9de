// Exercises the shared-library surface the CLI is built on.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <string>
#include <vector>

#include "io.hpp"
#include "infer.hpp"
#include "must/must.h"
#include "testutil.hpp"

namespace {

const char* kTinyRun =
    "profile = synth\n"
    "seed = 5\n"
    "embed_dim = 16\n"
    "epochs = 4\n"
    "eval_every = 2\n"
    "lr = 2e-3\n"
    "synth_states = 6\n"
    "synth_objects = 5\n"
    "synth_seen_pairs = 15\n"
    "synth_unseen_pairs = 4\n"
    "synth_samples_per_pair = 10\n"
    "synth_feat_dim = 16\n"
    "synth_word_dim = 8\n"
    "synth_sigma_states = 0.4\n"
    "synth_sigma_objects = 0.2\n";

}  // namespace

TEST_CASE("version and error state") {
  CHECK(std::strlen(must_version()) > 0);
  CHECK(must_last_error() != nullptr);
}

TEST_CASE("full command round-trip through the C API") {
  must::test::TempDir dir("capi");
  const std::string data = (dir.path() / "data").string();
  const std::string run = (dir.path() / "run").string();

  REQUIRE(must_cmd_synth(nullptr, kTinyRun, data.c_str()) == MUST_OK);

  must_bundle* bundle = nullptr;
  REQUIRE(must_bundle_load(data.c_str(), &bundle) == MUST_OK);
  uint32_t ns = 0, no = 0, np = 0, fd = 0;
  uint64_t n_samples = 0;
  CHECK(must_bundle_counts(bundle, &ns, &no, &np, &n_samples) == MUST_OK);
  CHECK(ns == 6);
  CHECK(no == 5);
  CHECK(np == 19);
  CHECK(n_samples == 190);
  CHECK(must_bundle_feat_dim(bundle, &fd) == MUST_OK);
  CHECK(fd == 16);
  must_bundle_free(bundle);

  REQUIRE(must_cmd_train(data.c_str(), nullptr, kTinyRun, run.c_str()) == MUST_OK);

  must_model* model = nullptr;
  const std::string ckpt = run + "/checkpoint.must";
  REQUIRE(must_model_load(ckpt.c_str(), &model) == MUST_OK);
  uint32_t feat = 0, embed = 0, pairs = 0;
  CHECK(must_model_dims(model, &feat, &embed, &pairs) == MUST_OK);
  CHECK(feat == 16);
  CHECK(embed == 16);
  CHECK(pairs == 19);

  // Scores through the C surface equal the in-process core path.
  must::DatasetBundle core_bundle = must::load_bundle(data);
  must::MustModel core_model = must::load_checkpoint(ckpt);
  const size_t n = 7;
  std::vector<double> feats;
  for (size_t i = 0; i < n; ++i) {
    for (size_t d = 0; d < core_bundle.features.cols(); ++d) {
      feats.push_back(core_bundle.features.at(i, d));
    }
  }
  std::vector<double> out(n * pairs);
  REQUIRE(must_model_score(model, feats.data(), n, feat, "must", nullptr, nullptr, out.data()) ==
          MUST_OK);
  must::Tensor X = must::Tensor::matrix(n, feat, feats);
  must::ScoreSet scores = must::compute_scores(core_model, X);
  must::Tensor blended =
      must::score_pairs(must::InferenceRule{must::InferVariant::must}, scores, core_model.space());
  for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == blended.data()[i]);

  // fixed without alpha/beta is a config error with a message.
  CHECK(must_model_score(model, feats.data(), n, feat, "fixed", nullptr, nullptr, out.data()) ==
        MUST_ERR_CONFIG);
  CHECK(std::strlen(must_last_error()) > 0);
  must_model_free(model);

  const std::string report = (dir.path() / "report.txt").string();
  REQUIRE(must_cmd_eval(data.c_str(), ckpt.c_str(), "must", nullptr, nullptr, 2, report.c_str(),
                        nullptr) == MUST_OK);
  CHECK(must::test::read_bytes(report).find("must 1 ") != std::string::npos);
}

TEST_CASE("config problems map to the config error code") {
  must::test::TempDir dir("capi_err");
  const std::string out = (dir.path() / "x").string();
  CHECK(must_cmd_synth(nullptr, "bad_key = 1\n", out.c_str()) == MUST_ERR_CONFIG);
  CHECK(std::string(must_last_error()).find("bad_key") != std::string::npos);
  CHECK(must_cmd_synth(nullptr, nullptr, nullptr) == MUST_ERR_CONFIG);

  // Missing bundle directory is a format problem -> config exit class.
  CHECK(must_cmd_train((dir.path() / "missing").string().c_str(), nullptr, "",
                       out.c_str()) == MUST_ERR_CONFIG);
}

TEST_CASE("gradcheck over the C API") {
  char* report = nullptr;
  CHECK(must_cmd_gradcheck(3, 1e-4, &report) == MUST_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("overall=pass") != std::string::npos);
  must_string_free(report);

  char* report2 = nullptr;
  CHECK(must_cmd_gradcheck(3, 0.0, &report2) == MUST_ERR_RUNTIME);
  REQUIRE(report2 != nullptr);
  CHECK(std::string(report2).find("FAIL") != std::string::npos);
  must_string_free(report2);

  CHECK(must_cmd_gradcheck(3, -1.0, nullptr) == MUST_ERR_CONFIG);
}
