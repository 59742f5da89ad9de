#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "config.hpp"
#include "errors.hpp"
#include "runner.hpp"
#include "testutil.hpp"

using namespace must;

namespace {

// Tiny synth run settings shared by the end-to-end cases.
const char* kTinyRun =
    "profile = synth\n"
    "seed = 5\n"
    "embed_dim = 16\n"
    "epochs = 8\n"
    "eval_every = 4\n"
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

TEST_CASE("profiles resolve the published hyperparameters") {
  RunConfig mit = resolve_config(std::nullopt, "profile = mit-states\n");
  CHECK(mit.loss.gamma == 1.0);
  CHECK(mit.loss.lambda == 1.5);
  CHECK(mit.train.lr == 5e-5);
  CHECK(mit.train.batch_size == 128);
  CHECK(mit.embed_dim == 512);

  RunConfig zap = resolve_config(std::nullopt, "profile = ut-zappos\n");
  CHECK(zap.loss.gamma == 1.0);
  CHECK(zap.loss.lambda == 1.0);
  CHECK(zap.train.lr == 5e-5);
  CHECK(zap.embed_dim == 512);

  RunConfig cgqa = resolve_config(std::nullopt, "profile = cgqa\n");
  CHECK(cgqa.loss.gamma == 6.0);
  CHECK(cgqa.loss.lambda == 1.0);
  CHECK(cgqa.embed_dim == 512);
}

TEST_CASE("unknown keys and malformed lines carry line diagnostics") {
  try {
    resolve_config(std::string("gamma = 1\nbogus_key = 2\n"), "");
    FAIL("expected ConfigError");
  } catch (const MustError& e) {
    CHECK(e.code() == Errc::config);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(resolve_config(std::string("gamma 1\n"), ""), MustError);
  CHECK_THROWS_AS(resolve_config(std::string("gamma = abc\n"), ""), MustError);
  CHECK_THROWS_AS(resolve_config(std::string("lambda = -1\n"), ""), MustError);
  CHECK_THROWS_AS(resolve_config(std::string("temperature = 0\n"), ""), MustError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, "profile = nope\n"), MustError);
}

TEST_CASE("overrides take precedence over the file") {
  RunConfig cfg = resolve_config(std::string("profile = ut-zappos\ngamma = 2\n"), "gamma = 3\n");
  CHECK(cfg.loss.gamma == 3.0);
  CHECK(cfg.loss.lambda == 1.0);  // still the profile default
}

TEST_CASE("resolved config round-trips through the parser") {
  RunConfig a = resolve_config(std::string(kTinyRun), "");
  const std::string text = serialize_config(a);
  RunConfig b = resolve_config(text, "");
  CHECK(serialize_config(b) == text);
  CHECK(b.synth.sigma_states == a.synth.sigma_states);
  CHECK(b.loss.gamma == a.loss.gamma);
}

TEST_CASE("sigma specs: constant, list, lognormal") {
  RunConfig c1 = resolve_config(std::string("synth_states = 3\nsynth_sigma_states = 0.7\n"), "");
  CHECK(c1.synth.sigma_states == std::vector<double>{0.7, 0.7, 0.7});

  RunConfig c2 =
      resolve_config(std::string("synth_states = 3\nsynth_sigma_states = 0.1,0.2,0.3\n"), "");
  CHECK(c2.synth.sigma_states == std::vector<double>{0.1, 0.2, 0.3});

  CHECK_THROWS_AS(
      resolve_config(std::string("synth_states = 3\nsynth_sigma_states = 0.1,0.2\n"), ""),
      MustError);

  RunConfig c3 = resolve_config(
      std::string("seed = 9\nsynth_sigma_states = lognormal(0.5,0.8)\n"), "");
  RunConfig c4 = resolve_config(
      std::string("seed = 9\nsynth_sigma_states = lognormal(0.5,0.8)\n"), "");
  CHECK(c3.synth.sigma_states == c4.synth.sigma_states);
  for (double v : c3.synth.sigma_states) CHECK(v > 0.0);
  RunConfig c5 = resolve_config(
      std::string("seed = 10\nsynth_sigma_states = lognormal(0.5,0.8)\n"), "");
  CHECK(c3.synth.sigma_states != c5.synth.sigma_states);
}

TEST_CASE("ablation switch maps onto the split gammas") {
  RunConfig base = resolve_config(std::string("gamma = 2\nablation = base\n"), "");
  LossConfig lb = effective_loss_config(base);
  CHECK(lb.effective_gamma_components() == 0.0);
  CHECK(lb.effective_gamma_pair() == 0.0);

  RunConfig comp = resolve_config(std::string("gamma = 2\nablation = components\n"), "");
  LossConfig lc = effective_loss_config(comp);
  CHECK(lc.effective_gamma_components() == 2.0);
  CHECK(lc.effective_gamma_pair() == 0.0);

  RunConfig pair = resolve_config(std::string("gamma = 2\nablation = composition\n"), "");
  LossConfig lp = effective_loss_config(pair);
  CHECK(lp.effective_gamma_components() == 0.0);
  CHECK(lp.effective_gamma_pair() == 2.0);

  RunConfig full = resolve_config(std::string("gamma = 2\nablation = full\n"), "");
  LossConfig lf = effective_loss_config(full);
  CHECK(lf.effective_gamma_components() == 2.0);
  CHECK(lf.effective_gamma_pair() == 2.0);

  RunConfig focal = resolve_config(std::string("ablation = focal\n"), "");
  CHECK(focal.train.focal_composition);

  CHECK_THROWS_AS(resolve_config(std::string("ablation = base\ngamma_pair = 1\n"), ""), MustError);
  CHECK_THROWS_AS(resolve_config(std::string("ablation = nonsense\n"), ""), MustError);
}

TEST_CASE("synth/train/eval pipeline produces deterministic artifacts") {
  test::TempDir dir("runner_e2e");
  const auto data = dir.path() / "data";
  const auto run = dir.path() / "run";
  const auto cfg_path = dir.path() / "run.cfg";
  {
    std::ofstream out(cfg_path);
    out << kTinyRun;
  }

  cmd_synth(cfg_path.string(), "", data);
  CHECK(std::filesystem::exists(data / "metadata.txt"));
  CHECK(std::filesystem::exists(data / "features.bin"));
  CHECK(std::filesystem::exists(data / "embeddings.bin"));
  CHECK(std::filesystem::exists(data / "resolved_config.txt"));

  // Same seed, second run: byte-identical outputs.
  const auto data2 = dir.path() / "data2";
  cmd_synth(cfg_path.string(), "", data2);
  for (const char* name : {"metadata.txt", "features.bin", "embeddings.bin", "resolved_config.txt"}) {
    CHECK(test::read_bytes(data / name) == test::read_bytes(data2 / name));
  }

  cmd_train(data, cfg_path.string(), "", run);
  CHECK(std::filesystem::exists(run / "checkpoint.must"));
  CHECK(std::filesystem::exists(run / "history.csv"));
  CHECK(std::filesystem::exists(run / "resolved_config.txt"));

  EvalOptions opts;
  opts.inference = "must";
  opts.topk = 2;
  const auto report1 = dir.path() / "r1.txt";
  const auto report2 = dir.path() / "r2.txt";
  const auto curve1 = dir.path() / "c1.csv";
  const auto curve2 = dir.path() / "c2.csv";
  cmd_eval(data, run / "checkpoint.must", opts, report1, curve1);
  cmd_eval(data, run / "checkpoint.must", opts, report2, curve2);
  CHECK(test::read_bytes(report1) == test::read_bytes(report2));
  CHECK(test::read_bytes(curve1) == test::read_bytes(curve2));

  const std::string report = test::read_bytes(report1);
  CHECK(report.find("must 1 ") != std::string::npos);
  CHECK(report.find("must 2 ") != std::string::npos);

  const std::string curve = test::read_bytes(curve1);
  CHECK(curve.rfind("bias,seen_acc,unseen_acc\n", 0) == 0);
  CHECK(curve.find("-inf,") != std::string::npos);
}

TEST_CASE("eval with --inference all emits one block per variant") {
  test::TempDir dir("runner_all");
  const auto data = dir.path() / "data";
  const auto run = dir.path() / "run";
  const auto cfg_path = dir.path() / "run.cfg";
  {
    std::ofstream out(cfg_path);
    out << kTinyRun << "epochs = 2\n";
  }
  cmd_synth(cfg_path.string(), "", data);
  cmd_train(data, cfg_path.string(), "", run);

  EvalOptions opts;
  opts.inference = "all";
  opts.alpha = 0.4;
  opts.beta = 0.6;
  const auto report_path = dir.path() / "all.txt";
  const auto curve_path = dir.path() / "curve.csv";
  cmd_eval(data, run / "checkpoint.must", opts, report_path, curve_path);
  const std::string report = test::read_bytes(report_path);
  for (const char* variant : {"base 1 ", "max 1 ", "equal 1 ", "must 1 ", "fixed 1 "}) {
    CHECK(report.find(variant) != std::string::npos);
  }
  for (const char* variant : {"base", "max", "equal", "must", "fixed"}) {
    CHECK(std::filesystem::exists(dir.path() / ("curve." + std::string(variant) + ".csv")));
  }
}

TEST_CASE("fixed inference without alpha/beta is a config error") {
  test::TempDir dir("runner_fixed");
  const auto data = dir.path() / "data";
  const auto run = dir.path() / "run";
  const auto cfg_path = dir.path() / "run.cfg";
  {
    std::ofstream out(cfg_path);
    out << kTinyRun << "epochs = 1\n";
  }
  cmd_synth(cfg_path.string(), "", data);
  cmd_train(data, cfg_path.string(), "", run);
  EvalOptions opts;
  opts.inference = "fixed";
  try {
    cmd_eval(data, run / "checkpoint.must", opts, dir.path() / "r.txt", std::nullopt);
    FAIL("expected ConfigError");
  } catch (const MustError& e) {
    CHECK(e.code() == Errc::config);
  }
}

TEST_CASE("gradcheck command passes at the default tolerance and fails at zero") {
  GradcheckOutcome ok = cmd_gradcheck(1, 1e-4);
  CHECK(ok.all_pass);
  CHECK(ok.report.find("mode=detached") != std::string::npos);
  CHECK(ok.report.find("mode=attached") != std::string::npos);

  GradcheckOutcome bad = cmd_gradcheck(1, 0.0);
  CHECK_FALSE(bad.all_pass);

  GradcheckOutcome again = cmd_gradcheck(1, 1e-4);
  CHECK(again.report == ok.report);  // fixed seed, identical table
}
