// Command-line front end; everything runs through the shared-library C API.

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "must/must.h"

namespace {

int report_failure(int rc) {
  std::fprintf(stderr, "error: %s\n", must_last_error());
  return rc;
}

// CLI flags become config overrides, highest precedence.
struct Overrides {
  std::string text;

  void set(const std::string& key, const std::string& value) {
    text += key + " = " + value + "\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MUST: mutual state-object balancing for compositional zero-shot learning"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset bundle");
  std::string synth_config, synth_out, synth_profile;
  std::optional<uint64_t> synth_seed;
  std::vector<std::string> synth_sets;
  synth->add_option("--config", synth_config, "config file");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--profile", synth_profile, "profile: mit-states|ut-zappos|cgqa|synth");
  synth->add_option("--seed", synth_seed, "run seed");
  synth->add_option("--set", synth_sets, "extra overrides as key=value")->take_all();

  // train
  auto* train = app.add_subcommand("train", "train a model on a dataset bundle");
  std::string train_data, train_config, train_out, train_profile, train_ablation;
  std::optional<uint64_t> train_seed;
  std::optional<int64_t> train_epochs;
  std::vector<std::string> train_sets;
  train->add_option("--data", train_data, "bundle directory")->required();
  train->add_option("--config", train_config, "config file");
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--profile", train_profile, "profile: mit-states|ut-zappos|cgqa|synth");
  train->add_option("--ablation", train_ablation,
                    "training configuration: full|base|components|composition|focal");
  train->add_option("--seed", train_seed, "run seed");
  train->add_option("--epochs", train_epochs, "epoch count");
  train->add_option("--set", train_sets, "extra overrides as key=value")->take_all();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  std::string eval_data, eval_ckpt, eval_report, eval_curve;
  std::string eval_inference = "must";
  std::optional<double> eval_alpha, eval_beta;
  int eval_topk = 1;
  eval->add_option("--data", eval_data, "bundle directory")->required();
  eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--inference", eval_inference, "must|base|max|equal|fixed|all");
  eval->add_option("--alpha", eval_alpha, "fixed-rule state weight");
  eval->add_option("--beta", eval_beta, "fixed-rule object weight");
  eval->add_option("--topk", eval_topk, "report top-1..k rows");
  eval->add_option("--report", eval_report, "report output file")->required();
  eval->add_option("--curve-csv", eval_curve, "bias-sweep curve CSV output");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the objective");
  uint64_t gc_seed = 1;
  double gc_tol = 1e-4;
  gradcheck->add_option("--seed", gc_seed, "seed for the model and batch");
  gradcheck->add_option("--tol", gc_tol, "max relative error tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (synth->parsed()) {
    Overrides ov;
    if (!synth_profile.empty()) ov.set("profile", synth_profile);
    if (synth_seed) ov.set("seed", std::to_string(*synth_seed));
    for (const auto& kv : synth_sets) ov.text += kv + "\n";
    const int rc = must_cmd_synth(synth_config.empty() ? nullptr : synth_config.c_str(),
                                  ov.text.c_str(), synth_out.c_str());
    if (rc != MUST_OK) return report_failure(rc);
    std::printf("wrote bundle to %s\n", synth_out.c_str());
    return 0;
  }

  if (train->parsed()) {
    Overrides ov;
    if (!train_profile.empty()) ov.set("profile", train_profile);
    if (!train_ablation.empty()) ov.set("ablation", train_ablation);
    if (train_seed) ov.set("seed", std::to_string(*train_seed));
    if (train_epochs) ov.set("epochs", std::to_string(*train_epochs));
    for (const auto& kv : train_sets) ov.text += kv + "\n";
    const int rc = must_cmd_train(train_data.c_str(),
                                  train_config.empty() ? nullptr : train_config.c_str(),
                                  ov.text.c_str(), train_out.c_str());
    if (rc != MUST_OK) return report_failure(rc);
    std::printf("wrote checkpoint and history to %s\n", train_out.c_str());
    return 0;
  }

  if (eval->parsed()) {
    const double* alpha = eval_alpha ? &*eval_alpha : nullptr;
    const double* beta = eval_beta ? &*eval_beta : nullptr;
    const int rc = must_cmd_eval(eval_data.c_str(), eval_ckpt.c_str(), eval_inference.c_str(),
                                 alpha, beta, eval_topk, eval_report.c_str(),
                                 eval_curve.empty() ? nullptr : eval_curve.c_str());
    if (rc != MUST_OK) return report_failure(rc);
    std::printf("wrote report to %s\n", eval_report.c_str());
    return 0;
  }

  if (gradcheck->parsed()) {
    char* report = nullptr;
    const int rc = must_cmd_gradcheck(gc_seed, gc_tol, &report);
    if (report) {
      std::fputs(report, stdout);
      must_string_free(report);
    }
    if (rc != MUST_OK && rc != MUST_ERR_RUNTIME) return report_failure(rc);
    if (rc == MUST_ERR_RUNTIME && report == nullptr) return report_failure(rc);
    return rc == MUST_OK ? 0 : 1;
  }

  return 2;
}
