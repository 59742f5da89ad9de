#include "runner.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"
#include "infer.hpp"
#include "train.hpp"

namespace must {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::config, "cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::format, "cannot write '" + path.string() + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(Errc::format, "short write to '" + path.string() + "'");
}

RunConfig resolve_from(const std::optional<std::string>& config_path,
                       const std::string& overrides_text) {
  std::optional<std::string> file_text;
  if (config_path) file_text = slurp(*config_path);
  return resolve_config(file_text, overrides_text);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Tensor gather_rows(const Tensor& m, std::span<const size_t> rows) {
  Tensor out(rows.size(), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t d = 0; d < m.cols(); ++d) out.at(i, d) = m.at(rows[i], d);
  }
  return out;
}

}  // namespace

void cmd_synth(const std::optional<std::string>& config_path, const std::string& overrides_text,
               const std::filesystem::path& out_dir) {
  RunConfig cfg = resolve_from(config_path, overrides_text);
  DatasetBundle bundle = synth_generate(cfg.synth);
  save_bundle(bundle, out_dir);
  spit(out_dir / "resolved_config.txt", serialize_config(cfg));
}

void cmd_train(const std::filesystem::path& data_dir,
               const std::optional<std::string>& config_path, const std::string& overrides_text,
               const std::filesystem::path& out_dir) {
  RunConfig cfg = resolve_from(config_path, overrides_text);
  DatasetBundle bundle = load_bundle(data_dir);
  const std::string resolved = serialize_config(cfg);

  TrainResult result = train(bundle, cfg.train, effective_loss_config(cfg));

  std::filesystem::create_directories(out_dir);
  save_checkpoint(result.model, out_dir / "checkpoint.must", resolved);
  spit(out_dir / "history.csv", history_csv(result.history));
  spit(out_dir / "resolved_config.txt", resolved);
}

namespace {

void append_report_rows(std::string& report, const char* variant, const EvalReport& ev) {
  for (const SweepResult& row : ev.per_k) {
    report += variant;
    report += " " + std::to_string(row.k);
    report += " " + fmt(row.auc);
    report += " " + fmt(row.best_hm);
    report += " " + fmt(row.best_seen);
    report += " " + fmt(row.best_unseen);
    report += " " + fmt(row.bias_at_best_hm);
    report += " " + fmt(row.acc_adj);
    report += " " + fmt(row.acc_obj);
    report += "\n";
  }
}

std::string curve_csv(const EvalReport& ev) {
  std::string out = "bias,seen_acc,unseen_acc\n";
  for (const CurvePoint& pt : ev.curve) {
    out += fmt(pt.bias) + "," + fmt(pt.acc_seen) + "," + fmt(pt.acc_unseen) + "\n";
  }
  return out;
}

std::filesystem::path variant_path(const std::filesystem::path& base, const std::string& variant) {
  std::filesystem::path p = base;
  const std::string ext = p.extension().string();
  p.replace_extension();
  p += "." + variant;
  p += ext;
  return p;
}

}  // namespace

void cmd_eval(const std::filesystem::path& data_dir, const std::filesystem::path& ckpt_path,
              const EvalOptions& opts, const std::filesystem::path& report_path,
              const std::optional<std::filesystem::path>& curve_csv_path) {
  if (opts.topk < 1) fail(Errc::config, "eval: topk must be >= 1");
  DatasetBundle bundle = load_bundle(data_dir);
  MustModel model = load_checkpoint(ckpt_path);
  check_compat(model, bundle);

  std::vector<size_t> test_idx = bundle.split_indices(Split::test_seen);
  for (size_t i : bundle.split_indices(Split::test_unseen)) test_idx.push_back(i);
  if (test_idx.empty()) fail(Errc::protocol, "eval: bundle has no test split");

  std::vector<size_t> feature_rows(test_idx.size());
  std::vector<PairId> labels(test_idx.size());
  for (size_t i = 0; i < test_idx.size(); ++i) {
    const Sample& s = bundle.samples[test_idx[i]];
    feature_rows[i] = static_cast<size_t>(s.feature_row);
    labels[i] = bundle.space.pair_id(s.state, s.object);
  }
  Tensor X = gather_rows(bundle.features, feature_rows);
  ScoreSet scores = compute_scores(model, X);

  std::vector<std::string> variants;
  if (opts.inference == "all") {
    variants = {"base", "max", "equal", "must"};
    if (opts.alpha && opts.beta) variants.push_back("fixed");
  } else {
    variants = {opts.inference};
  }

  std::string report;
  report += "# must evaluation report\n";
  report += "# data = " + data_dir.string() + "\n";
  report += "# checkpoint = " + ckpt_path.string() + "\n";
  report += "# inference = " + opts.inference;
  if (opts.alpha) report += " alpha=" + fmt(*opts.alpha);
  if (opts.beta) report += " beta=" + fmt(*opts.beta);
  report += "\n";
  report += "# columns: variant k auc best_hm best_seen best_unseen bias_at_best_hm acc_adj acc_obj\n";

  for (const std::string& name : variants) {
    InferenceRule rule;
    if (name == "fixed") {
      if (!opts.alpha || !opts.beta) {
        fail(Errc::config, "eval: inference 'fixed' requires both alpha and beta");
      }
      const double ab[2] = {*opts.alpha, *opts.beta};
      rule = InferenceRule::parse(name, ab);
    } else {
      rule = InferenceRule::parse(name);
    }
    Tensor blended = score_pairs(rule, scores, bundle.space);
    EvalReport ev = evaluate(blended, labels, bundle.space, static_cast<size_t>(opts.topk));
    append_report_rows(report, name.c_str(), ev);

    if (curve_csv_path) {
      const std::filesystem::path path =
          variants.size() == 1 ? *curve_csv_path : variant_path(*curve_csv_path, name);
      spit(path, curve_csv(ev));
    }
  }
  spit(report_path, report);
}

GradcheckOutcome cmd_gradcheck(uint64_t seed, double tol) {
  if (tol < 0) fail(Errc::config, "gradcheck: tolerance must be >= 0");

  // Desk-sized shapes keep the central-difference pass around a second while
  // still exercising every parameter of the full objective.
  SynthConfig scfg;
  scfg.n_states = 4;
  scfg.n_objects = 3;
  scfg.seen_pairs = 8;
  scfg.unseen_pairs = 2;
  scfg.samples_per_pair = 6;
  scfg.feat_dim = 12;
  scfg.word_dim = 6;
  scfg.sigma_states.assign(scfg.n_states, 0.3);
  scfg.sigma_objects.assign(scfg.n_objects, 0.3);
  scfg.noise = 0.05;
  scfg.seed = seed;
  DatasetBundle bundle = synth_generate(scfg);

  ModelConfig mcfg;
  mcfg.feat_dim = scfg.feat_dim;
  mcfg.embed_dim = 16;
  mcfg.word_dim = scfg.word_dim;
  mcfg.init_seed = seed;
  MustModel model(bundle.space, bundle.word_states, bundle.word_objects, mcfg);

  const std::vector<size_t> train_idx = bundle.split_indices(Split::train);
  const size_t batch = std::min<size_t>(16, train_idx.size());
  std::vector<size_t> feature_rows;
  std::vector<Pair> label_pairs;
  for (size_t i = 0; i < batch; ++i) {
    const Sample& s = bundle.samples[train_idx[i]];
    feature_rows.push_back(static_cast<size_t>(s.feature_row));
    label_pairs.push_back({s.state, s.object});
  }
  Tensor X = gather_rows(bundle.features, feature_rows);
  BatchLabels labels = BatchLabels::from_pairs(bundle.space, label_pairs);

  LossConfig loss_cfg;  // gamma 1, lambda 1, clamped, temperature 1
  const double h = 1e-5;
  auto params = model.params();

  GradcheckOutcome outcome;
  outcome.all_pass = true;

  // Detached mode: weights are per-sample constants, so the difference
  // oracle must hold them at their base-point values.
  {
    for (Param* p : params) p->zero_grad();
    LossConfig detached = loss_cfg;
    detached.weight_detached = true;
    Graph g;
    TotalLossNodes nodes = build_total_loss(g, model, X, labels, detached);
    g.backward(nodes.total);
    FixedWeights frozen;
    frozen.w_state = g.value(nodes.w_state).data();
    frozen.w_object = g.value(nodes.w_object).data();
    frozen.w_pair = g.value(nodes.w_pair).data();

    auto loss_fn = [&]() {
      Graph gg;
      TotalLossNodes nn = build_total_loss(gg, model, X, labels, detached, &frozen);
      return gg.value(nn.total)[0];
    };
    GradCheckResult r = finite_diff_check(loss_fn, params, h, tol);
    outcome.report += "mode=detached\n" + gradcheck_table(r);
    outcome.all_pass = outcome.all_pass && r.all_pass;
  }

  // Attached mode: gradients flow through the modulating factors.
  {
    for (Param* p : params) p->zero_grad();
    LossConfig attached = loss_cfg;
    attached.weight_detached = false;
    Graph g;
    TotalLossNodes nodes = build_total_loss(g, model, X, labels, attached);
    g.backward(nodes.total);

    auto loss_fn = [&]() {
      Graph gg;
      TotalLossNodes nn = build_total_loss(gg, model, X, labels, attached);
      return gg.value(nn.total)[0];
    };
    GradCheckResult r = finite_diff_check(loss_fn, params, h, tol);
    outcome.report += "mode=attached\n" + gradcheck_table(r);
    outcome.all_pass = outcome.all_pass && r.all_pass;
  }

  for (Param* p : params) p->zero_grad();
  return outcome;
}

}  // namespace must
