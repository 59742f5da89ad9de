#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace must {

namespace {

struct Entry {
  std::string key;
  std::string value;
  std::string where;  // e.g. "config line 3"
};

const std::vector<std::string> kKnownKeys = {
    "profile", "seed", "embed_dim", "ablation",
    "gamma", "gamma_components", "gamma_pair", "lambda", "temperature",
    "weight_detached", "clamp_weights",
    "epochs", "batch_size", "lr", "eval_every", "patience",
    "synth_states", "synth_objects", "synth_seen_pairs", "synth_unseen_pairs",
    "synth_samples_per_pair", "synth_feat_dim", "synth_word_dim", "synth_noise",
    "synth_sigma_states", "synth_sigma_objects",
};

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<Entry> parse_entries(const std::string& text, const std::string& source) {
  std::vector<Entry> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const size_t eq = t.find('=');
    const std::string where = source + " line " + std::to_string(line_no);
    if (eq == std::string::npos) {
      fail(Errc::config, where + ": expected 'key = value', got '" + t + "'");
    }
    Entry e;
    e.key = trim(t.substr(0, eq));
    e.value = trim(t.substr(eq + 1));
    e.where = where;
    if (e.key.empty() || e.value.empty()) {
      fail(Errc::config, where + ": empty key or value");
    }
    bool known = false;
    for (const auto& k : kKnownKeys) known = known || k == e.key;
    if (!known) fail(Errc::config, where + ": unknown key '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

double to_double(const Entry& e) {
  try {
    size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    fail(Errc::config, e.where + ": field '" + e.key + "' expects a number, got '" + e.value + "'");
  }
}

int64_t to_int(const Entry& e) {
  try {
    size_t used = 0;
    const int64_t v = std::stoll(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    fail(Errc::config, e.where + ": field '" + e.key + "' expects an integer, got '" + e.value + "'");
  }
}

uint64_t to_u64(const Entry& e) {
  try {
    size_t used = 0;
    const uint64_t v = std::stoull(e.value, &used);
    if (used != e.value.size()) throw std::invalid_argument(e.value);
    return v;
  } catch (const std::exception&) {
    fail(Errc::config, e.where + ": field '" + e.key + "' expects an unsigned integer");
  }
}

bool to_bool(const Entry& e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  fail(Errc::config, e.where + ": field '" + e.key + "' expects true|false");
}

// Sigma specs: a single number (constant across classes), a comma list (one
// entry per class), or lognormal(median,spread) expanded deterministically
// from the run seed.
struct SigmaSpec {
  std::string raw = "0";
  std::string where = "default";
};

std::vector<double> expand_sigma(const SigmaSpec& spec, size_t n_classes, uint64_t seed,
                                 const char* stream_tag) {
  const std::string& s = spec.raw;
  if (s.rfind("lognormal(", 0) == 0 && s.back() == ')') {
    const std::string inner = s.substr(10, s.size() - 11);
    const size_t comma = inner.find(',');
    if (comma == std::string::npos) {
      fail(Errc::config, spec.where + ": lognormal spec needs 'lognormal(median,spread)'");
    }
    double median, spread;
    try {
      median = std::stod(trim(inner.substr(0, comma)));
      spread = std::stod(trim(inner.substr(comma + 1)));
    } catch (const std::exception&) {
      fail(Errc::config, spec.where + ": bad lognormal parameters '" + inner + "'");
    }
    if (median < 0 || spread < 0) {
      fail(Errc::config, spec.where + ": lognormal parameters must be >= 0");
    }
    Rng rng(stream_seed(seed, stream_tag));
    std::vector<double> out(n_classes);
    for (double& v : out) v = median * std::exp(spread * rng.gaussian());
    return out;
  }
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      vals.push_back(v);
    } catch (const std::exception&) {
      fail(Errc::config, spec.where + ": bad deviation scale '" + tok + "'");
    }
  }
  if (vals.size() == 1) return std::vector<double>(n_classes, vals[0]);
  if (vals.size() != n_classes) {
    fail(Errc::config, spec.where + ": expected 1 or " + std::to_string(n_classes) +
                           " deviation scales, got " + std::to_string(vals.size()));
  }
  return vals;
}

struct ProfileDefaults {
  RunConfig cfg;
  SigmaSpec sigma_states;
  SigmaSpec sigma_objects;
};

ProfileDefaults profile_defaults(const std::string& profile, const std::string& where) {
  ProfileDefaults d;
  RunConfig& c = d.cfg;
  c.profile = profile;
  if (profile == "mit-states" || profile == "ut-zappos" || profile == "cgqa") {
    c.embed_dim = 512;
    c.loss.gamma = profile == "cgqa" ? 6.0 : 1.0;
    c.loss.lambda = profile == "mit-states" ? 1.5 : 1.0;
    c.loss.temperature = 1.0;
    c.train.epochs = 300;
    c.train.batch_size = 128;
    c.train.lr = 5e-5;
    c.train.eval_every = 1;
    c.train.patience = 50;
  } else if (profile == "synth") {
    // Desk-scale defaults; not a published configuration.
    c.embed_dim = 64;
    c.loss.gamma = 1.0;
    c.loss.lambda = 1.0;
    c.loss.temperature = 0.05;
    c.train.epochs = 40;
    c.train.batch_size = 128;
    c.train.lr = 1e-3;
    c.train.eval_every = 5;
    c.train.patience = 50;
    d.sigma_states = {"lognormal(0.45,0.9)", "profile"};
    d.sigma_objects = {"lognormal(0.15,0.3)", "profile"};
  } else {
    fail(Errc::config, where + ": unknown profile '" + profile +
                           "' (expected mit-states|ut-zappos|cgqa|synth)");
  }
  return d;
}

}  // namespace

RunConfig resolve_config(const std::optional<std::string>& file_text,
                         const std::string& overrides_text) {
  std::vector<Entry> entries;
  if (file_text) {
    entries = parse_entries(*file_text, "config");
  }
  for (Entry& e : parse_entries(overrides_text, "override")) entries.push_back(std::move(e));

  // The profile decides the defaults, so find it first.
  std::string profile = "synth";
  std::string profile_where = "default";
  for (const Entry& e : entries) {
    if (e.key == "profile") {
      profile = e.value;
      profile_where = e.where;
    }
  }

  ProfileDefaults defaults = profile_defaults(profile, profile_where);
  RunConfig cfg = defaults.cfg;
  SigmaSpec sigma_states = defaults.sigma_states;
  SigmaSpec sigma_objects = defaults.sigma_objects;
  bool split_gamma_set = false;

  for (const Entry& e : entries) {
    if (e.key == "profile") continue;
    if (e.key == "seed") cfg.seed = to_u64(e);
    else if (e.key == "embed_dim") cfg.embed_dim = static_cast<int32_t>(to_int(e));
    else if (e.key == "ablation") cfg.ablation = e.value;
    else if (e.key == "gamma") cfg.loss.gamma = to_double(e);
    else if (e.key == "gamma_components") { cfg.loss.gamma_components = to_double(e); split_gamma_set = true; }
    else if (e.key == "gamma_pair") { cfg.loss.gamma_pair = to_double(e); split_gamma_set = true; }
    else if (e.key == "lambda") cfg.loss.lambda = to_double(e);
    else if (e.key == "temperature") cfg.loss.temperature = to_double(e);
    else if (e.key == "weight_detached") cfg.loss.weight_detached = to_bool(e);
    else if (e.key == "clamp_weights") cfg.loss.clamp_weights = to_bool(e);
    else if (e.key == "epochs") cfg.train.epochs = static_cast<int32_t>(to_int(e));
    else if (e.key == "batch_size") cfg.train.batch_size = static_cast<int32_t>(to_int(e));
    else if (e.key == "lr") cfg.train.lr = to_double(e);
    else if (e.key == "eval_every") cfg.train.eval_every = static_cast<int32_t>(to_int(e));
    else if (e.key == "patience") cfg.train.patience = static_cast<int32_t>(to_int(e));
    else if (e.key == "synth_states") cfg.synth.n_states = static_cast<int32_t>(to_int(e));
    else if (e.key == "synth_objects") cfg.synth.n_objects = static_cast<int32_t>(to_int(e));
    else if (e.key == "synth_seen_pairs") cfg.synth.seen_pairs = static_cast<int32_t>(to_int(e));
    else if (e.key == "synth_unseen_pairs") cfg.synth.unseen_pairs = static_cast<int32_t>(to_int(e));
    else if (e.key == "synth_samples_per_pair") cfg.synth.samples_per_pair = static_cast<int32_t>(to_int(e));
    else if (e.key == "synth_feat_dim") cfg.synth.feat_dim = static_cast<int32_t>(to_int(e));
    else if (e.key == "synth_word_dim") cfg.synth.word_dim = static_cast<int32_t>(to_int(e));
    else if (e.key == "synth_noise") cfg.synth.noise = to_double(e);
    else if (e.key == "synth_sigma_states") sigma_states = {e.value, e.where};
    else if (e.key == "synth_sigma_objects") sigma_objects = {e.value, e.where};
  }

  if (cfg.ablation != "full" && cfg.ablation != "base" && cfg.ablation != "components" &&
      cfg.ablation != "composition" && cfg.ablation != "focal") {
    fail(Errc::config, "ablation must be full|base|components|composition|focal");
  }
  if (cfg.ablation != "full" && split_gamma_set) {
    fail(Errc::config, "gamma_components/gamma_pair conflict with ablation '" + cfg.ablation + "'");
  }
  if (cfg.loss.gamma < 0 || cfg.loss.effective_gamma_components() < 0 ||
      cfg.loss.effective_gamma_pair() < 0) {
    fail(Errc::config, "gamma must be non-negative");
  }
  if (cfg.loss.lambda < 0) fail(Errc::config, "lambda must be non-negative");
  if (!(cfg.loss.temperature > 0)) fail(Errc::config, "temperature must be positive");
  if (cfg.embed_dim < 1) fail(Errc::config, "embed_dim must be >= 1");
  if (cfg.train.epochs < 0) fail(Errc::config, "epochs must be >= 0");
  if (cfg.train.batch_size < 1) fail(Errc::config, "batch_size must be >= 1");
  if (!(cfg.train.lr > 0)) fail(Errc::config, "lr must be positive");
  if (cfg.train.eval_every < 1) fail(Errc::config, "eval_every must be >= 1");
  if (cfg.train.patience < 1) fail(Errc::config, "patience must be >= 1");

  cfg.train.seed = cfg.seed;
  cfg.train.embed_dim = cfg.embed_dim;
  cfg.train.focal_composition = cfg.ablation == "focal";
  cfg.synth.seed = cfg.seed;
  cfg.synth.sigma_states =
      expand_sigma(sigma_states, static_cast<size_t>(cfg.synth.n_states), cfg.seed, "sigma-states");
  cfg.synth.sigma_objects = expand_sigma(sigma_objects, static_cast<size_t>(cfg.synth.n_objects),
                                         cfg.seed, "sigma-objects");
  for (double s : cfg.synth.sigma_states) {
    if (!(s >= 0)) fail(Errc::config, "synth_sigma_states entries must be >= 0");
  }
  for (double s : cfg.synth.sigma_objects) {
    if (!(s >= 0)) fail(Errc::config, "synth_sigma_objects entries must be >= 0");
  }
  return cfg;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "# resolved run configuration\n";
  out << "profile = " << cfg.profile << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "embed_dim = " << cfg.embed_dim << "\n";
  out << "ablation = " << cfg.ablation << "\n";
  out << "gamma = " << fmt_double(cfg.loss.gamma) << "\n";
  if (cfg.loss.gamma_components) {
    out << "gamma_components = " << fmt_double(*cfg.loss.gamma_components) << "\n";
  }
  if (cfg.loss.gamma_pair) out << "gamma_pair = " << fmt_double(*cfg.loss.gamma_pair) << "\n";
  out << "lambda = " << fmt_double(cfg.loss.lambda) << "\n";
  out << "temperature = " << fmt_double(cfg.loss.temperature) << "\n";
  out << "weight_detached = " << (cfg.loss.weight_detached ? "true" : "false") << "\n";
  out << "clamp_weights = " << (cfg.loss.clamp_weights ? "true" : "false") << "\n";
  out << "epochs = " << cfg.train.epochs << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "lr = " << fmt_double(cfg.train.lr) << "\n";
  out << "eval_every = " << cfg.train.eval_every << "\n";
  out << "patience = " << cfg.train.patience << "\n";
  out << "synth_states = " << cfg.synth.n_states << "\n";
  out << "synth_objects = " << cfg.synth.n_objects << "\n";
  out << "synth_seen_pairs = " << cfg.synth.seen_pairs << "\n";
  out << "synth_unseen_pairs = " << cfg.synth.unseen_pairs << "\n";
  out << "synth_samples_per_pair = " << cfg.synth.samples_per_pair << "\n";
  out << "synth_feat_dim = " << cfg.synth.feat_dim << "\n";
  out << "synth_word_dim = " << cfg.synth.word_dim << "\n";
  out << "synth_noise = " << fmt_double(cfg.synth.noise) << "\n";
  out << "synth_sigma_states = " << fmt_list(cfg.synth.sigma_states) << "\n";
  out << "synth_sigma_objects = " << fmt_list(cfg.synth.sigma_objects) << "\n";
  return out.str();
}

LossConfig effective_loss_config(const RunConfig& cfg) {
  LossConfig loss = cfg.loss;
  if (cfg.ablation == "base") {
    loss.gamma_components = 0.0;
    loss.gamma_pair = 0.0;
  } else if (cfg.ablation == "components") {
    loss.gamma_pair = 0.0;
  } else if (cfg.ablation == "composition") {
    loss.gamma_components = 0.0;
  } else if (cfg.ablation == "focal") {
    // Focal composition loss is applied by the trainer; the component heads
    // fall back to plain cross-entropy.
    loss.gamma_components = 0.0;
  }
  return loss;
}

}  // namespace must
