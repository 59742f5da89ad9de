#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "config.hpp"
#include "gradcheck.hpp"
#include "metrics.hpp"

namespace must {

// Command implementations shared by the C API (and through it, the CLI).
// They throw MustError; the exit-code mapping lives at the C boundary.

void cmd_synth(const std::optional<std::string>& config_path, const std::string& overrides_text,
               const std::filesystem::path& out_dir);

void cmd_train(const std::filesystem::path& data_dir,
               const std::optional<std::string>& config_path, const std::string& overrides_text,
               const std::filesystem::path& out_dir);

struct EvalOptions {
  std::string inference = "must";  // must|base|max|equal|fixed|all
  std::optional<double> alpha;
  std::optional<double> beta;
  int32_t topk = 1;
};

void cmd_eval(const std::filesystem::path& data_dir, const std::filesystem::path& ckpt_path,
              const EvalOptions& opts, const std::filesystem::path& report_path,
              const std::optional<std::filesystem::path>& curve_csv_path);

struct GradcheckOutcome {
  std::string report;
  bool all_pass = false;
};

// Small deterministic model + synthetic batch; checks the full training
// objective in detached-weight mode and in attached mode.
GradcheckOutcome cmd_gradcheck(uint64_t seed, double tol);

}  // namespace must
