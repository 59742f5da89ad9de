#include "gradcheck.hpp"

#include <cmath>
#include <cstdio>

#include "errors.hpp"

namespace must {

GradCheckResult finite_diff_check(const std::function<double()>& loss_fn,
                                  std::span<Param* const> params, double h, double tol) {
  if (!(h > 0)) fail(Errc::config, "finite_diff_check: step h must be positive");
  if (tol < 0) fail(Errc::config, "finite_diff_check: tolerance must be non-negative");

  GradCheckResult result;
  result.h = h;
  result.tol = tol;

  for (Param* p : params) {
    GradCheckEntry entry;
    entry.param = p->name;
    for (size_t j = 0; j < p->value.numel(); ++j) {
      const double saved = p->value[j];
      p->value[j] = saved + h;
      const double fp = loss_fn();
      p->value[j] = saved - h;
      const double fm = loss_fn();
      p->value[j] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = p->grad[j];
      const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1.0});
      const double rel = std::fabs(analytic - numeric) / scale;
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
    }
    entry.pass = entry.max_rel_err <= tol;
    result.all_pass = result.all_pass && entry.pass;
    result.entries.push_back(std::move(entry));
  }
  return result;
}

std::string gradcheck_table(const GradCheckResult& r) {
  std::string out;
  char line[256];
  for (const auto& e : r.entries) {
    std::snprintf(line, sizeof(line), "%-24s max_rel_err=%.6e %s\n", e.param.c_str(),
                  e.max_rel_err, e.pass ? "ok" : "FAIL");
    out += line;
  }
  std::snprintf(line, sizeof(line), "h=%.3e tol=%.3e overall=%s\n", r.h, r.tol,
                r.all_pass ? "pass" : "FAIL");
  out += line;
  return out;
}

}  // namespace must
