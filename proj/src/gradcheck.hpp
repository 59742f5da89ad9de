#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "graph.hpp"

namespace must {

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradCheckResult {
  std::vector<GradCheckEntry> entries;
  double h = 0.0;
  double tol = 0.0;
  bool all_pass = true;
};

// Central-difference check of analytic gradients. The caller evaluates one
// backward pass into the params' grads beforehand; loss_fn must re-evaluate
// the same deterministic objective from the current param values without
// touching grads. Error per entry is |a - n| / max(|a|, |n|, 1).
GradCheckResult finite_diff_check(const std::function<double()>& loss_fn,
                                  std::span<Param* const> params, double h, double tol);

std::string gradcheck_table(const GradCheckResult& r);

}  // namespace must
