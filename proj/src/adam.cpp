#include "adam.hpp"

#include <cmath>

#include "errors.hpp"

namespace must {

Adam::Adam(std::vector<Param*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0)) fail(Errc::config, "adam: learning rate must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Param* p : params_) {
    m_.push_back(p->value.zeros_like());
    v_.push_back(p->value.zeros_like());
  }
}

void Adam::step() {
  // Validate every gradient before touching any value, so a NaN aborts the
  // whole step instead of half-applying it.
  for (Param* p : params_) {
    if (!p->grad.all_finite()) {
      fail(Errc::numerical, "adam: non-finite gradient in parameter '" + p->name + "'");
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param* p = params_[i];
    for (size_t j = 0; j < p->value.numel(); ++j) {
      const double g = p->grad[j];
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m_[i][j] / bc1;
      const double vhat = v_[i][j] / bc2;
      p->value[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p->zero_grad();
  }
}

}  // namespace must
