#include "spg/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace spg {

void Optimizer::step(Vec& params, Vec grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("Optimizer::step: shape mismatch");
  if (!all_finite(grads))
    throw std::runtime_error("Optimizer::step: non-finite gradient");
  if (clip_norm_ > 0.0) clip_global_norm(grads, clip_norm_);
  ++step_count_;
  if (kind_ == OptKind::kSgd) {
    axpy(-lr_, grads, params);
    return;
  }
  if (m_.size() != params.size()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  double bc1 = 1.0 - std::pow(beta1_, step_count_);
  double bc2 = 1.0 - std::pow(beta2_, step_count_);
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
  }
}

}  // namespace spg
