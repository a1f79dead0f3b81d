#pragma once

#include "spg/dense_net.hpp"
#include "spg/rng.hpp"

namespace spg {

// Gaussian policy with a learned state-dependent mean and fixed scalar
// variance. Noise is added in the pre-squash space and actions are mapped to
// the box with a scaled tanh, so d action / d parameters exists everywhere.
// sigma = 0 degenerates to the pure (deterministic) strategy.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(DenseNet mean_net, double sigma, Vec action_low,
                 Vec action_high);

  int state_dim() const { return mean_net_.input_dim(); }
  int action_dim() const { return mean_net_.output_dim(); }
  double sigma() const { return sigma_; }
  void set_sigma(double s);
  const Vec& action_low() const { return low_; }
  const Vec& action_high() const { return high_; }

  DenseNet& mean_net() { return mean_net_; }
  const DenseNet& mean_net() const { return mean_net_; }

  Vec squash(const Vec& u) const;
  Vec unsquash(const Vec& a) const;
  // d squash / d u, elementwise.
  Vec squash_deriv(const Vec& u) const;

  Vec mean_presquash(const Vec& s) const { return mean_net_.forward(s); }
  // Deterministic action: squash(mean).
  Vec act(const Vec& s) const { return squash(mean_presquash(s)); }

  // Stochastic action; pre-squash draw is returned through u_out when given.
  Vec sample(const Vec& s, Rng& rng, Vec* u_out = nullptr) const;

  // Gradient of log pi w.r.t. the mean-net parameters, evaluated at the
  // pre-squash action u. Requires sigma > 0.
  Vec score(const Vec& s, const Vec& u) const;

 private:
  DenseNet mean_net_;
  double sigma_ = 0.0;
  Vec low_, high_;
};

}  // namespace spg
