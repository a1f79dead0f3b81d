#include "spg/gaussian_policy.hpp"

#include <cmath>
#include <stdexcept>

namespace spg {

GaussianPolicy::GaussianPolicy(DenseNet mean_net, double sigma, Vec action_low,
                               Vec action_high)
    : mean_net_(std::move(mean_net)), sigma_(sigma),
      low_(std::move(action_low)), high_(std::move(action_high)) {
  if (sigma_ < 0.0) throw std::invalid_argument("GaussianPolicy: sigma < 0");
  if (static_cast<int>(low_.size()) != mean_net_.output_dim() ||
      low_.size() != high_.size())
    throw std::invalid_argument("GaussianPolicy: bound dims mismatch");
}

void GaussianPolicy::set_sigma(double s) {
  if (s < 0.0) throw std::invalid_argument("GaussianPolicy: sigma < 0");
  sigma_ = s;
}

Vec GaussianPolicy::squash(const Vec& u) const {
  Vec a(u.size());
  for (size_t i = 0; i < u.size(); ++i)
    a[i] = low_[i] + (high_[i] - low_[i]) * 0.5 * (std::tanh(u[i]) + 1.0);
  return a;
}

Vec GaussianPolicy::unsquash(const Vec& a) const {
  Vec u(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    double t = 2.0 * (a[i] - low_[i]) / (high_[i] - low_[i]) - 1.0;
    t = std::clamp(t, -1.0 + 1e-12, 1.0 - 1e-12);
    u[i] = std::atanh(t);
  }
  return u;
}

Vec GaussianPolicy::squash_deriv(const Vec& u) const {
  Vec d(u.size());
  for (size_t i = 0; i < u.size(); ++i) {
    double t = std::tanh(u[i]);
    d[i] = (high_[i] - low_[i]) * 0.5 * (1.0 - t * t);
  }
  return d;
}

Vec GaussianPolicy::sample(const Vec& s, Rng& rng, Vec* u_out) const {
  Vec u = mean_presquash(s);
  if (sigma_ > 0.0)
    for (double& ui : u) ui += sigma_ * rng.normal();
  if (u_out) *u_out = u;
  return squash(u);
}

Vec GaussianPolicy::score(const Vec& s, const Vec& u) const {
  if (sigma_ <= 0.0)
    throw std::invalid_argument("GaussianPolicy::score: degenerate policy");
  Vec mean = mean_presquash(s);
  Vec upstream(mean.size());
  for (size_t i = 0; i < mean.size(); ++i)
    upstream[i] = (u[i] - mean[i]) / (sigma_ * sigma_);
  Vec pg, ig;
  mean_net_.backward(s, upstream, &pg, &ig);
  return pg;
}

}  // namespace spg
