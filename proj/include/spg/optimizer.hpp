#pragma once

#include "spg/vec.hpp"

namespace spg {

enum class OptKind { kSgd, kAdam };

// SGD / Adam with global-norm gradient clipping (clip 1.0 by default).
class Optimizer {
 public:
  Optimizer(OptKind kind, double lr, double beta1 = 0.9, double beta2 = 0.999,
            double eps = 1e-8, double clip_norm = 1.0)
      : kind_(kind), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
        clip_norm_(clip_norm) {}

  static Optimizer sgd(double lr, double clip_norm = 1.0) {
    return Optimizer(OptKind::kSgd, lr, 0.9, 0.999, 1e-8, clip_norm);
  }
  static Optimizer adam(double lr, double clip_norm = 1.0) {
    return Optimizer(OptKind::kAdam, lr, 0.9, 0.999, 1e-8, clip_norm);
  }

  // Descent step in place. Throws on non-finite gradients.
  void step(Vec& params, Vec grads);

  int step_count() const { return step_count_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

 private:
  OptKind kind_;
  double lr_, beta1_, beta2_, eps_, clip_norm_;
  int step_count_ = 0;
  Vec m_, v_;
};

}  // namespace spg
