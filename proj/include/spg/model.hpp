#pragma once

#include <memory>
#include <stdexcept>

#include "spg/vec.hpp"

namespace spg {

// Differentiable parametric map R^in -> R^out with exact parameter and input
// gradients. Parameters are exposed as one flat vector so optimizers and the
// consensus machinery stay model-agnostic.
class Model {
 public:
  virtual ~Model() = default;

  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual int param_count() const = 0;
  virtual Vec params() const = 0;
  virtual void set_params(const Vec& p) = 0;

  virtual Vec forward(const Vec& x) const = 0;

  // Accumulates nothing: writes the full vector-Jacobian products
  // upstream^T dF/dparams and upstream^T dF/dx.
  virtual void backward(const Vec& x, const Vec& upstream, Vec* param_grad,
                        Vec* input_grad) const = 0;

  // d/dparams of (dir . grad_x f), scalar-output models only. The default
  // differentiates the analytic param-gradient along the input direction with
  // a central step; subclasses with structure override analytically.
  virtual Vec mixed_grad(const Vec& x, const Vec& dir) const {
    if (output_dim() != 1)
      throw std::invalid_argument("mixed_grad: scalar output required");
    const double h = 1e-5;
    Vec xp = x, xm = x;
    axpy(h, dir, xp);
    axpy(-h, dir, xm);
    Vec gp(param_count(), 0.0), gm(param_count(), 0.0), ig;
    backward(xp, {1.0}, &gp, &ig);
    backward(xm, {1.0}, &gm, &ig);
    Vec out(param_count());
    for (int i = 0; i < param_count(); ++i) out[i] = (gp[i] - gm[i]) / (2 * h);
    return out;
  }

  virtual std::unique_ptr<Model> clone() const = 0;
};

}  // namespace spg
