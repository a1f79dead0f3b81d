#pragma once

#include "spg/model.hpp"

namespace spg {

// Monomial feature map up to degree 2: {1, x_i, x_i x_j (i <= j)}.
class PolyBasis {
 public:
  PolyBasis(int input_dim, int degree);

  int input_dim() const { return input_dim_; }
  int degree() const { return degree_; }
  int feature_count() const { return feature_count_; }

  Vec features(const Vec& x) const;
  // d features / d x_k, one column of the feature Jacobian.
  Vec feature_grad(const Vec& x, int k) const;

 private:
  int input_dim_;
  int degree_;
  int feature_count_;
};

// Linear-in-parameters scalar model over a PolyBasis. Quadratics are
// represented exactly, and the mixed parameter/input derivative is analytic.
class PolyModel : public Model {
 public:
  PolyModel(int input_dim, int degree)
      : basis_(input_dim, degree), coeffs_(basis_.feature_count(), 0.0) {}

  int input_dim() const override { return basis_.input_dim(); }
  int output_dim() const override { return 1; }
  int param_count() const override { return basis_.feature_count(); }
  Vec params() const override { return coeffs_; }
  void set_params(const Vec& p) override;

  Vec forward(const Vec& x) const override;
  void backward(const Vec& x, const Vec& upstream, Vec* param_grad,
                Vec* input_grad) const override;
  Vec mixed_grad(const Vec& x, const Vec& dir) const override;

  std::unique_ptr<Model> clone() const override {
    return std::make_unique<PolyModel>(*this);
  }

  const PolyBasis& basis() const { return basis_; }
  // Index helpers into the coefficient vector.
  int constant_index() const { return 0; }
  int linear_index(int i) const { return 1 + i; }
  int quadratic_index(int i, int j) const;  // i <= j

 private:
  PolyBasis basis_;
  Vec coeffs_;
};

}  // namespace spg
