#include "spg/poly.hpp"

#include <stdexcept>

namespace spg {

PolyBasis::PolyBasis(int input_dim, int degree)
    : input_dim_(input_dim), degree_(degree) {
  if (input_dim < 1) throw std::invalid_argument("PolyBasis: input_dim < 1");
  if (degree < 1 || degree > 2)
    throw std::invalid_argument("PolyBasis: degree must be 1 or 2");
  feature_count_ = 1 + input_dim;
  if (degree == 2) feature_count_ += input_dim * (input_dim + 1) / 2;
}

Vec PolyBasis::features(const Vec& x) const {
  if (static_cast<int>(x.size()) != input_dim_)
    throw std::invalid_argument("PolyBasis: input dim mismatch");
  Vec f;
  f.reserve(feature_count_);
  f.push_back(1.0);
  for (double v : x) f.push_back(v);
  if (degree_ == 2)
    for (int i = 0; i < input_dim_; ++i)
      for (int j = i; j < input_dim_; ++j) f.push_back(x[i] * x[j]);
  return f;
}

Vec PolyBasis::feature_grad(const Vec& x, int k) const {
  Vec g(feature_count_, 0.0);
  g[1 + k] = 1.0;
  if (degree_ == 2) {
    int idx = 1 + input_dim_;
    for (int i = 0; i < input_dim_; ++i)
      for (int j = i; j < input_dim_; ++j, ++idx) {
        if (i == k) g[idx] += x[j];
        if (j == k) g[idx] += x[i];
      }
  }
  return g;
}

void PolyModel::set_params(const Vec& p) {
  if (static_cast<int>(p.size()) != param_count())
    throw std::invalid_argument("PolyModel::set_params: size mismatch");
  coeffs_ = p;
}

Vec PolyModel::forward(const Vec& x) const {
  return {dot(coeffs_, basis_.features(x))};
}

void PolyModel::backward(const Vec& x, const Vec& upstream, Vec* param_grad,
                         Vec* input_grad) const {
  double u = upstream.at(0);
  if (param_grad) {
    *param_grad = basis_.features(x);
    for (double& v : *param_grad) v *= u;
  }
  if (input_grad) {
    input_grad->assign(input_dim(), 0.0);
    for (int k = 0; k < input_dim(); ++k)
      (*input_grad)[k] = u * dot(coeffs_, basis_.feature_grad(x, k));
  }
}

Vec PolyModel::mixed_grad(const Vec& x, const Vec& dir) const {
  Vec out(param_count(), 0.0);
  for (int k = 0; k < input_dim(); ++k) {
    if (dir[k] == 0.0) continue;
    axpy(dir[k], basis_.feature_grad(x, k), out);
  }
  return out;
}

int PolyModel::quadratic_index(int i, int j) const {
  if (basis_.degree() < 2)
    throw std::logic_error("PolyModel: no quadratic terms at degree 1");
  int d = input_dim();
  // offset of row i in the upper-triangular enumeration
  int row_off = i * d - i * (i - 1) / 2;
  return 1 + d + row_off + (j - i);
}

}  // namespace spg
