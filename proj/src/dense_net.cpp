#include "spg/dense_net.hpp"

#include <cmath>
#include <stdexcept>

namespace spg {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw std::invalid_argument("unknown activation: " + s);
}

DenseNet::DenseNet(std::vector<int> layer_dims,
                   std::vector<Activation> activations)
    : layer_dims_(std::move(layer_dims)), activations_(std::move(activations)) {
  if (layer_dims_.size() < 2 ||
      activations_.size() != layer_dims_.size() - 1)
    throw std::invalid_argument("DenseNet: inconsistent layer spec");
  for (int d : layer_dims_)
    if (d < 1) throw std::invalid_argument("DenseNet: layer dim < 1");
  for (size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    int in = layer_dims_[l], out = layer_dims_[l + 1];
    weights_.emplace_back(static_cast<size_t>(in) * out, 0.0);
    biases_.emplace_back(out, 0.0);
    param_count_ += in * out + out;
  }
}

DenseNet DenseNet::xavier(std::vector<int> layer_dims,
                          std::vector<Activation> activations, Rng& rng) {
  DenseNet net(std::move(layer_dims), std::move(activations));
  for (int l = 0; l < net.n_layers(); ++l) {
    int in = net.layer_dims_[l], out = net.layer_dims_[l + 1];
    double scale = std::sqrt(2.0 / (in + out));
    for (double& w : net.weights_[l]) w = scale * rng.normal();
  }
  return net;
}

Vec DenseNet::params() const {
  Vec p;
  p.reserve(param_count_);
  for (int l = 0; l < n_layers(); ++l) {
    p.insert(p.end(), weights_[l].begin(), weights_[l].end());
    p.insert(p.end(), biases_[l].begin(), biases_[l].end());
  }
  return p;
}

void DenseNet::set_params(const Vec& p) {
  if (static_cast<int>(p.size()) != param_count_)
    throw std::invalid_argument("DenseNet::set_params: size mismatch");
  size_t k = 0;
  for (int l = 0; l < n_layers(); ++l) {
    for (double& w : weights_[l]) w = p[k++];
    for (double& b : biases_[l]) b = p[k++];
  }
}

namespace {
inline double act(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: return std::tanh(z);
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kIdentity: return z;
  }
  return z;
}
inline double act_deriv(Activation a, double z) {
  switch (a) {
    case Activation::kTanh: {
      double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::kRelu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}
}  // namespace

Vec DenseNet::forward(const Vec& x) const {
  if (static_cast<int>(x.size()) != input_dim())
    throw std::invalid_argument("DenseNet::forward: input dim mismatch");
  Vec h = x;
  for (int l = 0; l < n_layers(); ++l) {
    int in = layer_dims_[l], out = layer_dims_[l + 1];
    Vec z(out);
    for (int r = 0; r < out; ++r) {
      double s = biases_[l][r];
      const double* wrow = &weights_[l][static_cast<size_t>(r) * in];
      for (int c = 0; c < in; ++c) s += wrow[c] * h[c];
      z[r] = act(activations_[l], s);
      if (!std::isfinite(z[r]))
        throw std::runtime_error("DenseNet: non-finite value at layer " +
                                 std::to_string(l));
    }
    h = std::move(z);
  }
  return h;
}

void DenseNet::backward(const Vec& x, const Vec& upstream, Vec* param_grad,
                        Vec* input_grad) const {
  if (static_cast<int>(x.size()) != input_dim() ||
      static_cast<int>(upstream.size()) != output_dim())
    throw std::invalid_argument("DenseNet::backward: dim mismatch");

  // Forward with cached pre-activations.
  std::vector<Vec> hs(n_layers() + 1);
  std::vector<Vec> zs(n_layers());
  hs[0] = x;
  for (int l = 0; l < n_layers(); ++l) {
    int in = layer_dims_[l], out = layer_dims_[l + 1];
    zs[l].resize(out);
    hs[l + 1].resize(out);
    for (int r = 0; r < out; ++r) {
      double s = biases_[l][r];
      const double* wrow = &weights_[l][static_cast<size_t>(r) * in];
      for (int c = 0; c < in; ++c) s += wrow[c] * hs[l][c];
      if (!std::isfinite(s))
        throw std::runtime_error("DenseNet: non-finite value at layer " +
                                 std::to_string(l));
      zs[l][r] = s;
      hs[l + 1][r] = act(activations_[l], s);
    }
  }

  if (param_grad) param_grad->assign(param_count_, 0.0);
  Vec delta = upstream;
  size_t pg_end = param_grad ? param_grad->size() : 0;
  // Walk layers backwards; the flat param layout is [W0,b0,W1,b1,...], so we
  // track the segment end from the right.
  std::vector<size_t> seg_begin(n_layers());
  {
    size_t k = 0;
    for (int l = 0; l < n_layers(); ++l) {
      seg_begin[l] = k;
      k += static_cast<size_t>(layer_dims_[l]) * layer_dims_[l + 1] +
           layer_dims_[l + 1];
    }
    (void)pg_end;
  }
  for (int l = n_layers() - 1; l >= 0; --l) {
    int in = layer_dims_[l], out = layer_dims_[l + 1];
    Vec dz(out);
    for (int r = 0; r < out; ++r)
      dz[r] = delta[r] * act_deriv(activations_[l], zs[l][r]);
    if (param_grad) {
      double* wg = &(*param_grad)[seg_begin[l]];
      double* bg = wg + static_cast<size_t>(in) * out;
      for (int r = 0; r < out; ++r) {
        for (int c = 0; c < in; ++c)
          wg[static_cast<size_t>(r) * in + c] = dz[r] * hs[l][c];
        bg[r] = dz[r];
      }
    }
    Vec prev(in, 0.0);
    for (int r = 0; r < out; ++r) {
      const double* wrow = &weights_[l][static_cast<size_t>(r) * in];
      for (int c = 0; c < in; ++c) prev[c] += wrow[c] * dz[r];
    }
    delta = std::move(prev);
  }
  if (input_grad) *input_grad = delta;
}

double& DenseNet::weight(int layer, int row, int col) {
  return weights_[layer][static_cast<size_t>(row) * layer_dims_[layer] + col];
}

double& DenseNet::bias(int layer, int row) { return biases_[layer][row]; }

}  // namespace spg
