#pragma once

#include <string>
#include <vector>

#include "spg/model.hpp"
#include "spg/rng.hpp"

namespace spg {

enum class Activation { kTanh, kRelu, kIdentity };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& s);

// Fully connected network with per-layer elementwise activations.
// Weights are row-major (out x in). Double precision throughout; the
// backward pass produces exact parameter and input gradients.
class DenseNet : public Model {
 public:
  DenseNet() = default;
  // layer_dims = {in, h1, ..., out}; activations has layer_dims.size()-1
  // entries (one per affine layer).
  DenseNet(std::vector<int> layer_dims, std::vector<Activation> activations);

  static DenseNet xavier(std::vector<int> layer_dims,
                         std::vector<Activation> activations, Rng& rng);

  int input_dim() const override { return layer_dims_.front(); }
  int output_dim() const override { return layer_dims_.back(); }
  int param_count() const override { return param_count_; }
  Vec params() const override;
  void set_params(const Vec& p) override;

  Vec forward(const Vec& x) const override;
  void backward(const Vec& x, const Vec& upstream, Vec* param_grad,
                Vec* input_grad) const override;

  std::unique_ptr<Model> clone() const override {
    return std::make_unique<DenseNet>(*this);
  }

  const std::vector<int>& layer_dims() const { return layer_dims_; }
  const std::vector<Activation>& activations() const { return activations_; }
  int n_layers() const { return static_cast<int>(activations_.size()); }

  // Direct access used by tests that pin exact weights.
  double& weight(int layer, int row, int col);
  double& bias(int layer, int row);

 private:
  std::vector<int> layer_dims_;
  std::vector<Activation> activations_;
  std::vector<Vec> weights_;  // per layer, row-major out x in
  std::vector<Vec> biases_;   // per layer
  int param_count_ = 0;
};

}  // namespace spg
