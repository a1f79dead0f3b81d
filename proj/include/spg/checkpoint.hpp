#pragma once

#include <string>

#include "spg/dense_net.hpp"

namespace spg {

// Versioned JSON checkpoint: {version, layer_dims, activations, params}.
// Parameters round-trip bit-exactly (shortest-round-trip double printing).
void save_dense_net(const DenseNet& net, const std::string& path);
DenseNet load_dense_net(const std::string& path);

std::string dense_net_to_json(const DenseNet& net);
DenseNet dense_net_from_json(const std::string& text);

}  // namespace spg
