#include "spg/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace spg {

using nlohmann::json;

std::string dense_net_to_json(const DenseNet& net) {
  json j;
  j["version"] = 1;
  j["layer_dims"] = net.layer_dims();
  std::vector<std::string> acts;
  for (Activation a : net.activations()) acts.push_back(activation_name(a));
  j["activations"] = acts;
  j["params"] = net.params();
  return j.dump();
}

DenseNet dense_net_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("checkpoint: unsupported version");
  std::vector<int> dims = j.at("layer_dims").get<std::vector<int>>();
  std::vector<Activation> acts;
  for (const auto& s : j.at("activations"))
    acts.push_back(activation_from_name(s.get<std::string>()));
  DenseNet net(dims, acts);
  net.set_params(j.at("params").get<Vec>());
  return net;
}

void save_dense_net(const DenseNet& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);
  out << dense_net_to_json(net);
}

DenseNet load_dense_net(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return dense_net_from_json(text);
}

}  // namespace spg
