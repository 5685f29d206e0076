#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simpnet/random.hpp"
#include "simpnet/tensor.hpp"

namespace simpnet::nn {

/// A trainable leaf tensor. The gradient lives on value (value.grad()).
struct Parameter {
  std::string name;
  Tensor value;
};

enum class Activation { relu, prelu };

struct MLPSpec {
  std::vector<std::size_t> widths;
  Activation activation = Activation::prelu;
  bool final_activation = false;
};

struct DropoutContext {
  double rate = 0.0;
  DropoutMode mode = DropoutMode::off;
  Rng* rng = nullptr;
};

Tensor activation(const Tensor& x, Activation kind, const Tensor& slope);

/// Fully connected stack. PReLU layers own one shared slope each. Dropout
/// (when given) follows every hidden activation, never the output layer.
class MLP {
 public:
  MLP() = default;
  MLP(std::string name, MLPSpec spec, Rng& init);

  Tensor forward(const Tensor& x, const DropoutContext& hidden_dropout = {}) const;

  const MLPSpec& spec() const { return spec_; }
  const std::string& name() const { return name_; }
  std::size_t in_width() const { return spec_.widths.front(); }
  std::size_t out_width() const { return spec_.widths.back(); }
  std::size_t layer_count() const { return weights_.size(); }

  Parameter& weight(std::size_t layer) { return weights_[layer]; }
  Parameter& bias(std::size_t layer) { return biases_[layer]; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  std::string name_;
  MLPSpec spec_;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
  std::vector<Parameter> slopes_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

AdamState adam_init(const AdamConfig& config, std::span<Parameter* const> params);

/// One bias-corrected Adam update from the accumulated gradients.
void adam_step(AdamState& state, std::span<Parameter* const> params);

void zero_grad(std::span<Parameter* const> params);

// Weight file: {"format": "simpnet-weights", "version": 1, "metadata": {...},
//               "tensors": [{"name", "shape", "values"}, ...]}

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct TensorDocument {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<NamedTensor> tensors;
};

nlohmann::json tensors_to_json(const TensorDocument& doc);
TensorDocument tensors_from_json(const nlohmann::json& j);

/// Written to a temporary sibling and renamed into place.
void save_tensor_document(const std::filesystem::path& path, const TensorDocument& doc);
TensorDocument load_tensor_document(const std::filesystem::path& path);

/// Copies values from doc into params by name; every parameter must be
/// present with a matching shape.
void assign_parameters(std::span<Parameter* const> params, const TensorDocument& doc);
TensorDocument collect_parameters(std::span<const Parameter* const> params);

}  // namespace simpnet::nn
