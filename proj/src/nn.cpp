#include "simpnet/nn.hpp"

#include <cmath>
#include <map>

#include "simpnet/error.hpp"
#include "simpnet/formats.hpp"

namespace simpnet::nn {

Tensor activation(const Tensor& x, Activation kind, const Tensor& slope) {
  return kind == Activation::relu ? relu(x) : prelu(x, slope);
}

MLP::MLP(std::string name, MLPSpec spec, Rng& init) : name_(std::move(name)), spec_(std::move(spec)) {
  if (spec_.widths.size() < 2) throw InvalidArgument("MLP '" + name_ + "': needs at least two widths");
  for (std::size_t w : spec_.widths)
    if (w == 0) throw InvalidArgument("MLP '" + name_ + "': widths must be positive");
  const std::size_t layers = spec_.widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t in = spec_.widths[l], out = spec_.widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(in * out), b(out);
    for (double& v : w) v = init.uniform(-bound, bound);
    for (double& v : b) v = init.uniform(-bound, bound);
    const std::string prefix = name_ + "." + std::to_string(l);
    weights_.push_back({prefix + ".weight", Tensor({in, out}, std::move(w), true)});
    biases_.push_back({prefix + ".bias", Tensor({out}, std::move(b), true)});
    const bool activated = l + 1 < layers || spec_.final_activation;
    if (activated && spec_.activation == Activation::prelu)
      slopes_.push_back({prefix + ".slope", Tensor({1}, {0.25}, true)});
  }
}

Tensor MLP::forward(const Tensor& x, const DropoutContext& hidden_dropout) const {
  if (x.cols() != in_width())
    throw InvalidArgument("MLP '" + name_ + "': input width " + std::to_string(x.cols()) + ", expected " +
                          std::to_string(in_width()));
  const std::size_t layers = weights_.size();
  Tensor h = x;
  std::size_t slope = 0;
  const Tensor none;
  for (std::size_t l = 0; l < layers; ++l) {
    h = affine(h, weights_[l].value, biases_[l].value);
    const bool hidden = l + 1 < layers;
    if (hidden || spec_.final_activation) {
      h = spec_.activation == Activation::prelu ? prelu(h, slopes_[slope++].value) : relu(h);
    }
    if (hidden && hidden_dropout.mode != DropoutMode::off && hidden_dropout.rate > 0.0) {
      if (hidden_dropout.rng == nullptr) throw InvalidArgument("MLP: dropout requested without a generator");
      h = dropout(h, hidden_dropout.rate, *hidden_dropout.rng, hidden_dropout.mode);
    }
  }
  return h;
}

std::vector<Parameter*> MLP::parameters() {
  std::vector<Parameter*> out;
  std::size_t slope = 0;
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
    const bool activated = l + 1 < layers || spec_.final_activation;
    if (activated && spec_.activation == Activation::prelu) out.push_back(&slopes_[slope++]);
  }
  return out;
}

std::vector<const Parameter*> MLP::parameters() const {
  auto mut = const_cast<MLP*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

AdamState adam_init(const AdamConfig& config, std::span<Parameter* const> params) {
  AdamState s;
  s.config = config;
  for (const Parameter* p : params) {
    s.m.emplace_back(p->value.size(), 0.0);
    s.v.emplace_back(p->value.size(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, std::span<Parameter* const> params) {
  if (state.m.size() != params.size()) throw InvalidArgument("adam_step: state does not match parameters");
  ++state.step;
  const AdamConfig& c = state.config;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    auto values = p.value.mutable_values();
    auto grad = p.value.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (m.size() != values.size()) throw InvalidArgument("adam_step: moment shape mismatch for " + p.name);
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * grad[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
    }
  }
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->value.zero_grad();
}

nlohmann::json tensors_to_json(const TensorDocument& doc) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const NamedTensor& t : doc.tensors)
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"values", t.values}});
  return {{"format", "simpnet-weights"}, {"version", 1}, {"metadata", doc.metadata}, {"tensors", tensors}};
}

TensorDocument tensors_from_json(const nlohmann::json& j) {
  expect_document(j, "simpnet-weights", 1);
  TensorDocument doc;
  try {
    doc.metadata = j.value("metadata", nlohmann::json::object());
    for (const auto& t : j.at("tensors")) {
      NamedTensor nt{t.at("name").get<std::string>(), t.at("shape").get<Shape>(),
                     t.at("values").get<std::vector<double>>()};
      std::size_t n = 1;
      for (std::size_t e : nt.shape) n *= e;
      if (nt.shape.empty() || n != nt.values.size())
        throw FormatError("weight file: tensor '" + nt.name + "' has inconsistent shape");
      doc.tensors.push_back(std::move(nt));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("weight file: ") + e.what());
  }
  return doc;
}

void save_tensor_document(const std::filesystem::path& path, const TensorDocument& doc) {
  write_json_atomic(path, tensors_to_json(doc));
}

TensorDocument load_tensor_document(const std::filesystem::path& path) {
  return tensors_from_json(read_json_file(path));
}

void assign_parameters(std::span<Parameter* const> params, const TensorDocument& doc) {
  std::map<std::string, const NamedTensor*> by_name;
  for (const NamedTensor& t : doc.tensors) by_name[t.name] = &t;
  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw FormatError("weight file: missing tensor '" + p->name + "'");
    if (it->second->shape != p->value.shape())
      throw FormatError("weight file: tensor '" + p->name + "' has the wrong shape");
    auto dst = p->value.mutable_values();
    std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
  }
}

TensorDocument collect_parameters(std::span<const Parameter* const> params) {
  TensorDocument doc;
  for (const Parameter* p : params)
    doc.tensors.push_back({p->name, p->value.shape(), {p->value.values().begin(), p->value.values().end()}});
  return doc;
}

}  // namespace simpnet::nn
