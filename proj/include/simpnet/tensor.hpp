#pragma once

// Dense row-major tensors with tape-free reverse-mode differentiation.
//
// Every op returns a new Tensor whose node remembers its inputs and a
// backward closure whenever gradient recording is enabled and some input
// requires a gradient. backward() walks that graph in reverse topological
// order. Ops are 2-D: a tensor of rank r is viewed as rows() x cols() where
// cols() is the last extent.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "simpnet/random.hpp"

namespace simpnet::nn {

using Shape = std::vector<std::size_t>;

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  /// Direct write access, for optimizers and weight loading. Does not
  /// invalidate recorded graphs; callers must not mutate mid-backward.
  std::span<double> mutable_values();

  bool requires_grad() const;
  /// Gradient buffer (zeros if nothing accumulated yet).
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  double item() const;
  double at(std::size_t r, std::size_t c) const;

  /// Copy of the values with no graph attached.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

namespace detail {
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};
}  // namespace detail

/// Whether new ops record their inputs for backward on this thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Accumulates d(loss)/d(leaf) into every leaf that requires a gradient.
/// loss must hold exactly one value.
void backward(const Tensor& loss);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// x (n x c) + bias (c) broadcast over rows.
Tensor add_row(const Tensor& x, const Tensor& bias);
/// x W + b with x: n x in, W: in x out, b: out.
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor relu(const Tensor& x);
/// max(x, 0) + slope * min(x, 0); slope is a single shared scalar.
Tensor prelu(const Tensor& x, const Tensor& slope);

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);

/// softmax_rows(Q K^T / sqrt(d_k)) V. With block > 0 the rows are grouped
/// into consecutive blocks of `block` rows and each query block attends only
/// to the matching key/value block (batched attention).
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t block = 0);

enum class DropoutMode { train, sample, off };

/// Zeroes entries with probability rate and scales survivors by 1/(1-rate)
/// in train and sample modes; identity when off.
Tensor dropout(const Tensor& x, double rate, Rng& rng, DropoutMode mode);

Tensor reshape(const Tensor& x, Shape shape);
/// [a | b] along columns; row counts must match.
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
/// out[index[i]] += x[i], processed in increasing i.
Tensor scatter_add_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t out_rows);

Tensor sum(const Tensor& x);
/// Mean of squared differences; target is treated as a constant.
Tensor mse_loss(const Tensor& pred, const Tensor& target);

}  // namespace simpnet::nn
