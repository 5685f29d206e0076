#include "simpnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "simpnet/error.hpp"

namespace simpnet::nn {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

thread_local bool g_grad_enabled = true;

std::size_t product(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw InvalidArgument("tensor: shape must have at least one extent");
  for (std::size_t e : shape)
    if (e == 0) throw InvalidArgument("tensor: extents must be positive, got " + shape_str(shape));
}

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v)
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": produced a non-finite value");
}

std::size_t rows_of(const Shape& s) { return s.size() == 1 ? 1 : product(s) / s.back(); }
std::size_t cols_of(const Shape& s) { return s.back(); }

// Creates the result node. Parents and the backward closure are kept only
// when recording is on and some parent needs a gradient.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward, const char* op) {
  check_finite(value, op);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->leaf = false;
  const bool needs = g_grad_enabled && std::any_of(parents.begin(), parents.end(),
                                                   [](const NodePtr& p) { return p->requires_grad; });
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                          shape_str(b.shape()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  validate_shape(shape);
  if (values.size() != product(shape))
    throw InvalidArgument("tensor: " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
  check_finite(values, "tensor");
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  validate_shape(shape);
  const std::size_t n = product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::size() const { return node_->value.size(); }
std::size_t Tensor::rows() const { return rows_of(node_->shape); }
std::size_t Tensor::cols() const { return cols_of(node_->shape); }
std::span<const double> Tensor::values() const { return node_->value; }
std::span<double> Tensor::mutable_values() { return node_->value; }
bool Tensor::requires_grad() const { return node_->requires_grad; }

std::span<const double> Tensor::grad() const { return node_->ensure_grad(); }
std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }
void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

double Tensor::item() const {
  if (size() != 1) throw InvalidArgument("item: tensor holds " + std::to_string(size()) + " values");
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value, false); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) throw InvalidArgument("backward: loss must be a scalar");
  const NodePtr& root = loss.node();
  if (!root->requires_grad) return;
  if (root->leaf) {
    root->ensure_grad()[0] += 1.0;
    return;
  }

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !p->leaf && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad.assign(n->value.size(), 0.0);
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
  // Intermediate gradients are not part of the result.
  for (Node* n : order) std::vector<double>().swap(n->grad);
}

// ---------------------------------------------------------------------------
// Arithmetic

Tensor matmul(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k)
    throw InvalidArgument("matmul: inner extents differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  std::vector<double> out(n * m, 0.0);
  const double* A = a.values().data();
  const double* B = b.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* row = out.data() + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += av * brow[j];
    }
  }
  NodePtr an = a.node(), bn = b.node();
  return make_result({n, m}, std::move(out), {an, bn},
                     [an, bn, n, k, m](Node& self) {
                       const double* G = self.grad.data();
                       if (an->requires_grad) {
                         auto& ga = an->ensure_grad();
                         const double* B = bn->value.data();
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t p = 0; p < k; ++p) {
                             double s = 0.0;
                             for (std::size_t j = 0; j < m; ++j) s += G[i * m + j] * B[p * m + j];
                             ga[i * k + p] += s;
                           }
                       }
                       if (bn->requires_grad) {
                         auto& gb = bn->ensure_grad();
                         const double* A = an->value.data();
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t p = 0; p < k; ++p) {
                             const double av = A[i * k + p];
                             if (av == 0.0) continue;
                             for (std::size_t j = 0; j < m; ++j) gb[p * m + j] += av * G[i * m + j];
                           }
                       }
                     },
                     "matmul");
}

namespace {

template <class F, class DA, class DB>
Tensor elementwise(const Tensor& a, const Tensor& b, const char* op, F f, DA da, DB db) {
  require_same_shape(a, b, op);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a.values()[i], b.values()[i]);
  NodePtr an = a.node(), bn = b.node();
  return make_result(a.shape(), std::move(out), {an, bn},
                     [an, bn, da, db](Node& self) {
                       const std::size_t n = self.value.size();
                       if (an->requires_grad) {
                         auto& g = an->ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           g[i] += self.grad[i] * da(an->value[i], bn->value[i]);
                       }
                       if (bn->requires_grad) {
                         auto& g = bn->ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           g[i] += self.grad[i] * db(an->value[i], bn->value[i]);
                       }
                     },
                     op);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v *= factor;
  NodePtr xn = x.node();
  return make_result(x.shape(), std::move(out), {xn},
                     [xn, factor](Node& self) {
                       auto& g = xn->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += factor * self.grad[i];
                     },
                     "scale");
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
  const std::size_t n = x.rows(), c = x.cols();
  if (bias.size() != c)
    throw InvalidArgument("add_row: bias of " + std::to_string(bias.size()) + " values for " +
                          std::to_string(c) + " columns");
  std::vector<double> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bias.values()[j];
  NodePtr xn = x.node(), bn = bias.node();
  return make_result(x.shape(), std::move(out), {xn, bn},
                     [xn, bn, n, c](Node& self) {
                       if (xn->requires_grad) {
                         auto& g = xn->ensure_grad();
                         for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                       }
                       if (bn->requires_grad) {
                         auto& g = bn->ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
                       }
                     },
                     "add_row");
}

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.shape().size() != 2) throw InvalidArgument("affine: weight must be 2-D");
  return add_row(matmul(x, weight), bias);
}

// ---------------------------------------------------------------------------
// Activations

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  NodePtr xn = x.node();
  return make_result(x.shape(), std::move(out), {xn},
                     [xn](Node& self) {
                       auto& g = xn->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i)
                         if (xn->value[i] > 0.0) g[i] += self.grad[i];
                     },
                     "relu");
}

Tensor prelu(const Tensor& x, const Tensor& slope) {
  if (slope.size() != 1) throw InvalidArgument("prelu: slope must be a single value");
  const double s = slope.values()[0];
  std::vector<double> out(x.values().begin(), x.values().end());
  for (double& v : out) v = v > 0.0 ? v : s * v;
  NodePtr xn = x.node(), sn = slope.node();
  return make_result(x.shape(), std::move(out), {xn, sn},
                     [xn, sn](Node& self) {
                       const double s = sn->value[0];
                       if (xn->requires_grad) {
                         auto& g = xn->ensure_grad();
                         for (std::size_t i = 0; i < g.size(); ++i)
                           g[i] += self.grad[i] * (xn->value[i] > 0.0 ? 1.0 : s);
                       }
                       if (sn->requires_grad) {
                         double acc = 0.0;
                         for (std::size_t i = 0; i < xn->value.size(); ++i)
                           if (xn->value[i] <= 0.0) acc += self.grad[i] * xn->value[i];
                         sn->ensure_grad()[0] += acc;
                       }
                     },
                     "prelu");
}

namespace {

void softmax_inplace(double* row, std::size_t c) {
  const double mx = *std::max_element(row, row + c);
  double z = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    row[j] = std::exp(row[j] - mx);
    z += row[j];
  }
  for (std::size_t j = 0; j < c; ++j) row[j] /= z;
}

// dS = P * (dP - rowsum(dP * P)) for one row.
void softmax_backward_row(const double* p, const double* dp, double* ds, std::size_t c) {
  double dot = 0.0;
  for (std::size_t j = 0; j < c; ++j) dot += dp[j] * p[j];
  for (std::size_t j = 0; j < c; ++j) ds[j] = p[j] * (dp[j] - dot);
}

}  // namespace

Tensor softmax_rows(const Tensor& x) {
  const std::size_t n = x.rows(), c = x.cols();
  std::vector<double> out(x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < n; ++i) softmax_inplace(out.data() + i * c, c);
  NodePtr xn = x.node();
  return make_result(x.shape(), std::move(out), {xn},
                     [xn, n, c](Node& self) {
                       auto& g = xn->ensure_grad();
                       std::vector<double> ds(c);
                       for (std::size_t i = 0; i < n; ++i) {
                         softmax_backward_row(self.value.data() + i * c, self.grad.data() + i * c,
                                              ds.data(), c);
                         for (std::size_t j = 0; j < c; ++j) g[i * c + j] += ds[j];
                       }
                     },
                     "softmax_rows");
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::size_t block) {
  const std::size_t nq = q.rows(), nk = k.rows(), dk = q.cols(), dv = v.cols();
  if (k.cols() != dk) throw InvalidArgument("attention: query and key widths differ");
  if (v.rows() != nk) throw InvalidArgument("attention: key and value row counts differ");
  std::size_t bq = nq, bk = nk;
  if (block > 0) {
    if (nq % block != 0 || nk % block != 0 || nq != nk)
      throw InvalidArgument("attention: row counts must be equal multiples of the block size");
    bq = bk = block;
  }
  const std::size_t groups = nq / bq;
  const double inv = 1.0 / std::sqrt(static_cast<double>(dk));
  const double* Q = q.values().data();
  const double* K = k.values().data();
  const double* V = v.values().data();

  // Attention weights are kept for backward.
  auto probs = std::make_shared<std::vector<double>>(nq * bk);
  std::vector<double> out(nq * dv, 0.0);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < bq; ++i) {
      const std::size_t qi = g * bq + i;
      double* p = probs->data() + qi * bk;
      for (std::size_t j = 0; j < bk; ++j) {
        const std::size_t kj = g * bk + j;
        double s = 0.0;
        for (std::size_t d = 0; d < dk; ++d) s += Q[qi * dk + d] * K[kj * dk + d];
        p[j] = s * inv;
      }
      softmax_inplace(p, bk);
      double* o = out.data() + qi * dv;
      for (std::size_t j = 0; j < bk; ++j) {
        const double w = p[j];
        const double* vrow = V + (g * bk + j) * dv;
        for (std::size_t d = 0; d < dv; ++d) o[d] += w * vrow[d];
      }
    }
  }

  NodePtr qn = q.node(), kn = k.node(), vn = v.node();
  return make_result({nq, dv}, std::move(out), {qn, kn, vn},
                     [qn, kn, vn, probs, groups, bq, bk, dk, dv, inv](Node& self) {
                       const double* G = self.grad.data();
                       const double* Q = qn->value.data();
                       const double* K = kn->value.data();
                       const double* V = vn->value.data();
                       std::vector<double> dp(bk), ds(bk);
                       for (std::size_t g = 0; g < groups; ++g) {
                         for (std::size_t i = 0; i < bq; ++i) {
                           const std::size_t qi = g * bq + i;
                           const double* p = probs->data() + qi * bk;
                           const double* go = G + qi * dv;
                           for (std::size_t j = 0; j < bk; ++j) {
                             const double* vrow = V + (g * bk + j) * dv;
                             double s = 0.0;
                             for (std::size_t d = 0; d < dv; ++d) s += go[d] * vrow[d];
                             dp[j] = s;
                           }
                           if (vn->requires_grad) {
                             auto& gv = vn->ensure_grad();
                             for (std::size_t j = 0; j < bk; ++j) {
                               double* gvrow = gv.data() + (g * bk + j) * dv;
                               for (std::size_t d = 0; d < dv; ++d) gvrow[d] += p[j] * go[d];
                             }
                           }
                           softmax_backward_row(p, dp.data(), ds.data(), bk);
                           if (qn->requires_grad) {
                             auto& gq = qn->ensure_grad();
                             for (std::size_t j = 0; j < bk; ++j) {
                               const double w = ds[j] * inv;
                               const double* krow = K + (g * bk + j) * dk;
                               for (std::size_t d = 0; d < dk; ++d) gq[qi * dk + d] += w * krow[d];
                             }
                           }
                           if (kn->requires_grad) {
                             auto& gk = kn->ensure_grad();
                             for (std::size_t j = 0; j < bk; ++j) {
                               const double w = ds[j] * inv;
                               double* gkrow = gk.data() + (g * bk + j) * dk;
                               for (std::size_t d = 0; d < dk; ++d) gkrow[d] += w * Q[qi * dk + d];
                             }
                           }
                         }
                       }
                     },
                     "scaled_dot_attention");
}

Tensor dropout(const Tensor& x, double rate, Rng& rng, DropoutMode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout: rate must lie in [0, 1)");
  if (mode == DropoutMode::off || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  auto mask = std::make_shared<std::vector<double>>(x.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.bernoulli(rate) ? 0.0 : keep_scale;
    out[i] = x.values()[i] * (*mask)[i];
  }
  NodePtr xn = x.node();
  return make_result(x.shape(), std::move(out), {xn},
                     [xn, mask](Node& self) {
                       auto& g = xn->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * (*mask)[i];
                     },
                     "dropout");
}

// ---------------------------------------------------------------------------
// Structure

Tensor reshape(const Tensor& x, Shape shape) {
  validate_shape(shape);
  if (product(shape) != x.size())
    throw InvalidArgument("reshape: " + shape_str(x.shape()) + " cannot become " + shape_str(shape));
  std::vector<double> out(x.values().begin(), x.values().end());
  NodePtr xn = x.node();
  return make_result(std::move(shape), std::move(out), {xn},
                     [xn](Node& self) {
                       auto& g = xn->ensure_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                     },
                     "reshape");
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  const std::size_t n = a.rows(), ca = a.cols(), cb = b.cols();
  if (b.rows() != n) throw InvalidArgument("concat_cols: row counts differ");
  std::vector<double> out(n * (ca + cb));
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.values().data() + i * ca, ca, out.data() + i * (ca + cb));
    std::copy_n(b.values().data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
  }
  NodePtr an = a.node(), bn = b.node();
  return make_result({n, ca + cb}, std::move(out), {an, bn},
                     [an, bn, n, ca, cb](Node& self) {
                       const std::size_t c = ca + cb;
                       if (an->requires_grad) {
                         auto& g = an->ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < ca; ++j) g[i * ca + j] += self.grad[i * c + j];
                       }
                       if (bn->requires_grad) {
                         auto& g = bn->ensure_grad();
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < cb; ++j) g[i * cb + j] += self.grad[i * c + ca + j];
                       }
                     },
                     "concat_cols");
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  const std::size_t c = x.cols(), n = x.rows();
  std::vector<double> out(index.size() * c);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= n) throw InvalidArgument("gather_rows: index out of range");
    std::copy_n(x.values().data() + index[i] * c, c, out.data() + i * c);
  }
  NodePtr xn = x.node();
  auto idx = std::make_shared<std::vector<std::size_t>>(index.begin(), index.end());
  return make_result({index.size(), c}, std::move(out), {xn},
                     [xn, idx, c](Node& self) {
                       auto& g = xn->ensure_grad();
                       for (std::size_t i = 0; i < idx->size(); ++i)
                         for (std::size_t j = 0; j < c; ++j) g[(*idx)[i] * c + j] += self.grad[i * c + j];
                     },
                     "gather_rows");
}

Tensor scatter_add_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t out_rows) {
  const std::size_t c = x.cols();
  if (index.size() != x.rows()) throw InvalidArgument("scatter_add_rows: one index per input row required");
  if (out_rows == 0) throw InvalidArgument("scatter_add_rows: out_rows must be positive");
  std::vector<double> out(out_rows * c, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= out_rows) throw InvalidArgument("scatter_add_rows: index out of range");
    for (std::size_t j = 0; j < c; ++j) out[index[i] * c + j] += x.values()[i * c + j];
  }
  NodePtr xn = x.node();
  auto idx = std::make_shared<std::vector<std::size_t>>(index.begin(), index.end());
  return make_result({out_rows, c}, std::move(out), {xn},
                     [xn, idx, c](Node& self) {
                       auto& g = xn->ensure_grad();
                       for (std::size_t i = 0; i < idx->size(); ++i)
                         for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[(*idx)[i] * c + j];
                     },
                     "scatter_add_rows");
}

Tensor sum(const Tensor& x) {
  const double s = std::accumulate(x.values().begin(), x.values().end(), 0.0);
  NodePtr xn = x.node();
  return make_result({1}, {s}, {xn},
                     [xn](Node& self) {
                       auto& g = xn->ensure_grad();
                       for (double& v : g) v += self.grad[0];
                     },
                     "sum");
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  const std::size_t n = pred.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred.values()[i] - target.values()[i];
    s += d * d;
  }
  NodePtr pn = pred.node(), tn = target.node();
  return make_result({1}, {s / static_cast<double>(n)}, {pn},
                     [pn, tn, n](Node& self) {
                       auto& g = pn->ensure_grad();
                       const double f = 2.0 * self.grad[0] / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) g[i] += f * (pn->value[i] - tn->value[i]);
                     },
                     "mse_loss");
}

}  // namespace simpnet::nn
