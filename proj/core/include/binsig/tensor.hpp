#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "binsig/parallel.hpp"

namespace binsig {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (const std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {

// One entry of the recorded computation: value, inputs, and a closure that
// pushes this node's gradient into its inputs. The record is topologically
// ordered by construction (define-by-run).
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  bool consumed = false;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void(TensorNode&)> backprop;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

}  // namespace detail

// Dense n-d array with optional reverse-mode gradient. Handles share the
// underlying node; parameter tensors stay alive across many recorded graphs.
template <typename T>
class Tensor {
 public:
  using Node = detail::TensorNode<T>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    return filled(std::move(shape), T(0), requires_grad);
  }

  static Tensor filled(Shape shape, T v, bool requires_grad = false) {
    auto node = std::make_shared<Node>();
    node->value.assign(shape_numel(shape), v);
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return Tensor(node);
  }

  static Tensor from_vector(Shape shape, std::vector<T> data, bool requires_grad = false) {
    if (shape_numel(shape) != data.size()) {
      throw std::invalid_argument("tensor data size " + std::to_string(data.size()) +
                                  " does not match shape " + shape_str(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->value = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(node);
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape[i]; }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  std::span<const T> values() const { return {node_->value.data(), node_->value.size()}; }
  std::span<T> mutable_values() { return {node_->value.data(), node_->value.size()}; }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const {
    if (!has_grad()) throw std::logic_error("tensor has no gradient");
    return {node_->grad.data(), node_->grad.size()};
  }
  void zero_grad() {
    if (node_->requires_grad) node_->grad.assign(node_->value.size(), T(0));
  }

  T item() const {
    if (numel() != 1) throw std::logic_error("item() on tensor of shape " + shape_str(shape()));
    return node_->value[0];
  }

  // Reverse pass from a scalar. Consumes the recorded graph: calling it a
  // second time on the same recording throws.
  void backward() {
    if (numel() != 1) {
      throw std::logic_error("backward() requires a scalar loss, got shape " +
                             shape_str(shape()));
    }
    if (!node_->requires_grad) {
      throw std::logic_error("backward() on a tensor that does not require grad");
    }
    if (node_->consumed) {
      throw std::logic_error("backward() called twice without re-recording the graph");
    }

    // Topological order via iterative DFS.
    std::vector<Node*> order;
    std::vector<std::pair<Node*, std::size_t>> stack;
    std::vector<Node*> seen;
    const auto visited = [&](Node* n) {
      return std::find(seen.begin(), seen.end(), n) != seen.end();
    };
    stack.emplace_back(node_.get(), 0);
    seen.push_back(node_.get());
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->inputs.size()) {
        Node* child = n->inputs[idx].get();
        ++idx;
        if (child->requires_grad && !visited(child)) {
          seen.push_back(child);
          stack.emplace_back(child, 0);
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }

    node_->ensure_grad();
    node_->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node* n = *it;
      if (n->backprop) {
        n->backprop(*n);
        n->backprop = nullptr;
        n->consumed = true;
      }
    }
    node_->consumed = true;
  }

  std::shared_ptr<Node> node_ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> value, std::vector<Tensor<T>> inputs,
                  std::function<void(TensorNode<T>&)> backprop) {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool rg = false;
  for (const auto& in : inputs) rg = rg || in.requires_grad();
  node->requires_grad = rg;
  if (rg) {
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node_ptr());
    node->backprop = std::move(backprop);
  }
  return Tensor<T>(node);
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
  }
}

}  // namespace detail

// ---- elementwise ----

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return detail::make_op<T>(a.shape(), std::move(out), {a, b}, [](auto& n) {
    for (std::size_t j = 0; j < 2; ++j) {
      auto& in = *n.inputs[j];
      if (!in.requires_grad) continue;
      in.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) in.grad[i] += n.grad[i];
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return detail::make_op<T>(a.shape(), std::move(out), {a, b}, [](auto& n) {
    auto& ia = *n.inputs[0];
    auto& ib = *n.inputs[1];
    if (ia.requires_grad) {
      ia.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ia.grad[i] += n.grad[i] * ib.value[i];
    }
    if (ib.requires_grad) {
      ib.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ib.grad[i] += n.grad[i] * ia.value[i];
    }
  });
}

template <typename T>
Tensor<T> scale_shift(const Tensor<T>& x, T a, T b) {
  std::vector<T> out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * xv[i] + b;
  return detail::make_op<T>(x.shape(), std::move(out), {x}, [a](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) in.grad[i] += a * n.grad[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T a) {
  return scale_shift(x, a, T(0));
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, scale(b, T(-1)));
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
  return detail::make_op<T>(x.shape(), std::move(out), {x}, [](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (in.value[i] > T(0)) in.grad[i] += n.grad[i];
    }
  });
}

// Exact Gaussian-CDF form: x * Phi(x).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt2pi = 0.39894228040143267794;
  std::vector<T> out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = static_cast<double>(xv[i]);
    out[i] = static_cast<T>(v * 0.5 * (1.0 + std::erf(v * inv_sqrt2)));
  }
  return detail::make_op<T>(x.shape(), std::move(out), {x}, [](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const double v = static_cast<double>(in.value[i]);
      const double phi = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
      in.grad[i] += n.grad[i] * static_cast<T>(phi + v * pdf);
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  const auto xv = x.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = static_cast<double>(xv[i]);
    out[i] = static_cast<T>(1.0 / (1.0 + std::exp(-v)));
  }
  return detail::make_op<T>(x.shape(), std::move(out), {x}, [](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const T s = n.value[i];
      in.grad[i] += n.grad[i] * s * (T(1) - s);
    }
  });
}

// ---- reductions / shape ----

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  double acc = 0.0;
  for (const T v : x.values()) acc += static_cast<double>(v);
  return detail::make_op<T>({1}, {static_cast<T>(acc)}, {x}, [](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    const T g = n.grad[0];
    for (std::size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += g;
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(x.shape()) + " as " +
                                shape_str(shape));
  }
  std::vector<T> out(x.values().begin(), x.values().end());
  return detail::make_op<T>(std::move(shape), std::move(out), {x}, [](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) in.grad[i] += n.grad[i];
  });
}

// Right-aligned broadcast (missing leading dims and size-1 dims expand). The
// gradient sums over the expanded axes.
template <typename T>
Tensor<T> broadcast_to(const Tensor<T>& x, const Shape& target) {
  const Shape& src = x.shape();
  if (src.size() > target.size()) {
    throw std::invalid_argument("broadcast_to: rank of " + shape_str(src) + " exceeds " +
                                shape_str(target));
  }
  const std::size_t pad = target.size() - src.size();
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] != 1 && src[i] != target[pad + i]) {
      throw std::invalid_argument("broadcast_to: cannot broadcast " + shape_str(src) + " to " +
                                  shape_str(target));
    }
  }
  // Source strides against the target indexing.
  std::vector<std::size_t> sstride(target.size(), 0);
  {
    std::size_t stride = 1;
    for (std::size_t i = src.size(); i-- > 0;) {
      sstride[pad + i] = (src[i] == 1) ? 0 : stride;
      stride *= src[i];
    }
  }
  const std::size_t n = shape_numel(target);
  std::vector<T> out(n);
  const auto xv = x.values();
  std::vector<std::size_t> idx(target.size(), 0);
  std::size_t soff = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = xv[soff];
    for (std::size_t d = target.size(); d-- > 0;) {
      ++idx[d];
      soff += sstride[d];
      if (idx[d] < target[d]) break;
      soff -= sstride[d] * target[d];
      idx[d] = 0;
    }
  }
  Shape tshape = target;
  std::vector<std::size_t> strides = sstride;
  return detail::make_op<T>(std::move(tshape), std::move(out), {x},
                            [strides](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    std::vector<double> acc(in.value.size(), 0.0);
    std::vector<std::size_t> idx(n.shape.size(), 0);
    std::size_t soff = 0;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      acc[soff] += static_cast<double>(n.grad[i]);
      for (std::size_t d = n.shape.size(); d-- > 0;) {
        ++idx[d];
        soff += strides[d];
        if (idx[d] < n.shape[d]) break;
        soff -= strides[d] * n.shape[d];
        idx[d] = 0;
      }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) in.grad[i] += static_cast<T>(acc[i]);
  });
}

// ---- matmul ----

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                                shape_str(b.shape()));
  }
  const std::size_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
  std::vector<T> out(M * N);
  const auto av = a.values(), bv = b.values();
  parallel_for(M, [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      for (std::size_t n = 0; n < N; ++n) {
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          acc += static_cast<double>(av[m * K + k]) * static_cast<double>(bv[k * N + n]);
        }
        out[m * N + n] = static_cast<T>(acc);
      }
    }
  });
  return detail::make_op<T>({M, N}, std::move(out), {a, b}, [M, K, N](auto& n) {
    auto& ia = *n.inputs[0];
    auto& ib = *n.inputs[1];
    if (ia.requires_grad) {
      ia.ensure_grad();
      for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t k = 0; k < K; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < N; ++j) {
            acc += static_cast<double>(n.grad[m * N + j]) *
                   static_cast<double>(ib.value[k * N + j]);
          }
          ia.grad[m * K + k] += static_cast<T>(acc);
        }
      }
    }
    if (ib.requires_grad) {
      ib.ensure_grad();
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j < N; ++j) {
          double acc = 0.0;
          for (std::size_t m = 0; m < M; ++m) {
            acc += static_cast<double>(ia.value[m * K + k]) *
                   static_cast<double>(n.grad[m * N + j]);
          }
          ib.grad[k * N + j] += static_cast<T>(acc);
        }
      }
    }
  });
}

// ---- conv / pool ----

inline std::size_t conv1d_out_len(std::size_t L, int kernel, int stride, int pad) {
  const std::ptrdiff_t num =
      static_cast<std::ptrdiff_t>(L) + 2 * pad - kernel;
  if (num < 0) {
    throw std::invalid_argument("conv1d: input length " + std::to_string(L) +
                                " too short for kernel " + std::to_string(kernel) + " with pad " +
                                std::to_string(pad));
  }
  return static_cast<std::size_t>(num / stride) + 1;
}

// x: [B, Cin, L], w: [Cout, Cin/groups, k], bias: [Cout] or undefined.
// Symmetric zero padding, floor((L + 2 pad - k)/stride) + 1 outputs.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int stride,
                 int pad, int groups) {
  if (x.rank() != 3 || w.rank() != 3) {
    throw std::invalid_argument("conv1d: expected x [B,C,L] and w [Co,Ci/g,k], got " +
                                shape_str(x.shape()) + " and " + shape_str(w.shape()));
  }
  const std::size_t B = x.dim(0), Ci = x.dim(1), L = x.dim(2);
  const std::size_t Co = w.dim(0), Cig = w.dim(1), k = w.dim(2);
  if (groups < 1 || Ci % groups != 0 || Co % groups != 0 || Cig != Ci / groups) {
    throw std::invalid_argument("conv1d: group mismatch, x " + shape_str(x.shape()) + " w " +
                                shape_str(w.shape()) + " groups " + std::to_string(groups));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != Co)) {
    throw std::invalid_argument("conv1d: bias shape " + shape_str(bias.shape()) +
                                " does not match Cout " + std::to_string(Co));
  }
  const std::size_t Lout = conv1d_out_len(L, static_cast<int>(k), stride, pad);
  const std::size_t Cog = Co / groups;

  std::vector<T> out(B * Co * Lout);
  const auto xv = x.values(), wv = w.values();
  const T* biasv = bias.defined() ? bias.values().data() : nullptr;

  parallel_for(B * Co, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(Lout);
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t b = t / Co, co = t % Co;
      const std::size_t g = co / Cog;
      std::fill(acc.begin(), acc.end(), biasv ? static_cast<double>(biasv[co]) : 0.0);
      for (std::size_t cl = 0; cl < Cig; ++cl) {
        const T* xrow = xv.data() + (b * Ci + g * Cig + cl) * L;
        const T* wrow = wv.data() + (co * Cig + cl) * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double wgt = static_cast<double>(wrow[kk]);
          if (wgt == 0.0) continue;
          const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - pad;
          std::size_t lo_begin = 0;
          if (off < 0) {
            lo_begin = static_cast<std::size_t>((-off + stride - 1) / stride);
          }
          // last lo with lo*stride + off <= L-1
          const std::ptrdiff_t max_num = static_cast<std::ptrdiff_t>(L) - 1 - off;
          if (max_num < 0) continue;
          const std::size_t lo_end =
              std::min(Lout, static_cast<std::size_t>(max_num / stride) + 1);
          for (std::size_t lo = lo_begin; lo < lo_end; ++lo) {
            acc[lo] += wgt * static_cast<double>(
                                 xrow[static_cast<std::size_t>(
                                     static_cast<std::ptrdiff_t>(lo * stride) + off)]);
          }
        }
      }
      T* orow = out.data() + t * Lout;
      for (std::size_t lo = 0; lo < Lout; ++lo) orow[lo] = static_cast<T>(acc[lo]);
    }
  });

  std::vector<Tensor<T>> inputs = {x, w};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return detail::make_op<T>(
      {B, Co, Lout}, std::move(out), std::move(inputs),
      [B, Ci, L, Co, Cig, k, Lout, Cog, stride, pad, has_bias](auto& n) {
        auto& ix = *n.inputs[0];
        auto& iw = *n.inputs[1];
        const std::size_t groups = Co / Cog;
        (void)groups;
        if (ix.requires_grad) {
          ix.ensure_grad();
          parallel_for(B * Ci, [&](std::size_t begin, std::size_t end) {
            std::vector<double> acc(L);
            for (std::size_t t = begin; t < end; ++t) {
              const std::size_t b = t / Ci, ci = t % Ci;
              const std::size_t g = ci / Cig, cl = ci % Cig;
              std::fill(acc.begin(), acc.end(), 0.0);
              for (std::size_t col = 0; col < Cog; ++col) {
                const std::size_t co = g * Cog + col;
                const T* wrow = iw.value.data() + (co * Cig + cl) * k;
                const T* grow = n.grad.data() + (b * Co + co) * Lout;
                for (std::size_t kk = 0; kk < k; ++kk) {
                  const double wgt = static_cast<double>(wrow[kk]);
                  if (wgt == 0.0) continue;
                  const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - pad;
                  std::size_t lo_begin = 0;
                  if (off < 0) lo_begin = static_cast<std::size_t>((-off + stride - 1) / stride);
                  const std::ptrdiff_t max_num = static_cast<std::ptrdiff_t>(L) - 1 - off;
                  if (max_num < 0) continue;
                  const std::size_t lo_end =
                      std::min(Lout, static_cast<std::size_t>(max_num / stride) + 1);
                  for (std::size_t lo = lo_begin; lo < lo_end; ++lo) {
                    acc[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(lo * stride) +
                                                 off)] +=
                        wgt * static_cast<double>(grow[lo]);
                  }
                }
              }
              T* gx = ix.grad.data() + t * L;
              for (std::size_t li = 0; li < L; ++li) gx[li] += static_cast<T>(acc[li]);
            }
          });
        }
        if (iw.requires_grad) {
          iw.ensure_grad();
          parallel_for(Co, [&](std::size_t begin, std::size_t end) {
            for (std::size_t co = begin; co < end; ++co) {
              const std::size_t g = co / Cog;
              for (std::size_t cl = 0; cl < Cig; ++cl) {
                for (std::size_t kk = 0; kk < k; ++kk) {
                  const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(kk) - pad;
                  std::size_t lo_begin = 0;
                  if (off < 0) lo_begin = static_cast<std::size_t>((-off + stride - 1) / stride);
                  const std::ptrdiff_t max_num = static_cast<std::ptrdiff_t>(L) - 1 - off;
                  double acc = 0.0;
                  if (max_num >= 0) {
                    const std::size_t lo_end =
                        std::min(Lout, static_cast<std::size_t>(max_num / stride) + 1);
                    for (std::size_t b = 0; b < B; ++b) {
                      const T* xrow = ix.value.data() + (b * Ci + g * Cig + cl) * L;
                      const T* grow = n.grad.data() + (b * Co + co) * Lout;
                      for (std::size_t lo = lo_begin; lo < lo_end; ++lo) {
                        acc += static_cast<double>(
                                   xrow[static_cast<std::size_t>(
                                       static_cast<std::ptrdiff_t>(lo * stride) + off)]) *
                               static_cast<double>(grow[lo]);
                      }
                    }
                  }
                  iw.grad[(co * Cig + cl) * k + kk] += static_cast<T>(acc);
                }
              }
            }
          });
        }
        if (has_bias && n.inputs[2]->requires_grad) {
          auto& ibias = *n.inputs[2];
          ibias.ensure_grad();
          for (std::size_t co = 0; co < Co; ++co) {
            double acc = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
              const T* grow = n.grad.data() + (b * Co + co) * Lout;
              for (std::size_t lo = 0; lo < Lout; ++lo) acc += static_cast<double>(grow[lo]);
            }
            ibias.grad[co] += static_cast<T>(acc);
          }
        }
      });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad, int groups = 1) {
  return conv1d(x, w, Tensor<T>(), stride, pad, groups);
}

namespace detail {

inline std::size_t pool_out_len(std::size_t L, int kernel, int stride, int pad, bool ceil_mode) {
  const std::ptrdiff_t num = static_cast<std::ptrdiff_t>(L) + 2 * pad - kernel;
  std::size_t out;
  if (num < 0) {
    out = 1;  // single clipped window at the start
  } else if (ceil_mode) {
    out = static_cast<std::size_t>((num + stride - 1) / stride) + 1;
  } else {
    out = static_cast<std::size_t>(num / stride) + 1;
  }
  // Last window must start inside the (padded) input.
  while (out > 1 &&
         static_cast<std::ptrdiff_t>((out - 1) * stride) >= static_cast<std::ptrdiff_t>(L) + pad) {
    --out;
  }
  return out;
}

}  // namespace detail

// Padding positions are excluded from the max (as if padded with -inf).
// Ties pick the earliest index.
template <typename T>
Tensor<T> max_pool1d(const Tensor<T>& x, int kernel, int stride, int pad = 0) {
  if (x.rank() != 3) {
    throw std::invalid_argument("max_pool1d: expected [B,C,L], got " + shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const std::size_t Lout = detail::pool_out_len(L, kernel, stride, pad, false);
  std::vector<T> out(B * C * Lout);
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(B * C * Lout);
  const auto xv = x.values();
  parallel_for(B * C, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const T* xrow = xv.data() + t * L;
      for (std::size_t lo = 0; lo < Lout; ++lo) {
        const std::ptrdiff_t wbegin =
            std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(lo * stride) - pad);
        const std::ptrdiff_t wend =
            std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(L),
                                     static_cast<std::ptrdiff_t>(lo * stride) - pad + kernel);
        std::size_t best = static_cast<std::size_t>(wbegin);
        for (std::ptrdiff_t li = wbegin + 1; li < wend; ++li) {
          if (xrow[li] > xrow[best]) best = static_cast<std::size_t>(li);
        }
        out[t * Lout + lo] = xrow[best];
        (*argmax)[t * Lout + lo] = static_cast<std::uint32_t>(best);
      }
    }
  });
  return detail::make_op<T>({B, C, Lout}, std::move(out), {x}, [argmax, L, Lout](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    const std::size_t rows = n.grad.size() / Lout;
    for (std::size_t t = 0; t < rows; ++t) {
      for (std::size_t lo = 0; lo < Lout; ++lo) {
        in.grad[t * L + (*argmax)[t * Lout + lo]] += n.grad[t * Lout + lo];
      }
    }
  });
}

// Unpadded average pooling; windows are clipped to the input and divide by
// the actual tap count, so ceil_mode tails stay well defined.
template <typename T>
Tensor<T> avg_pool1d(const Tensor<T>& x, int kernel, int stride, bool ceil_mode = false) {
  if (x.rank() != 3) {
    throw std::invalid_argument("avg_pool1d: expected [B,C,L], got " + shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  const std::size_t Lout = detail::pool_out_len(L, kernel, stride, 0, ceil_mode);
  std::vector<T> out(B * C * Lout);
  const auto xv = x.values();
  const int k = kernel, s = stride;
  parallel_for(B * C, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      const T* xrow = xv.data() + t * L;
      for (std::size_t lo = 0; lo < Lout; ++lo) {
        const std::size_t wbegin = lo * s;
        const std::size_t wend = std::min(L, wbegin + k);
        double acc = 0.0;
        for (std::size_t li = wbegin; li < wend; ++li) acc += static_cast<double>(xrow[li]);
        out[t * Lout + lo] = static_cast<T>(acc / static_cast<double>(wend - wbegin));
      }
    }
  });
  return detail::make_op<T>({B, C, Lout}, std::move(out), {x}, [L, Lout, k, s](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    const std::size_t rows = n.grad.size() / Lout;
    for (std::size_t t = 0; t < rows; ++t) {
      for (std::size_t lo = 0; lo < Lout; ++lo) {
        const std::size_t wbegin = lo * s;
        const std::size_t wend = std::min(L, wbegin + static_cast<std::size_t>(k));
        const T g = n.grad[t * Lout + lo] / static_cast<T>(wend - wbegin);
        for (std::size_t li = wbegin; li < wend; ++li) in.grad[t * L + li] += g;
      }
    }
  });
}

// [B,C,L] -> [B,C], mean over length.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  if (x.rank() != 3) {
    throw std::invalid_argument("global_avg_pool: expected [B,C,L], got " + shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
  std::vector<T> out(B * C);
  const auto xv = x.values();
  for (std::size_t t = 0; t < B * C; ++t) {
    double acc = 0.0;
    for (std::size_t li = 0; li < L; ++li) acc += static_cast<double>(xv[t * L + li]);
    out[t] = static_cast<T>(acc / static_cast<double>(L));
  }
  return detail::make_op<T>({B, C}, std::move(out), {x}, [L](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    for (std::size_t t = 0; t < n.grad.size(); ++t) {
      const T g = n.grad[t] / static_cast<T>(L);
      for (std::size_t li = 0; li < L; ++li) in.grad[t * L + li] += g;
    }
  });
}

// Row-wise log-softmax over the last dim of [B,C].
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x) {
  if (x.rank() != 2) {
    throw std::invalid_argument("log_softmax: expected [B,C], got " + shape_str(x.shape()));
  }
  const std::size_t B = x.dim(0), C = x.dim(1);
  std::vector<T> out(B * C);
  const auto xv = x.values();
  for (std::size_t b = 0; b < B; ++b) {
    const T* row = xv.data() + b * C;
    T m = row[0];
    for (std::size_t c = 1; c < C; ++c) m = std::max(m, row[c]);
    double lse = 0.0;
    for (std::size_t c = 0; c < C; ++c) lse += std::exp(static_cast<double>(row[c] - m));
    const double logz = static_cast<double>(m) + std::log(lse);
    for (std::size_t c = 0; c < C; ++c) {
      out[b * C + c] = static_cast<T>(static_cast<double>(row[c]) - logz);
    }
  }
  return detail::make_op<T>({B, C}, std::move(out), {x}, [B, C](auto& n) {
    auto& in = *n.inputs[0];
    in.ensure_grad();
    for (std::size_t b = 0; b < B; ++b) {
      double gsum = 0.0;
      for (std::size_t c = 0; c < C; ++c) gsum += static_cast<double>(n.grad[b * C + c]);
      for (std::size_t c = 0; c < C; ++c) {
        const double p = std::exp(static_cast<double>(n.value[b * C + c]));
        in.grad[b * C + c] +=
            static_cast<T>(static_cast<double>(n.grad[b * C + c]) - p * gsum);
      }
    }
  });
}

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace binsig
