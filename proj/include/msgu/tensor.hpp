#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace msgu {

#ifdef MSGU_DOUBLE
using Real = double;
#else
using Real = float;
#endif

inline constexpr bool kDoublePrecision = std::is_same_v<Real, double>;

/// Dense N x C x H x W extent. Every dimension is at least 1.
struct Shape {
  std::int64_t n = 1;
  std::int64_t c = 1;
  std::int64_t h = 1;
  std::int64_t w = 1;

  std::int64_t numel() const { return n * c * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor;

/// Callback receiving the gradient w.r.t. a node's output together with the
/// output values computed in forward.
using BackwardFn =
    std::function<void(std::span<const Real> grad_out, std::span<const Real> out)>;

/// One record of the reverse-mode tape. `seq` orders records: every input
/// of a record carries a smaller sequence number than its output.
struct Node {
  std::string op;
  std::vector<Tensor> inputs;
  BackwardFn backward;
  bool consumed = false;
};

struct TensorImpl {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty when absent
  bool requires_grad = false;
  std::shared_ptr<Node> grad_fn;
  std::uint64_t seq = 0;
  std::string name;
};

/// Shared handle onto a tensor node. Copies alias the same storage, which is
/// what lets the tape reach parameters by identity.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<Real> values, bool requires_grad = false);

  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor scalar(Real value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(impl_); }
  const Shape& shape() const { return impl().shape; }
  std::int64_t numel() const { return impl().shape.numel(); }

  std::span<Real> data() { return impl().data; }
  std::span<const Real> data() const { return impl().data; }
  Real item() const;
  Real at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const;
  Real& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w);

  bool requires_grad() const { return impl().requires_grad; }
  void set_requires_grad(bool value);

  bool has_grad() const { return !impl().grad.empty(); }
  std::span<const Real> grad() const { return impl().grad; }
  /// Allocates a zero gradient buffer on first use.
  std::span<Real> ensure_grad() const;
  void zero_grad() const;
  void clear_grad() { impl().grad.clear(); }

  const std::string& name() const { return impl().name; }
  void set_name(std::string name) { impl().name = std::move(name); }

  const std::shared_ptr<Node>& grad_fn() const { return impl().grad_fn; }
  bool is_leaf() const { return !impl().grad_fn; }
  std::uint64_t seq() const { return impl().seq; }

  /// Copy of the values, cut from the graph.
  Tensor detach() const;
  Tensor clone() const { return detach(); }

  /// Reverse sweep from this scalar. See msgu::backward.
  void backward() const;

  TensorImpl* raw() const { return impl_.get(); }
  bool same_node(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  TensorImpl& impl() const {
    if (!impl_) throw std::logic_error("use of undefined tensor");
    return *impl_;
  }
  std::shared_ptr<TensorImpl> impl_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using TensorList = std::vector<NamedTensor>;

/// Runs the reverse sweep from a scalar loss. Gradients accumulate into
/// every tensor on the graph that requires grad. The graph is consumed.
void backward(const Tensor& loss);

/// Gradient recording switch, per thread.
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

/// Builds an op result and, when recording applies, its tape record.
Tensor make_result(Shape shape, std::vector<Real> values, std::string op,
                   std::vector<Tensor> inputs, BackwardFn backward);

/// Cumulative count of tensor storages created by this process.
std::uint64_t tensor_allocations();

}  // namespace msgu
