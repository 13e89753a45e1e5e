#include "msgu/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include <fmt/format.h>

namespace msgu {
namespace {

std::atomic<std::uint64_t> g_next_seq{1};
std::atomic<std::uint64_t> g_allocations{0};
thread_local bool t_grad_enabled = true;

std::shared_ptr<TensorImpl> new_impl(Shape shape, std::vector<Real> values,
                                     bool requires_grad) {
  if (shape.n < 1 || shape.c < 1 || shape.h < 1 || shape.w < 1) {
    throw std::invalid_argument("tensor dims must be >= 1, got " + shape.str());
  }
  if (static_cast<std::int64_t>(values.size()) != shape.numel()) {
    throw std::invalid_argument(fmt::format("tensor {} needs {} values, got {}", shape.str(),
                                            shape.numel(), values.size()));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = shape;
  impl->data = std::move(values);
  impl->requires_grad = requires_grad;
  impl->seq = g_next_seq.fetch_add(1, std::memory_order_relaxed);
  g_allocations.fetch_add(1, std::memory_order_relaxed);
  return impl;
}

}  // namespace

std::string Shape::str() const { return fmt::format("[{},{},{},{}]", n, c, h, w); }

Tensor::Tensor(Shape shape, bool requires_grad)
    : impl_(new_impl(shape, std::vector<Real>(static_cast<std::size_t>(std::max<std::int64_t>(
                                                   shape.numel(), 0))),
                     requires_grad)) {}

Tensor::Tensor(Shape shape, std::vector<Real> values, bool requires_grad)
    : impl_(new_impl(shape, std::move(values), requires_grad)) {}

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
  return Tensor(shape, std::vector<Real>(static_cast<std::size_t>(shape.numel()), value),
                requires_grad);
}

Tensor Tensor::scalar(Real value, bool requires_grad) {
  return Tensor(Shape{}, std::vector<Real>{value}, requires_grad);
}

Real Tensor::item() const {
  if (numel() != 1) throw std::logic_error("item() on non-scalar tensor " + shape().str());
  return impl().data[0];
}

Real Tensor::at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
  const Shape& s = shape();
  return impl().data[static_cast<std::size_t>(((n * s.c + c) * s.h + h) * s.w + w)];
}

Real& Tensor::at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
  const Shape& s = shape();
  return impl().data[static_cast<std::size_t>(((n * s.c + c) * s.h + h) * s.w + w)];
}

void Tensor::set_requires_grad(bool value) {
  if (!is_leaf() && !value) {
    throw std::logic_error("cannot clear requires_grad on a non-leaf tensor; detach() it");
  }
  impl().requires_grad = value;
}

std::span<Real> Tensor::ensure_grad() const {
  auto& impl_ref = impl();
  if (impl_ref.grad.empty()) impl_ref.grad.assign(impl_ref.data.size(), Real(0));
  return impl_ref.grad;
}

void Tensor::zero_grad() const {
  auto& g = impl().grad;
  std::fill(g.begin(), g.end(), Real(0));
}

Tensor Tensor::detach() const {
  Tensor out(shape(), impl().data, false);
  out.set_name(name());
  return out;
}

void Tensor::backward() const { msgu::backward(*this); }

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

std::uint64_t tensor_allocations() { return g_allocations.load(std::memory_order_relaxed); }

Tensor make_result(Shape shape, std::vector<Real> values, std::string op,
                   std::vector<Tensor> inputs, BackwardFn backward_fn) {
  bool needs_grad = false;
  if (t_grad_enabled) {
    needs_grad = std::any_of(inputs.begin(), inputs.end(),
                             [](const Tensor& t) { return t.requires_grad(); });
  }
  Tensor out(shape, std::move(values), needs_grad);
  if (needs_grad) {
    auto node = std::make_shared<Node>();
    node->op = std::move(op);
    node->inputs = std::move(inputs);
    node->backward = std::move(backward_fn);
    out.raw()->grad_fn = std::move(node);
  }
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.defined()) throw std::logic_error("backward() on undefined tensor");
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss, got shape " +
                                loss.shape().str());
  }
  if (!loss.requires_grad()) {
    throw std::logic_error("backward() on a loss that does not require grad");
  }

  // Collect the reachable graph. Sorting by creation sequence (descending)
  // yields a reverse topological order.
  std::vector<Tensor> order;
  std::unordered_set<const TensorImpl*> seen;
  std::vector<Tensor> stack{loss};
  while (!stack.empty()) {
    Tensor t = std::move(stack.back());
    stack.pop_back();
    if (!seen.insert(t.raw()).second) continue;
    if (const auto& fn = t.grad_fn()) {
      if (fn->consumed) {
        throw std::logic_error("graph already consumed by an earlier backward() (op '" + fn->op +
                               "'); run forward again");
      }
      for (const Tensor& in : fn->inputs) {
        if (in.requires_grad()) stack.push_back(in);
      }
    }
    order.push_back(std::move(t));
  }
  std::sort(order.begin(), order.end(),
            [](const Tensor& a, const Tensor& b) { return a.seq() > b.seq(); });

  Tensor root = loss;
  root.ensure_grad()[0] += Real(1);

  for (Tensor& t : order) {
    const auto& fn = t.grad_fn();
    if (!fn) continue;
    t.ensure_grad();
    fn->backward(t.grad(), t.data());
    fn->consumed = true;
    fn->backward = nullptr;
    fn->inputs.clear();
  }
}

}  // namespace msgu
