#pragma once

// Dense double-precision tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle. Operations record onto the Tape that is active
// on the current thread (the most recently constructed live Tape); without an
// active tape, or when no input requires a gradient, results are plain values
// and nothing is recorded.
//
//   ad::Tape tape;
//   auto loss = ad::sum(ad::relu(ad::matmul(x, w)));
//   tape.backward(loss);            // w.grad() is now populated
//
// Shapes are row-major and at most rank 2. Broadcasting is limited to adding a
// [1 x n] bias row to an [m x n] matrix.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace astg::ad {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty unless gradients are tracked
  bool requires_grad = false;
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double v) { return from({1, 1}, {v}); }
  /// Leaf that accumulates gradients; gradient buffer starts at zero.
  static Tensor parameter(Shape shape, std::vector<double> values);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const { return impl_->value.size(); }

  std::span<const double> values() const { return impl_->value; }
  std::span<double> mutable_values() { return impl_->value; }
  double at(std::size_t r, std::size_t c) const { return impl_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  std::span<double> mutable_grad() { return impl_->grad; }
  void zero_grad();

  /// Deep copy of the values; the copy keeps `requires_grad` and a zeroed
  /// gradient buffer if the source had one.
  Tensor clone() const;

  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  friend class Tape;
  friend Tensor make_result_if(Shape, std::vector<double>, bool);

  std::shared_ptr<TensorImpl> impl_;
};

class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Tape receiving operations on this thread, or nullptr.
  static Tape* active();

  /// Propagates d(loss)/d(.) to every tracked tensor recorded here. Gradients
  /// of leaves accumulate across calls; intermediates are recomputed.
  /// Throws UsageError for a non-scalar or untracked loss.
  void backward(const Tensor& loss);

  std::size_t size() const { return entries_.size(); }

  // Used by the op implementations.
  void record(std::shared_ptr<TensorImpl> output, std::function<void()> backward_fn);

 private:
  struct Entry {
    std::shared_ptr<TensorImpl> output;
    std::function<void()> backward_fn;
  };
  std::vector<Entry> entries_;
  Tape* previous_ = nullptr;
};

/// backward() on the thread's active tape.
void backward(const Tensor& loss);

// Primitive operations. Shape mismatches throw DimensionError naming both
// shapes.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);  // same shape, or [m x n] + [1 x n]
Tensor sub(const Tensor& a, const Tensor& b);  // same shape
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise, same shape
Tensor scalar_mul(const Tensor& a, double s);
Tensor transpose(const Tensor& a);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis);
/// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
/// Reduces `axis`, keeping it with extent 1.
Tensor mean(const Tensor& a, std::size_t axis);
Tensor sum(const Tensor& a);  // all elements -> [1 x 1]
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor tanh(const Tensor& a);
Tensor softmax(const Tensor& a, std::size_t axis);

}  // namespace astg::ad
