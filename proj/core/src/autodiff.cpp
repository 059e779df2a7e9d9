#include "astg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "astg/error.hpp"

namespace astg::ad {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? " x " : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// ---------------------------------------------------------------- Tensor

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double v) {
  auto impl = std::make_shared<TensorImpl>();
  impl->value.assign(element_count(shape), v);
  impl->shape = std::move(shape);
  return Tensor(std::move(impl));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  if (values.size() != element_count(shape)) {
    throw DimensionError("tensor: " + std::to_string(values.size()) +
                         " values do not fill shape " + shape_string(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->value = std::move(values);
  return Tensor(std::move(impl));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.impl_->requires_grad = true;
  t.impl_->grad.assign(t.impl_->value.size(), 0.0);
  return t;
}

std::size_t Tensor::rows() const {
  const auto& s = impl_->shape;
  return s.size() == 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const {
  const auto& s = impl_->shape;
  if (s.size() == 2) return s[1];
  return s.empty() ? 1 : s[0];
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item(): tensor of shape " + shape_string(shape()) + " is not a scalar");
  return impl_->value[0];
}

void Tensor::zero_grad() {
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  auto impl = std::make_shared<TensorImpl>(*impl_);
  std::fill(impl->grad.begin(), impl->grad.end(), 0.0);
  return Tensor(std::move(impl));
}

// ---------------------------------------------------------------- Tape

namespace {
thread_local Tape* g_active_tape = nullptr;
}  // namespace

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::shared_ptr<TensorImpl> output, std::function<void()> backward_fn) {
  entries_.push_back(Entry{std::move(output), std::move(backward_fn)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw UsageError("backward: loss must be a scalar, got shape " +
                     (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) throw UsageError("backward: loss is not tracked");

  for (auto& e : entries_) std::fill(e.output->grad.begin(), e.output->grad.end(), 0.0);
  loss.impl_->grad[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) it->backward_fn();
}

void backward(const Tensor& loss) {
  Tape* tape = Tape::active();
  if (tape == nullptr) throw UsageError("backward: no active tape on this thread");
  tape->backward(loss);
}

// ---------------------------------------------------------------- helpers

// Allocates an op result; tracked when a tape is active and any input is.
Tensor make_result_if(Shape shape, std::vector<double> values, bool inputs_tracked) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->value = std::move(values);
  if (inputs_tracked && Tape::active() != nullptr) {
    impl->requires_grad = true;
    impl->grad.assign(impl->value.size(), 0.0);
  }
  return Tensor(std::move(impl));
}

Tensor make_result(Shape shape, std::vector<double> values,
                   std::initializer_list<const Tensor*> inputs) {
  bool tracked = false;
  for (const Tensor* in : inputs) tracked = tracked || in->requires_grad();
  return make_result_if(std::move(shape), std::move(values), tracked);
}

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (!t.defined() || t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " +
                         (t.defined() ? shape_string(t.shape()) : std::string("<undefined>")));
  }
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                       " and " + shape_string(b.shape()));
}

template <class Fn>
void on_backward(const Tensor& out, Fn&& fn) {
  if (out.requires_grad()) Tape::active()->record(out.impl(), std::forward<Fn>(fn));
}

// Unary elementwise op with derivative expressed through input x and output y.
template <class F, class D>
Tensor unary(const Tensor& a, F f, D dfdx) {
  require_rank2(a, "unary");
  std::vector<double> v(a.size());
  const auto x = a.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(x[i]);
  Tensor out = make_result(a.shape(), std::move(v), {&a});
  on_backward(out, [ai = a.impl(), oi = out.impl(), dfdx]() {
    if (!ai->requires_grad) return;
    for (std::size_t i = 0; i < oi->value.size(); ++i) {
      ai->grad[i] += oi->grad[i] * dfdx(ai->value[i], oi->value[i]);
    }
  });
  return out;
}

}  // namespace

// ---------------------------------------------------------------- ops

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) mismatch("matmul", a, b);
  std::vector<double> v(m * n, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &v[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  Tensor out = make_result({m, n}, std::move(v), {&a, &b});
  on_backward(out, [ai = a.impl(), bi = b.impl(), oi = out.impl(), m, k, n]() {
    const auto& g = oi->grad;
    if (ai->requires_grad) {
      // dA = dOut * B^T
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bi->value[p * n + j];
          ai->grad[i * k + p] += acc;
        }
      }
    }
    if (bi->requires_grad) {
      // dB = A^T * dOut
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = ai->value[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) bi->grad[p * n + j] += aip * g[i * n + j];
        }
      }
    }
  });
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_rank2(a, "add");
  require_rank2(b, "add");
  const bool same = a.shape() == b.shape();
  const bool bias = !same && b.rows() == 1 && b.cols() == a.cols();
  if (!same && !bias) mismatch("add", a, b);
  const std::size_t n = a.cols();
  std::vector<double> v(a.values().begin(), a.values().end());
  const auto bv = b.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += bv[same ? i : i % n];
  Tensor out = make_result(a.shape(), std::move(v), {&a, &b});
  on_backward(out, [ai = a.impl(), bi = b.impl(), oi = out.impl(), same, n]() {
    const auto& g = oi->grad;
    if (ai->requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) ai->grad[i] += g[i];
    }
    if (bi->requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) bi->grad[same ? i : i % n] += g[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_rank2(a, "sub");
  require_rank2(b, "sub");
  if (a.shape() != b.shape()) mismatch("sub", a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  Tensor out = make_result(a.shape(), std::move(v), {&a, &b});
  on_backward(out, [ai = a.impl(), bi = b.impl(), oi = out.impl()]() {
    const auto& g = oi->grad;
    if (ai->requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) ai->grad[i] += g[i];
    }
    if (bi->requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) bi->grad[i] -= g[i];
    }
  });
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "mul");
  require_rank2(b, "mul");
  if (a.shape() != b.shape()) mismatch("mul", a, b);
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  Tensor out = make_result(a.shape(), std::move(v), {&a, &b});
  on_backward(out, [ai = a.impl(), bi = b.impl(), oi = out.impl()]() {
    const auto& g = oi->grad;
    if (ai->requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) ai->grad[i] += g[i] * bi->value[i];
    }
    if (bi->requires_grad) {
      for (std::size_t i = 0; i < g.size(); ++i) bi->grad[i] += g[i] * ai->value[i];
    }
  });
  return out;
}

Tensor scalar_mul(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) v[j * m + i] = a.values()[i * n + j];
  }
  Tensor out = make_result({n, m}, std::move(v), {&a});
  on_backward(out, [ai = a.impl(), oi = out.impl(), m, n]() {
    if (!ai->requires_grad) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) ai->grad[i * n + j] += oi->grad[j * m + i];
    }
  });
  return out;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  if (axis > 1) throw DimensionError("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_rank2(p, "concat");
  const Tensor& first = parts.front();
  std::size_t total = 0;
  for (const auto& p : parts) {
    const std::size_t other = axis == 0 ? p.cols() : p.rows();
    if (other != (axis == 0 ? first.cols() : first.rows())) mismatch("concat", first, p);
    total += axis == 0 ? p.rows() : p.cols();
  }
  const std::size_t rows = axis == 0 ? total : first.rows();
  const std::size_t cols = axis == 0 ? first.cols() : total;
  std::vector<double> v(rows * cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto pv = p.values();
    if (axis == 0) {
      std::copy(pv.begin(), pv.end(), v.begin() + static_cast<std::ptrdiff_t>(offset * cols));
      offset += p.rows();
    } else {
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(r * p.cols()), p.cols(),
                    v.begin() + static_cast<std::ptrdiff_t>(r * cols + offset));
      }
      offset += p.cols();
    }
  }

  bool any_grad = false;
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  for (const auto& p : parts) {
    any_grad = any_grad || p.requires_grad();
    inputs.push_back(p.impl());
  }
  Tensor out = make_result_if({rows, cols}, std::move(v), any_grad);
  on_backward(out, [inputs, oi = out.impl(), axis, cols]() {
    std::size_t off = 0;
    for (const auto& in : inputs) {
      const std::size_t pr = in->shape[0], pc = in->shape[1];
      if (in->requires_grad) {
        for (std::size_t r = 0; r < pr; ++r) {
          for (std::size_t c = 0; c < pc; ++c) {
            const std::size_t idx = axis == 0 ? (off + r) * cols + c : r * cols + off + c;
            in->grad[r * pc + c] += oi->grad[idx];
          }
        }
      }
      off += axis == 0 ? pr : pc;
    }
  });
  return out;
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  require_rank2(a, "slice");
  if (axis > 1) throw DimensionError("slice: axis must be 0 or 1");
  const std::size_t extent = axis == 0 ? a.rows() : a.cols();
  if (begin >= end || end > extent) {
    throw DimensionError("slice: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for shape " + shape_string(a.shape()));
  }
  const std::size_t cols = a.cols();
  const std::size_t out_rows = axis == 0 ? end - begin : a.rows();
  const std::size_t out_cols = axis == 0 ? cols : end - begin;
  std::vector<double> v(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      const std::size_t src = axis == 0 ? (begin + r) * cols + c : r * cols + begin + c;
      v[r * out_cols + c] = a.values()[src];
    }
  }
  Tensor out = make_result({out_rows, out_cols}, std::move(v), {&a});
  on_backward(out, [ai = a.impl(), oi = out.impl(), axis, begin, cols, out_rows, out_cols]() {
    if (!ai->requires_grad) return;
    for (std::size_t r = 0; r < out_rows; ++r) {
      for (std::size_t c = 0; c < out_cols; ++c) {
        const std::size_t src = axis == 0 ? (begin + r) * cols + c : r * cols + begin + c;
        ai->grad[src] += oi->grad[r * out_cols + c];
      }
    }
  });
  return out;
}

Tensor mean(const Tensor& a, std::size_t axis) {
  require_rank2(a, "mean");
  if (axis > 1) throw DimensionError("mean: axis must be 0 or 1");
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t reduced = axis == 0 ? m : n;
  if (reduced == 0) throw DimensionError("mean: empty axis in shape " + shape_string(a.shape()));
  const double inv = 1.0 / static_cast<double>(reduced);
  std::vector<double> v(axis == 0 ? n : m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) v[axis == 0 ? j : i] += a.values()[i * n + j];
  }
  for (auto& x : v) x *= inv;
  Shape shape = axis == 0 ? Shape{1, n} : Shape{m, 1};
  Tensor out = make_result(std::move(shape), std::move(v), {&a});
  on_backward(out, [ai = a.impl(), oi = out.impl(), axis, m, n, inv]() {
    if (!ai->requires_grad) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) ai->grad[i * n + j] += oi->grad[axis == 0 ? j : i] * inv;
    }
  });
  return out;
}

Tensor sum(const Tensor& a) {
  require_rank2(a, "sum");
  double s = 0.0;
  for (double x : a.values()) s += x;
  Tensor out = make_result({1, 1}, {s}, {&a});
  on_backward(out, [ai = a.impl(), oi = out.impl()]() {
    if (!ai->requires_grad) return;
    for (auto& g : ai->grad) g += oi->grad[0];
  });
  return out;
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  return unary(a, [slope](double x) { return x > 0.0 ? x : slope * x; },
               [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  require_rank2(a, "softmax");
  if (axis > 1) throw DimensionError("softmax: axis must be 0 or 1");
  const std::size_t m = a.rows(), n = a.cols();
  const std::size_t groups = axis == 0 ? n : m;
  const std::size_t len = axis == 0 ? m : n;
  // element k of group g
  auto index = [=](std::size_t g, std::size_t k) { return axis == 0 ? k * n + g : g * n + k; };
  std::vector<double> v(a.size());
  const auto x = a.values();
  for (std::size_t g = 0; g < groups; ++g) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < len; ++k) mx = std::max(mx, x[index(g, k)]);
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const double e = std::exp(x[index(g, k)] - mx);
      v[index(g, k)] = e;
      total += e;
    }
    for (std::size_t k = 0; k < len; ++k) v[index(g, k)] /= total;
  }
  Tensor out = make_result(a.shape(), std::move(v), {&a});
  on_backward(out, [ai = a.impl(), oi = out.impl(), groups, len, index]() {
    if (!ai->requires_grad) return;
    for (std::size_t g = 0; g < groups; ++g) {
      double dot_gy = 0.0;
      for (std::size_t k = 0; k < len; ++k) dot_gy += oi->grad[index(g, k)] * oi->value[index(g, k)];
      for (std::size_t k = 0; k < len; ++k) {
        const std::size_t i = index(g, k);
        ai->grad[i] += oi->value[i] * (oi->grad[i] - dot_gy);
      }
    }
  });
  return out;
}

}  // namespace astg::ad
