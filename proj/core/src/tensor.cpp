#include "vroc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <utility>

namespace vroc {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (int d : s) {
    if (d < 0) throw ShapeMismatchError("negative dimension in shape " + shape_str(s));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ']';
  return os.str();
}

namespace detail {

void mm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  // i-k-j order: the inner loop streams a row of b into a row of c, so
  // every c element accumulates its k terms in ascending-k order
  // regardless of vector width.
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = ai[p];
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void mm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate) {
  // c[m,n] = a^T b with a stored [k,m], b stored [k,n].
  if (!accumulate) std::fill(c, c + static_cast<std::size_t>(m) * n, 0.0);
  for (int p = 0; p < k; ++p) {
    const double* ap = a + static_cast<std::size_t>(p) * m;
    const double* bp = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double av = ap[i];
      double* ci = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

void transpose(const double* a, double* at, int rows, int cols) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      at[static_cast<std::size_t>(j) * rows + i] = a[static_cast<std::size_t>(i) * cols + j];
}

namespace {

void ensure_grad(TensorData& t) {
  if (t.grad.empty()) t.grad.assign(t.value.size(), 0.0);
}

}  // namespace
}  // namespace detail

using detail::TensorData;

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto d = std::make_shared<TensorData>();
  d->value.assign(shape_numel(shape), 0.0);
  d->shape = std::move(shape);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.d_->value.begin(), t.d_->value.end(), v);
  return t;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != data.size())
    throw ShapeMismatchError("from_data: shape " + shape_str(shape) + " needs " +
                             std::to_string(shape_numel(shape)) + " values, got " +
                             std::to_string(data.size()));
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->value = std::move(data);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (double& v : t.d_->value) v = rng.normal(0.0, stddev);
  return t;
}

std::span<double> Tensor::mutable_grad() {
  detail::ensure_grad(*d_);
  return d_->grad;
}

void Tensor::zero_grad() { d_->grad.clear(); }

double Tensor::item() const {
  if (numel() != 1)
    throw ShapeMismatchError("item() on tensor of shape " + shape_str(shape()));
  return d_->value[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
  if (idx.size() != d_->shape.size())
    throw IndexOutOfRangeError("at(): " + std::to_string(idx.size()) + " indices for shape " +
                               shape_str(shape()));
  std::size_t flat = 0;
  std::size_t k = 0;
  for (int i : idx) {
    const int dim = d_->shape[k];
    if (i < 0 || i >= dim)
      throw IndexOutOfRangeError("at(): index " + std::to_string(i) + " out of range for shape " +
                                 shape_str(shape()));
    flat = flat * static_cast<std::size_t>(dim) + static_cast<std::size_t>(i);
    ++k;
  }
  return d_->value[flat];
}

// ---------------------------------------------------------------------------
// Tape plumbing

Tensor Tape::make_out(Shape shape, std::vector<double> value,
                      std::initializer_list<const Tensor*> parents, const char* op) {
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->value = std::move(value);
  bool rg = false;
  for (const Tensor* p : parents) rg = rg || p->requires_grad();
  d->requires_grad = opts_.recording && rg;
  Tensor out{std::move(d)};
  check_out(out, op);
  return out;
}

void Tape::check_out(const Tensor& out, const char* op) const {
  if (!opts_.check_finite) return;
  const auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i]))
      throw NonFiniteError(std::string(op) + " produced a non-finite value at flat index " +
                           std::to_string(i));
  }
}

void Tape::record(const Tensor& out, std::function<void()> back) {
  if (!out.requires_grad()) return;
  nodes_.push_back(Node{out.d_, std::move(back)});
}

void Tape::backward(const Tensor& loss) {
  if (!opts_.recording) throw ConfigError("backward() on a non-recording tape");
  if (backward_done_) throw ConfigError("backward() called twice on one tape");
  if (loss.numel() != 1)
    throw ShapeMismatchError("backward() needs a scalar loss, got shape " +
                             shape_str(loss.shape()));
  backward_done_ = true;
  detail::ensure_grad(*loss.d_);
  loss.d_->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->out->grad.empty()) continue;  // output never used downstream
    it->back();
  }
}

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeMismatchError(msg);
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ConfigError(std::string(op) + ": undefined tensor argument");
}

}  // namespace

// ---------------------------------------------------------------------------
// Ops

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  require(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(0),
          "matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  detail::mm_nn(a.data().data(), b.data().data(), out.data(), m, k, n, false);
  Tensor y = make_out({m, n}, std::move(out), {&a, &b}, "matmul");
  record(y, [ad = a.d_, bd = b.d_, yd = y.d_, m, k, n] {
    const double* dy = yd->grad.data();
    if (ad->requires_grad) {
      detail::ensure_grad(*ad);
      std::vector<double> bt(static_cast<std::size_t>(k) * n);
      detail::transpose(bd->value.data(), bt.data(), k, n);
      detail::mm_nn(dy, bt.data(), ad->grad.data(), m, n, k, true);
    }
    if (bd->requires_grad) {
      detail::ensure_grad(*bd);
      detail::mm_tn(ad->value.data(), dy, bd->grad.data(), k, m, n, true);
    }
  });
  return y;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  require(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  std::vector<double> out(a.numel());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  Tensor y = make_out(a.shape(), std::move(out), {&a, &b}, "add");
  record(y, [ad = a.d_, bd = b.d_, yd = y.d_] {
    const auto& dy = yd->grad;
    if (ad->requires_grad) {
      detail::ensure_grad(*ad);
      for (std::size_t i = 0; i < dy.size(); ++i) ad->grad[i] += dy[i];
    }
    if (bd->requires_grad) {
      detail::ensure_grad(*bd);
      for (std::size_t i = 0; i < dy.size(); ++i) bd->grad[i] += dy[i];
    }
  });
  return y;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_defined(a, "mul");
  require_defined(b, "mul");
  require(a.shape() == b.shape(), "mul: shape mismatch " + shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  std::vector<double> out(a.numel());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  Tensor y = make_out(a.shape(), std::move(out), {&a, &b}, "mul");
  record(y, [ad = a.d_, bd = b.d_, yd = y.d_] {
    const auto& dy = yd->grad;
    if (ad->requires_grad) {
      detail::ensure_grad(*ad);
      for (std::size_t i = 0; i < dy.size(); ++i) ad->grad[i] += dy[i] * bd->value[i];
    }
    if (bd->requires_grad) {
      detail::ensure_grad(*bd);
      for (std::size_t i = 0; i < dy.size(); ++i) bd->grad[i] += dy[i] * ad->value[i];
    }
  });
  return y;
}

Tensor Tape::add_rows(const Tensor& a, const Tensor& bias) {
  require_defined(a, "add_rows");
  require_defined(bias, "add_rows");
  require(a.ndim() == 2 && bias.ndim() == 1 && bias.dim(0) == a.dim(1),
          "add_rows: shapes " + shape_str(a.shape()) + " and " + shape_str(bias.shape()));
  const int m = a.dim(0), n = a.dim(1);
  std::vector<double> out(a.numel());
  const auto av = a.data(), bv = bias.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i) * n + j] = av[static_cast<std::size_t>(i) * n + j] + bv[j];
  Tensor y = make_out(a.shape(), std::move(out), {&a, &bias}, "add_rows");
  record(y, [ad = a.d_, bd = bias.d_, yd = y.d_, m, n] {
    const double* dy = yd->grad.data();
    if (ad->requires_grad) {
      detail::ensure_grad(*ad);
      for (std::size_t i = 0; i < yd->grad.size(); ++i) ad->grad[i] += dy[i];
    }
    if (bd->requires_grad) {
      detail::ensure_grad(*bd);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) bd->grad[j] += dy[static_cast<std::size_t>(i) * n + j];
    }
  });
  return y;
}

Tensor Tape::scale(const Tensor& a, double s) {
  require_defined(a, "scale");
  std::vector<double> out(a.numel());
  const auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * av[i];
  Tensor y = make_out(a.shape(), std::move(out), {&a}, "scale");
  record(y, [ad = a.d_, yd = y.d_, s] {
    detail::ensure_grad(*ad);
    for (std::size_t i = 0; i < yd->grad.size(); ++i) ad->grad[i] += s * yd->grad[i];
  });
  return y;
}

Tensor Tape::mean(const Tensor& a, int axis) {
  require_defined(a, "mean");
  require(a.ndim() == 1 || a.ndim() == 2, "mean: expected 1-D or 2-D, got " +
                                              shape_str(a.shape()));
  if (a.ndim() == 1) {
    require(axis == 0, "mean: axis " + std::to_string(axis) + " for 1-D tensor");
    const int n = a.dim(0);
    require(n > 0, "mean over an empty tensor");
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    Tensor y = make_out({1}, {acc / n}, {&a}, "mean");
    record(y, [ad = a.d_, yd = y.d_, n] {
      detail::ensure_grad(*ad);
      const double g = yd->grad[0] / n;
      for (int i = 0; i < n; ++i) ad->grad[i] += g;
    });
    return y;
  }
  const int m = a.dim(0), n = a.dim(1);
  require(axis == 0 || axis == 1, "mean: axis " + std::to_string(axis) + " for 2-D tensor");
  require(axis == 0 ? m > 0 : n > 0, "mean over an empty axis");
  const auto av = a.data();
  if (axis == 0) {
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) out[j] += av[static_cast<std::size_t>(i) * n + j];
    for (double& v : out) v /= m;
    Tensor y = make_out({n}, std::move(out), {&a}, "mean");
    record(y, [ad = a.d_, yd = y.d_, m, n] {
      detail::ensure_grad(*ad);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          ad->grad[static_cast<std::size_t>(i) * n + j] += yd->grad[j] / m;
    });
    return y;
  }
  std::vector<double> out(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += av[static_cast<std::size_t>(i) * n + j];
    out[i] = acc / n;
  }
  Tensor y = make_out({m}, std::move(out), {&a}, "mean");
  record(y, [ad = a.d_, yd = y.d_, m, n] {
    detail::ensure_grad(*ad);
    for (int i = 0; i < m; ++i) {
      const double g = yd->grad[i] / n;
      for (int j = 0; j < n; ++j) ad->grad[static_cast<std::size_t>(i) * n + j] += g;
    }
  });
  return y;
}

Tensor Tape::sum_all(const Tensor& a) {
  require_defined(a, "sum_all");
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  Tensor y = make_out({1}, {acc}, {&a}, "sum_all");
  record(y, [ad = a.d_, yd = y.d_] {
    detail::ensure_grad(*ad);
    const double g = yd->grad[0];
    for (double& v : ad->grad) v += g;
  });
  return y;
}

Tensor Tape::concat_rows(const Tensor& a, const Tensor& b) {
  require_defined(a, "concat_rows");
  require_defined(b, "concat_rows");
  require(a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == b.dim(1),
          "concat_rows: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const int ma = a.dim(0), mb = b.dim(0), n = a.dim(1);
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  Tensor y = make_out({ma + mb, n}, std::move(out), {&a, &b}, "concat_rows");
  record(y, [ad = a.d_, bd = b.d_, yd = y.d_, ma, n] {
    const double* dy = yd->grad.data();
    if (ad->requires_grad) {
      detail::ensure_grad(*ad);
      for (std::size_t i = 0; i < ad->value.size(); ++i) ad->grad[i] += dy[i];
    }
    if (bd->requires_grad) {
      detail::ensure_grad(*bd);
      const double* dyb = dy + static_cast<std::size_t>(ma) * n;
      for (std::size_t i = 0; i < bd->value.size(); ++i) bd->grad[i] += dyb[i];
    }
  });
  return y;
}

namespace {

// Stable softmax over `n` strided entries starting at `x`.
void softmax_1d(const double* x, double* y, int n, std::size_t stride) {
  double mx = x[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, x[static_cast<std::size_t>(i) * stride]);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = std::exp(x[static_cast<std::size_t>(i) * stride] - mx);
    y[static_cast<std::size_t>(i) * stride] = e;
    z += e;
  }
  const double inv = 1.0 / z;
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i) * stride] *= inv;
}

// dX = Y * (dY - sum(dY*Y)) over one strided lane, accumulated.
void softmax_backward_1d(const double* y, const double* dy, double* dx, int n,
                         std::size_t stride) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) * stride;
    s += dy[k] * y[k];
  }
  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) * stride;
    dx[k] += y[k] * (dy[k] - s);
  }
}

}  // namespace

Tensor Tape::softmax(const Tensor& a, int axis) {
  require_defined(a, "softmax");
  require(a.ndim() == 1 || a.ndim() == 2, "softmax: expected 1-D or 2-D, got " +
                                              shape_str(a.shape()));
  std::vector<double> out(a.numel());
  const double* av = a.data().data();
  int lanes, n;
  std::size_t lane_stride, elem_stride;
  if (a.ndim() == 1) {
    require(axis == 0, "softmax: axis " + std::to_string(axis) + " for 1-D tensor");
    lanes = 1, n = a.dim(0), lane_stride = 0, elem_stride = 1;
  } else if (axis == 1) {
    lanes = a.dim(0), n = a.dim(1), lane_stride = static_cast<std::size_t>(n), elem_stride = 1;
  } else {
    require(axis == 0, "softmax: axis " + std::to_string(axis) + " for 2-D tensor");
    lanes = a.dim(1), n = a.dim(0), lane_stride = 1, elem_stride = static_cast<std::size_t>(a.dim(1));
  }
  require(n > 0, "softmax over an empty axis");
  for (int l = 0; l < lanes; ++l)
    softmax_1d(av + l * lane_stride, out.data() + l * lane_stride, n, elem_stride);
  Tensor y = make_out(a.shape(), std::move(out), {&a}, "softmax");
  record(y, [ad = a.d_, yd = y.d_, lanes, n, lane_stride, elem_stride] {
    detail::ensure_grad(*ad);
    for (int l = 0; l < lanes; ++l)
      softmax_backward_1d(yd->value.data() + l * lane_stride, yd->grad.data() + l * lane_stride,
                          ad->grad.data() + l * lane_stride, n, elem_stride);
  });
  return y;
}

Tensor Tape::layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  require_defined(x, "layer_norm");
  require_defined(gamma, "layer_norm");
  require_defined(beta, "layer_norm");
  require(x.ndim() == 1 || x.ndim() == 2, "layer_norm: expected 1-D or 2-D input, got " +
                                              shape_str(x.shape()));
  const int d = x.ndim() == 1 ? x.dim(0) : x.dim(1);
  const int m = x.ndim() == 1 ? 1 : x.dim(0);
  require(gamma.ndim() == 1 && gamma.dim(0) == d && beta.ndim() == 1 && beta.dim(0) == d,
          "layer_norm: gamma/beta must be [" + std::to_string(d) + "]");
  constexpr double kEps = 1e-5;
  const double* xv = x.data().data();
  const double* gv = gamma.data().data();
  const double* bv = beta.data().data();
  std::vector<double> out(x.numel());
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double* row = xv + static_cast<std::size_t>(i) * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += row[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = row[j] - mu;
      var += c * c;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kEps);
    (*inv_std)[i] = inv;
    double* xh = xhat->data() + static_cast<std::size_t>(i) * d;
    double* yo = out.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      xh[j] = (row[j] - mu) * inv;
      yo[j] = xh[j] * gv[j] + bv[j];
    }
  }
  Tensor y = make_out(x.shape(), std::move(out), {&x, &gamma, &beta}, "layer_norm");
  record(y, [xd = x.d_, gd = gamma.d_, bd = beta.d_, yd = y.d_, xhat, inv_std, m, d] {
    const double* dy = yd->grad.data();
    const double* gv = gd->value.data();
    if (xd->requires_grad) detail::ensure_grad(*xd);
    if (gd->requires_grad) detail::ensure_grad(*gd);
    if (bd->requires_grad) detail::ensure_grad(*bd);
    std::vector<double> dxh(static_cast<std::size_t>(d));
    for (int i = 0; i < m; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * d;
      const double* xh = xhat->data() + off;
      if (gd->requires_grad)
        for (int j = 0; j < d; ++j) gd->grad[j] += dy[off + j] * xh[j];
      if (bd->requires_grad)
        for (int j = 0; j < d; ++j) bd->grad[j] += dy[off + j];
      if (!xd->requires_grad) continue;
      double m1 = 0.0, m2 = 0.0;
      for (int j = 0; j < d; ++j) {
        dxh[j] = dy[off + j] * gv[j];
        m1 += dxh[j];
        m2 += dxh[j] * xh[j];
      }
      m1 /= d;
      m2 /= d;
      const double inv = (*inv_std)[i];
      for (int j = 0; j < d; ++j) xd->grad[off + j] += inv * (dxh[j] - m1 - xh[j] * m2);
    }
  });
  return y;
}

Tensor Tape::gelu(const Tensor& x) {
  require_defined(x, "gelu");
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  std::vector<double> out(x.numel());
  auto tanh_u = std::make_shared<std::vector<double>>(x.numel());
  const double* xv = x.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    const double t = std::tanh(kC * (v + kA * v * v * v));
    (*tanh_u)[i] = t;
    out[i] = 0.5 * v * (1.0 + t);
  }
  Tensor y = make_out(x.shape(), std::move(out), {&x}, "gelu");
  record(y, [xd = x.d_, yd = y.d_, tanh_u] {
    detail::ensure_grad(*xd);
    const double* dy = yd->grad.data();
    const double* xv = xd->value.data();
    for (std::size_t i = 0; i < yd->grad.size(); ++i) {
      const double v = xv[i];
      const double t = (*tanh_u)[i];
      const double du = kC * (1.0 + 3.0 * kA * v * v);
      xd->grad[i] += dy[i] * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du);
    }
  });
  return y;
}

Tensor Tape::dropout(const Tensor& x, double p, std::uint64_t seed) {
  require_defined(x, "dropout");
  require(p >= 0.0 && p < 1.0, "dropout: p must be in [0,1), got " + std::to_string(p));
  if (!opts_.train_mode || p == 0.0) return x;
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(x.numel());
  std::vector<double> out(x.numel());
  const double* xv = x.data().data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = rng.uniform() < p ? 0.0 : keep_scale;
    (*mask)[i] = m;
    out[i] = xv[i] * m;
  }
  Tensor y = make_out(x.shape(), std::move(out), {&x}, "dropout");
  record(y, [xd = x.d_, yd = y.d_, mask] {
    detail::ensure_grad(*xd);
    for (std::size_t i = 0; i < yd->grad.size(); ++i) xd->grad[i] += yd->grad[i] * (*mask)[i];
  });
  return y;
}

Tensor Tape::embedding_lookup(const Tensor& table, std::span<const int> ids) {
  require_defined(table, "embedding_lookup");
  require(table.ndim() == 2, "embedding_lookup: table must be 2-D, got " +
                                 shape_str(table.shape()));
  const int vocab = table.dim(0), d = table.dim(1);
  const int n = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  const double* tv = table.data().data();
  for (int i = 0; i < n; ++i) {
    const int id = ids[i];
    if (id < 0 || id >= vocab)
      throw IndexOutOfRangeError("embedding_lookup: id " + std::to_string(id) +
                                 " outside vocabulary of size " + std::to_string(vocab));
    std::memcpy(out.data() + static_cast<std::size_t>(i) * d,
                tv + static_cast<std::size_t>(id) * d, sizeof(double) * static_cast<std::size_t>(d));
  }
  Tensor y = make_out({n, d}, std::move(out), {&table}, "embedding_lookup");
  record(y, [td = table.d_, yd = y.d_, idv = std::vector<int>(ids.begin(), ids.end()), d] {
    detail::ensure_grad(*td);
    for (std::size_t i = 0; i < idv.size(); ++i) {
      const std::size_t src = i * static_cast<std::size_t>(d);
      const std::size_t dst = static_cast<std::size_t>(idv[i]) * d;
      for (int j = 0; j < d; ++j) td->grad[dst + j] += yd->grad[src + j];
    }
  });
  return y;
}

Tensor Tape::embedding_bag_sum(const Tensor& table, const std::vector<std::vector<int>>& lists) {
  require_defined(table, "embedding_bag_sum");
  require(table.ndim() == 2, "embedding_bag_sum: table must be 2-D, got " +
                                 shape_str(table.shape()));
  const int vocab = table.dim(0), d = table.dim(1);
  const int f = static_cast<int>(lists.size());
  std::vector<double> out(static_cast<std::size_t>(f) * d, 0.0);
  const double* tv = table.data().data();
  for (int i = 0; i < f; ++i) {
    double* row = out.data() + static_cast<std::size_t>(i) * d;
    for (int id : lists[i]) {
      if (id < 0 || id >= vocab)
        throw IndexOutOfRangeError("embedding_bag_sum: id " + std::to_string(id) +
                                   " outside vocabulary of size " + std::to_string(vocab));
      const double* src = tv + static_cast<std::size_t>(id) * d;
      for (int j = 0; j < d; ++j) row[j] += src[j];
    }
  }
  Tensor y = make_out({f, d}, std::move(out), {&table}, "embedding_bag_sum");
  record(y, [td = table.d_, yd = y.d_,
              lists_copy = std::make_shared<std::vector<std::vector<int>>>(lists), d] {
    detail::ensure_grad(*td);
    for (std::size_t i = 0; i < lists_copy->size(); ++i) {
      const double* dy = yd->grad.data() + i * static_cast<std::size_t>(d);
      for (int id : (*lists_copy)[i]) {
        double* dst = td->grad.data() + static_cast<std::size_t>(id) * d;
        for (int j = 0; j < d; ++j) dst[j] += dy[j];
      }
    }
  });
  return y;
}

Tensor Tape::gather_rows(const Tensor& x, std::span<const int> idx) {
  require_defined(x, "gather_rows");
  require(x.ndim() == 2, "gather_rows: input must be 2-D, got " + shape_str(x.shape()));
  const int m = x.dim(0), n = x.dim(1);
  const int r = static_cast<int>(idx.size());
  std::vector<double> out(static_cast<std::size_t>(r) * n);
  const double* xv = x.data().data();
  for (int i = 0; i < r; ++i) {
    const int row = idx[i];
    if (row < 0 || row >= m)
      throw IndexOutOfRangeError("gather_rows: row " + std::to_string(row) +
                                 " out of range for " + shape_str(x.shape()));
    std::memcpy(out.data() + static_cast<std::size_t>(i) * n,
                xv + static_cast<std::size_t>(row) * n, sizeof(double) * static_cast<std::size_t>(n));
  }
  Tensor y = make_out({r, n}, std::move(out), {&x}, "gather_rows");
  record(y, [xd = x.d_, yd = y.d_, idv = std::vector<int>(idx.begin(), idx.end()), n] {
    detail::ensure_grad(*xd);
    for (std::size_t i = 0; i < idv.size(); ++i) {
      const double* dy = yd->grad.data() + i * static_cast<std::size_t>(n);
      double* dst = xd->grad.data() + static_cast<std::size_t>(idv[i]) * n;
      for (int j = 0; j < n; ++j) dst[j] += dy[j];
    }
  });
  return y;
}

Tensor Tape::chunk_mean(const Tensor& x, int chunk) {
  require_defined(x, "chunk_mean");
  require(x.ndim() == 2, "chunk_mean: input must be 2-D, got " + shape_str(x.shape()));
  require(chunk >= 1, "chunk_mean: chunk must be >= 1, got " + std::to_string(chunk));
  const int f = x.dim(0), n = x.dim(1);
  require(f > 0, "chunk_mean over an empty tensor");
  const int c = (f + chunk - 1) / chunk;
  std::vector<double> out(static_cast<std::size_t>(c) * n, 0.0);
  const double* xv = x.data().data();
  for (int b = 0; b < c; ++b) {
    const int lo = b * chunk;
    const int hi = std::min(f, lo + chunk);
    double* row = out.data() + static_cast<std::size_t>(b) * n;
    for (int i = lo; i < hi; ++i) {
      const double* src = xv + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) row[j] += src[j];
    }
    const double inv = 1.0 / (hi - lo);
    for (int j = 0; j < n; ++j) row[j] *= inv;
  }
  Tensor y = make_out({c, n}, std::move(out), {&x}, "chunk_mean");
  record(y, [xd = x.d_, yd = y.d_, f, n, chunk, c] {
    detail::ensure_grad(*xd);
    for (int b = 0; b < c; ++b) {
      const int lo = b * chunk;
      const int hi = std::min(f, lo + chunk);
      const double inv = 1.0 / (hi - lo);
      const double* dy = yd->grad.data() + static_cast<std::size_t>(b) * n;
      for (int i = lo; i < hi; ++i) {
        double* dst = xd->grad.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) dst[j] += dy[j] * inv;
      }
    }
  });
  return y;
}

Tensor Tape::scale_rows(const Tensor& x, std::span<const double> weights) {
  require_defined(x, "scale_rows");
  require(x.ndim() == 2, "scale_rows: input must be 2-D, got " + shape_str(x.shape()));
  const int m = x.dim(0), n = x.dim(1);
  require(static_cast<int>(weights.size()) == m,
          "scale_rows: " + std::to_string(weights.size()) + " weights for " +
              std::to_string(m) + " rows");
  std::vector<double> out(x.numel());
  const double* xv = x.data().data();
  for (int i = 0; i < m; ++i) {
    const double w = weights[i];
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i) * n + j] = w * xv[static_cast<std::size_t>(i) * n + j];
  }
  Tensor y = make_out(x.shape(), std::move(out), {&x}, "scale_rows");
  record(y, [xd = x.d_, yd = y.d_, wv = std::vector<double>(weights.begin(), weights.end()), n] {
    detail::ensure_grad(*xd);
    for (std::size_t i = 0; i < wv.size(); ++i) {
      const double w = wv[i];
      const std::size_t off = i * static_cast<std::size_t>(n);
      for (int j = 0; j < n; ++j) xd->grad[off + j] += w * yd->grad[off + j];
    }
  });
  return y;
}

Tensor Tape::reshape(const Tensor& x, Shape shape) {
  require_defined(x, "reshape");
  require(shape_numel(shape) == x.numel(), "reshape: " + shape_str(x.shape()) + " to " +
                                               shape_str(shape) + " changes element count");
  std::vector<double> out(x.data().begin(), x.data().end());
  Tensor y = make_out(std::move(shape), std::move(out), {&x}, "reshape");
  record(y, [xd = x.d_, yd = y.d_] {
    detail::ensure_grad(*xd);
    for (std::size_t i = 0; i < yd->grad.size(); ++i) xd->grad[i] += yd->grad[i];
  });
  return y;
}

Tensor Tape::cross_entropy_with_logits(const Tensor& logits, std::span<const int> targets) {
  require_defined(logits, "cross_entropy_with_logits");
  require(logits.ndim() == 2, "cross_entropy_with_logits: logits must be 2-D, got " +
                                  shape_str(logits.shape()));
  const int m = logits.dim(0), c = logits.dim(1);
  require(static_cast<int>(targets.size()) == m,
          "cross_entropy_with_logits: " + std::to_string(targets.size()) + " targets for " +
              std::to_string(m) + " rows");
  require(m > 0, "cross_entropy_with_logits on an empty batch");
  auto probs = std::make_shared<std::vector<double>>(logits.numel());
  const double* zv = logits.data().data();
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    const int t = targets[i];
    if (t < 0 || t >= c)
      throw IndexOutOfRangeError("cross_entropy_with_logits: target " + std::to_string(t) +
                                 " outside [0," + std::to_string(c) + ")");
    const double* row = zv + static_cast<std::size_t>(i) * c;
    double mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    loss += lse - row[t];
    double* p = probs->data() + static_cast<std::size_t>(i) * c;
    for (int j = 0; j < c; ++j) p[j] = std::exp(row[j] - lse);
  }
  Tensor y = make_out({1}, {loss / m}, {&logits}, "cross_entropy_with_logits");
  record(y, [zd = logits.d_, yd = y.d_, probs,
              tv = std::vector<int>(targets.begin(), targets.end()), m, c] {
    detail::ensure_grad(*zd);
    const double g = yd->grad[0] / m;
    for (int i = 0; i < m; ++i) {
      const std::size_t off = static_cast<std::size_t>(i) * c;
      for (int j = 0; j < c; ++j) {
        const double ind = j == tv[i] ? 1.0 : 0.0;
        zd->grad[off + j] += g * ((*probs)[off + j] - ind);
      }
    }
  });
  return y;
}

// ---------------------------------------------------------------------------
// Grouped multi-head attention

namespace {

// Saved forward state for one attention group.
struct MhaGroupState {
  std::vector<double> qkv;    // [L, 3d]
  std::vector<double> probs;  // n_heads x [L, L]
  std::vector<double> ao;     // [L, d] concatenated head outputs, pre projection
};

}  // namespace

Tensor Tape::grouped_mha(const Tensor& x, AttentionGroupsPtr groups, const Tensor& w_qkv,
                         const Tensor& b_qkv, const Tensor& w_out, const Tensor& b_out,
                         int n_heads) {
  require_defined(x, "grouped_mha");
  require_defined(w_qkv, "grouped_mha");
  require_defined(b_qkv, "grouped_mha");
  require_defined(w_out, "grouped_mha");
  require_defined(b_out, "grouped_mha");
  if (!groups) throw ConfigError("grouped_mha: null group list");
  require(x.ndim() == 2, "grouped_mha: input must be 2-D, got " + shape_str(x.shape()));
  const int rows = x.dim(0), d = x.dim(1);
  require(n_heads >= 1 && d % n_heads == 0,
          "grouped_mha: width " + std::to_string(d) + " not divisible by " +
              std::to_string(n_heads) + " heads");
  require(w_qkv.ndim() == 2 && w_qkv.dim(0) == d && w_qkv.dim(1) == 3 * d,
          "grouped_mha: w_qkv must be [" + std::to_string(d) + "," + std::to_string(3 * d) + "]");
  require(b_qkv.ndim() == 1 && b_qkv.dim(0) == 3 * d, "grouped_mha: b_qkv must be [3d]");
  require(w_out.ndim() == 2 && w_out.dim(0) == d && w_out.dim(1) == d,
          "grouped_mha: w_out must be [d,d]");
  require(b_out.ndim() == 1 && b_out.dim(0) == d, "grouped_mha: b_out must be [d]");
  const int dh = d / n_heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  auto counts = std::make_shared<std::vector<int>>(static_cast<std::size_t>(rows), 0);
  for (const auto& g : *groups)
    for (int r : g) {
      if (r < 0 || r >= rows)
        throw IndexOutOfRangeError("grouped_mha: group row " + std::to_string(r) +
                                   " out of range for " + shape_str(x.shape()));
      ++(*counts)[static_cast<std::size_t>(r)];
    }

  auto states = std::make_shared<std::vector<MhaGroupState>>(groups->size());
  std::vector<double> out(x.numel(), 0.0);
  const double* xv = x.data().data();
  const double* wqkv = w_qkv.data().data();
  const double* bqkv = b_qkv.data().data();
  const double* wout = w_out.data().data();
  const double* bout = b_out.data().data();

  std::vector<double> xg, qh, kh, kht, vh, scores, yg;
  for (std::size_t gi = 0; gi < groups->size(); ++gi) {
    const auto& g = (*groups)[gi];
    const int L = static_cast<int>(g.size());
    if (L == 0) continue;
    MhaGroupState& st = (*states)[gi];

    xg.resize(static_cast<std::size_t>(L) * d);
    for (int i = 0; i < L; ++i)
      std::memcpy(xg.data() + static_cast<std::size_t>(i) * d,
                  xv + static_cast<std::size_t>(g[i]) * d, sizeof(double) * static_cast<std::size_t>(d));

    st.qkv.assign(static_cast<std::size_t>(L) * 3 * d, 0.0);
    detail::mm_nn(xg.data(), wqkv, st.qkv.data(), L, d, 3 * d, false);
    for (int i = 0; i < L; ++i) {
      double* row = st.qkv.data() + static_cast<std::size_t>(i) * 3 * d;
      for (int j = 0; j < 3 * d; ++j) row[j] += bqkv[j];
    }

    st.probs.assign(static_cast<std::size_t>(n_heads) * L * L, 0.0);
    st.ao.assign(static_cast<std::size_t>(L) * d, 0.0);
    qh.resize(static_cast<std::size_t>(L) * dh);
    kh.resize(static_cast<std::size_t>(L) * dh);
    kht.resize(static_cast<std::size_t>(L) * dh);
    vh.resize(static_cast<std::size_t>(L) * dh);
    scores.resize(static_cast<std::size_t>(L) * L);
    for (int h = 0; h < n_heads; ++h) {
      for (int i = 0; i < L; ++i) {
        const double* row = st.qkv.data() + static_cast<std::size_t>(i) * 3 * d;
        std::memcpy(qh.data() + static_cast<std::size_t>(i) * dh, row + h * dh,
                    sizeof(double) * static_cast<std::size_t>(dh));
        std::memcpy(kh.data() + static_cast<std::size_t>(i) * dh, row + d + h * dh,
                    sizeof(double) * static_cast<std::size_t>(dh));
        std::memcpy(vh.data() + static_cast<std::size_t>(i) * dh, row + 2 * d + h * dh,
                    sizeof(double) * static_cast<std::size_t>(dh));
      }
      detail::transpose(kh.data(), kht.data(), L, dh);
      detail::mm_nn(qh.data(), kht.data(), scores.data(), L, dh, L, false);
      for (double& s : scores) s *= att_scale;
      double* p = st.probs.data() + static_cast<std::size_t>(h) * L * L;
      for (int i = 0; i < L; ++i)
        softmax_1d(scores.data() + static_cast<std::size_t>(i) * L,
                   p + static_cast<std::size_t>(i) * L, L, 1);
      // Head output goes into its column slice of ao: compute [L,dh]
      // then scatter, since ao rows are strided by d.
      std::vector<double> oh(static_cast<std::size_t>(L) * dh, 0.0);
      detail::mm_nn(p, vh.data(), oh.data(), L, L, dh, false);
      for (int i = 0; i < L; ++i)
        std::memcpy(st.ao.data() + static_cast<std::size_t>(i) * d + h * dh,
                    oh.data() + static_cast<std::size_t>(i) * dh,
                    sizeof(double) * static_cast<std::size_t>(dh));
    }

    yg.assign(static_cast<std::size_t>(L) * d, 0.0);
    detail::mm_nn(st.ao.data(), wout, yg.data(), L, d, d, false);
    for (int i = 0; i < L; ++i) {
      const double* src = yg.data() + static_cast<std::size_t>(i) * d;
      double* dst = out.data() + static_cast<std::size_t>(g[i]) * d;
      for (int j = 0; j < d; ++j) dst[j] += src[j] + bout[j];
    }
  }
  for (int r = 0; r < rows; ++r) {
    const int c = (*counts)[static_cast<std::size_t>(r)];
    if (c > 1) {
      const double inv = 1.0 / c;
      double* row = out.data() + static_cast<std::size_t>(r) * d;
      for (int j = 0; j < d; ++j) row[j] *= inv;
    }
  }

  Tensor y = make_out(x.shape(), std::move(out), {&x, &w_qkv, &b_qkv, &w_out, &b_out},
                      "grouped_mha");
  record(y, [xd = x.d_, wqkvd = w_qkv.d_, bqkvd = b_qkv.d_, woutd = w_out.d_, boutd = b_out.d_,
              yd = y.d_, groups, counts, states, n_heads, d, dh, att_scale] {
    const bool need_x = xd->requires_grad;
    const bool need_wqkv = wqkvd->requires_grad;
    const bool need_bqkv = bqkvd->requires_grad;
    const bool need_wout = woutd->requires_grad;
    const bool need_bout = boutd->requires_grad;
    if (need_x) detail::ensure_grad(*xd);
    if (need_wqkv) detail::ensure_grad(*wqkvd);
    if (need_bqkv) detail::ensure_grad(*bqkvd);
    if (need_wout) detail::ensure_grad(*woutd);
    if (need_bout) detail::ensure_grad(*boutd);

    std::vector<double> wout_t(woutd->value.size());
    detail::transpose(woutd->value.data(), wout_t.data(), d, d);
    std::vector<double> wqkv_t(wqkvd->value.size());
    detail::transpose(wqkvd->value.data(), wqkv_t.data(), d, 3 * d);

    std::vector<double> dyg, dao, dqkv, dxg, xg;
    std::vector<double> qh, kh, vh, doh, dp, ds, dqh, dkh, dvh, tmp_t;
    for (std::size_t gi = 0; gi < groups->size(); ++gi) {
      const auto& g = (*groups)[gi];
      const int L = static_cast<int>(g.size());
      if (L == 0) continue;
      const MhaGroupState& st = (*states)[gi];

      dyg.resize(static_cast<std::size_t>(L) * d);
      for (int i = 0; i < L; ++i) {
        const int r = g[i];
        const double inv = 1.0 / (*counts)[static_cast<std::size_t>(r)];
        const double* dy = yd->grad.data() + static_cast<std::size_t>(r) * d;
        double* dst = dyg.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) dst[j] = dy[j] * inv;
      }

      if (need_bout)
        for (int i = 0; i < L; ++i)
          for (int j = 0; j < d; ++j)
            boutd->grad[j] += dyg[static_cast<std::size_t>(i) * d + j];
      if (need_wout)
        detail::mm_tn(st.ao.data(), dyg.data(), woutd->grad.data(), d, L, d, true);

      dao.assign(static_cast<std::size_t>(L) * d, 0.0);
      detail::mm_nn(dyg.data(), wout_t.data(), dao.data(), L, d, d, false);

      dqkv.assign(static_cast<std::size_t>(L) * 3 * d, 0.0);
      qh.resize(static_cast<std::size_t>(L) * dh);
      kh.resize(static_cast<std::size_t>(L) * dh);
      vh.resize(static_cast<std::size_t>(L) * dh);
      doh.resize(static_cast<std::size_t>(L) * dh);
      dp.resize(static_cast<std::size_t>(L) * L);
      ds.resize(static_cast<std::size_t>(L) * L);
      dqh.assign(static_cast<std::size_t>(L) * dh, 0.0);
      dkh.assign(static_cast<std::size_t>(L) * dh, 0.0);
      dvh.assign(static_cast<std::size_t>(L) * dh, 0.0);
      tmp_t.resize(static_cast<std::size_t>(L) * std::max(L, dh));
      for (int h = 0; h < n_heads; ++h) {
        for (int i = 0; i < L; ++i) {
          const double* row = st.qkv.data() + static_cast<std::size_t>(i) * 3 * d;
          std::memcpy(qh.data() + static_cast<std::size_t>(i) * dh, row + h * dh,
                      sizeof(double) * static_cast<std::size_t>(dh));
          std::memcpy(kh.data() + static_cast<std::size_t>(i) * dh, row + d + h * dh,
                      sizeof(double) * static_cast<std::size_t>(dh));
          std::memcpy(vh.data() + static_cast<std::size_t>(i) * dh, row + 2 * d + h * dh,
                      sizeof(double) * static_cast<std::size_t>(dh));
          std::memcpy(doh.data() + static_cast<std::size_t>(i) * dh,
                      dao.data() + static_cast<std::size_t>(i) * d + h * dh,
                      sizeof(double) * static_cast<std::size_t>(dh));
        }
        const double* p = st.probs.data() + static_cast<std::size_t>(h) * L * L;
        // dP = dO V^T
        detail::transpose(vh.data(), tmp_t.data(), L, dh);
        detail::mm_nn(doh.data(), tmp_t.data(), dp.data(), L, dh, L, false);
        // dV = P^T dO
        std::fill(dvh.begin(), dvh.end(), 0.0);
        detail::mm_tn(p, doh.data(), dvh.data(), L, L, dh, false);
        // dS = P * (dP - rowsum(dP * P)), then scale.
        for (int i = 0; i < L; ++i) {
          const std::size_t off = static_cast<std::size_t>(i) * L;
          double s = 0.0;
          for (int j = 0; j < L; ++j) s += dp[off + j] * p[off + j];
          for (int j = 0; j < L; ++j) ds[off + j] = att_scale * p[off + j] * (dp[off + j] - s);
        }
        // dQ = dS K ; dK = dS^T Q
        std::fill(dqh.begin(), dqh.end(), 0.0);
        detail::mm_nn(ds.data(), kh.data(), dqh.data(), L, L, dh, false);
        std::fill(dkh.begin(), dkh.end(), 0.0);
        detail::mm_tn(ds.data(), qh.data(), dkh.data(), L, L, dh, false);
        for (int i = 0; i < L; ++i) {
          double* row = dqkv.data() + static_cast<std::size_t>(i) * 3 * d;
          std::memcpy(row + h * dh, dqh.data() + static_cast<std::size_t>(i) * dh,
                      sizeof(double) * static_cast<std::size_t>(dh));
          std::memcpy(row + d + h * dh, dkh.data() + static_cast<std::size_t>(i) * dh,
                      sizeof(double) * static_cast<std::size_t>(dh));
          std::memcpy(row + 2 * d + h * dh, dvh.data() + static_cast<std::size_t>(i) * dh,
                      sizeof(double) * static_cast<std::size_t>(dh));
        }
      }

      if (need_bqkv)
        for (int i = 0; i < L; ++i)
          for (int j = 0; j < 3 * d; ++j)
            bqkvd->grad[j] += dqkv[static_cast<std::size_t>(i) * 3 * d + j];
      if (need_wqkv || need_x) {
        xg.resize(static_cast<std::size_t>(L) * d);
        for (int i = 0; i < L; ++i)
          std::memcpy(xg.data() + static_cast<std::size_t>(i) * d,
                      xd->value.data() + static_cast<std::size_t>(g[i]) * d,
                      sizeof(double) * static_cast<std::size_t>(d));
        if (need_wqkv)
          detail::mm_tn(xg.data(), dqkv.data(), wqkvd->grad.data(), d, L, 3 * d, true);
      }
      if (need_x) {
        dxg.assign(static_cast<std::size_t>(L) * d, 0.0);
        detail::mm_nn(dqkv.data(), wqkv_t.data(), dxg.data(), L, 3 * d, d, false);
        for (int i = 0; i < L; ++i) {
          const double* src = dxg.data() + static_cast<std::size_t>(i) * d;
          double* dst = xd->grad.data() + static_cast<std::size_t>(g[i]) * d;
          for (int j = 0; j < d; ++j) dst[j] += src[j];
        }
      }
    }
  });
  return y;
}

}  // namespace vroc
