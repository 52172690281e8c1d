#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "vroc/errors.hpp"
#include "vroc/rng.hpp"

namespace vroc {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {
struct TensorData {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until backward touches it
  bool requires_grad = false;
};
}  // namespace detail

// Dense row-major float64 tensor. Copies are shallow handles to shared
// storage; values are treated as immutable once an op has produced
// them, except for parameter updates and gradient accumulation.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v);
  // Gaussian init, N(0, stddev^2).
  static Tensor randn(Shape shape, Rng& rng, double stddev, bool requires_grad = false);

  bool defined() const { return d_ != nullptr; }
  const Shape& shape() const { return d_->shape; }
  int ndim() const { return static_cast<int>(d_->shape.size()); }
  int dim(int i) const { return d_->shape[static_cast<std::size_t>(i)]; }
  std::size_t numel() const { return d_->value.size(); }

  std::span<const double> data() const { return d_->value; }
  // Mutable access is for parameter updates and finite-difference
  // probing only; never mutate an activation.
  std::span<double> mutable_data() { return d_->value; }

  bool requires_grad() const { return d_->requires_grad; }
  // For parameter tensors only; call before any tape uses the tensor.
  void set_requires_grad(bool rg) { d_->requires_grad = rg; }
  bool has_grad() const { return !d_->grad.empty(); }
  std::span<const double> grad() const { return d_->grad; }
  std::span<double> mutable_grad();
  void zero_grad();

  double item() const;
  double at(std::initializer_list<int> idx) const;

  bool same_storage(const Tensor& other) const { return d_ == other.d_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorData> d) : d_(std::move(d)) {}
  std::shared_ptr<detail::TensorData> d_;
  friend class Tape;
};

// Row-index groups for the factorized attention op. Each inner vector
// lists the rows attending to each other; a row may appear in several
// groups (its outputs are averaged) or in none (its output is zero).
using AttentionGroups = std::vector<std::vector<int>>;
using AttentionGroupsPtr = std::shared_ptr<const AttentionGroups>;

struct TapeOptions {
  bool recording = true;
  bool train_mode = false;
  bool check_finite = true;
};

// Reverse-mode gradient tape. Ops record nodes in execution order
// (parents always precede children); backward() runs one reverse sweep
// visiting every node exactly once, accumulating gradients into each
// tensor's grad buffer. A Tape is single-owner: never share one across
// threads.
class Tape {
 public:
  Tape() = default;
  explicit Tape(TapeOptions opts) : opts_(opts) {}

  bool recording() const { return opts_.recording; }
  bool train_mode() const { return opts_.train_mode; }

  // c[i][j] = sum_k a[i][k] * b[k][j]
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
  // y[i][j] = a[i][j] + bias[j]
  Tensor add_rows(const Tensor& a, const Tensor& bias);
  Tensor scale(const Tensor& a, double s);
  // Mean along `axis` of a 1-D or 2-D tensor; the axis is dropped.
  Tensor mean(const Tensor& a, int axis);
  Tensor sum_all(const Tensor& a);
  Tensor concat_rows(const Tensor& a, const Tensor& b);
  // Stable softmax along `axis` (0 or 1 for 2-D, 0 for 1-D).
  Tensor softmax(const Tensor& a, int axis);
  // Per-row (last dim) normalization with epsilon 1e-5.
  Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta);
  Tensor gelu(const Tensor& x);
  // Train mode: zeroes entries with probability p and scales the rest
  // by 1/(1-p), mask drawn from the given seed. Eval mode: identity.
  Tensor dropout(const Tensor& x, double p, std::uint64_t seed);
  Tensor embedding_lookup(const Tensor& table, std::span<const int> ids);
  // row f = sum of table rows listed in lists[f] (empty list -> zero row).
  Tensor embedding_bag_sum(const Tensor& table, const std::vector<std::vector<int>>& lists);
  Tensor gather_rows(const Tensor& x, std::span<const int> idx);
  // Mean over consecutive row blocks of `chunk` rows; the final partial
  // block is averaged over its actual length.
  Tensor chunk_mean(const Tensor& x, int chunk);
  // y[i] = weights[i] * x[i] (row-wise); weights are data, not learned.
  Tensor scale_rows(const Tensor& x, std::span<const double> weights);
  Tensor reshape(const Tensor& x, Shape shape);
  // Mean over rows of softmax cross-entropy against integer targets.
  Tensor cross_entropy_with_logits(const Tensor& logits, std::span<const int> targets);
  // Multi-head self-attention run independently inside each row group;
  // a row's output is the mean of its per-group outputs (zero if it is
  // in no group). w_qkv: [d,3d], b_qkv: [3d], w_out: [d,d], b_out: [d].
  Tensor grouped_mha(const Tensor& x, AttentionGroupsPtr groups, const Tensor& w_qkv,
                     const Tensor& b_qkv, const Tensor& w_out, const Tensor& b_out, int n_heads);

  // Seeds d(loss)=1 and runs the reverse sweep. Callable once per tape.
  void backward(const Tensor& loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::shared_ptr<detail::TensorData> out;
    std::function<void()> back;
  };

  Tensor make_out(Shape shape, std::vector<double> value,
                  std::initializer_list<const Tensor*> parents, const char* op);
  void record(const Tensor& out, std::function<void()> back);
  void check_out(const Tensor& out, const char* op) const;

  TapeOptions opts_;
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

namespace detail {
// Raw kernels, exposed for the benchmark suite.
void mm_nn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void mm_tn(const double* a, const double* b, double* c, int m, int k, int n, bool accumulate);
void transpose(const double* a, double* at, int rows, int cols);
}  // namespace detail

}  // namespace vroc
