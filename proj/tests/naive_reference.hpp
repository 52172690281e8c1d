#pragma once

// Naive reference implementations used as oracles: plain double loops,
// textbook formulas, entirely independent of the Tape op kernels.

#include <cmath>
#include <vector>

namespace naive {

using Mat = std::vector<std::vector<double>>;

inline Mat zeros(int r, int c) { return Mat(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(c), 0.0)); }

inline Mat matmul(const Mat& a, const Mat& b) {
  const int m = static_cast<int>(a.size());
  const int k = static_cast<int>(b.size());
  const int n = static_cast<int>(b[0].size());
  Mat c = zeros(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0;
      for (int p = 0; p < k; ++p) s += a[i][p] * b[p][j];
      c[i][j] = s;
    }
  return c;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double z = 0;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = std::exp(x[i] - mx);
    z += y[i];
  }
  for (double& v : y) v /= z;
  return y;
}

inline std::vector<double> layer_norm_row(const std::vector<double>& x,
                                          const std::vector<double>& g,
                                          const std::vector<double>& b) {
  const int d = static_cast<int>(x.size());
  double mu = 0;
  for (double v : x) mu += v;
  mu /= d;
  double var = 0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= d;
  const double inv = 1.0 / std::sqrt(var + 1e-5);
  std::vector<double> y(x.size());
  for (int j = 0; j < d; ++j) y[static_cast<std::size_t>(j)] = (x[static_cast<std::size_t>(j)] - mu) * inv * g[static_cast<std::size_t>(j)] + b[static_cast<std::size_t>(j)];
  return y;
}

inline double gelu(double v) {
  const double c = std::sqrt(2.0 / 3.14159265358979323846);
  return 0.5 * v * (1.0 + std::tanh(c * (v + 0.044715 * v * v * v)));
}

// Dense multi-head self-attention over the given rows of x.
// x: [M][d]; w_qkv: [d][3d]; w_out: [d][d]. Returns [L][d] outputs for
// the group's rows in order.
inline Mat dense_attention(const Mat& x, const std::vector<int>& rows, const Mat& w_qkv,
                           const std::vector<double>& b_qkv, const Mat& w_out,
                           const std::vector<double>& b_out, int heads) {
  const int d = static_cast<int>(x[0].size());
  const int dh = d / heads;
  const int L = static_cast<int>(rows.size());
  Mat xg(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) xg[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
  Mat qkv = matmul(xg, w_qkv);
  for (auto& row : qkv)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b_qkv[j];
  Mat concat = zeros(L, d);
  for (int h = 0; h < heads; ++h) {
    for (int i = 0; i < L; ++i) {
      std::vector<double> scores(static_cast<std::size_t>(L));
      for (int j = 0; j < L; ++j) {
        double s = 0;
        for (int k = 0; k < dh; ++k)
          s += qkv[static_cast<std::size_t>(i)][static_cast<std::size_t>(h * dh + k)] *
               qkv[static_cast<std::size_t>(j)][static_cast<std::size_t>(d + h * dh + k)];
        scores[static_cast<std::size_t>(j)] = s / std::sqrt(static_cast<double>(dh));
      }
      const std::vector<double> p = softmax(scores);
      for (int k = 0; k < dh; ++k) {
        double o = 0;
        for (int j = 0; j < L; ++j)
          o += p[static_cast<std::size_t>(j)] *
               qkv[static_cast<std::size_t>(j)][static_cast<std::size_t>(2 * d + h * dh + k)];
        concat[static_cast<std::size_t>(i)][static_cast<std::size_t>(h * dh + k)] = o;
      }
    }
  }
  Mat out = matmul(concat, w_out);
  for (auto& row : out)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b_out[j];
  return out;
}

// Grouped attention with mean-over-groups semantics: a row's output is
// the mean of its per-group outputs, zero if it belongs to no group.
inline Mat grouped_attention(const Mat& x, const std::vector<std::vector<int>>& groups,
                             const Mat& w_qkv, const std::vector<double>& b_qkv,
                             const Mat& w_out, const std::vector<double>& b_out, int heads) {
  const int m = static_cast<int>(x.size());
  const int d = static_cast<int>(x[0].size());
  Mat acc = zeros(m, d);
  std::vector<int> counts(static_cast<std::size_t>(m), 0);
  for (const auto& g : groups) {
    Mat out = dense_attention(x, g, w_qkv, b_qkv, w_out, b_out, heads);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto r = static_cast<std::size_t>(g[i]);
      ++counts[r];
      for (int j = 0; j < d; ++j) acc[r][static_cast<std::size_t>(j)] += out[i][static_cast<std::size_t>(j)];
    }
  }
  for (int r = 0; r < m; ++r)
    if (counts[static_cast<std::size_t>(r)] > 0)
      for (int j = 0; j < d; ++j)
        acc[static_cast<std::size_t>(r)][static_cast<std::size_t>(j)] /= counts[static_cast<std::size_t>(r)];
  return acc;
}

}  // namespace naive
