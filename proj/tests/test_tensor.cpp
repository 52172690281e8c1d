#include <cmath>
#include <vector>

#include "doctest.h"
#include "vroc/grad_check.hpp"
#include "vroc/rng.hpp"
#include "vroc/tensor.hpp"

using namespace vroc;

namespace {

void check_close(std::span<const double> got, const std::vector<double>& want, double tol) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    INFO("entry ", i);
    CHECK(std::abs(got[i] - want[i]) <= tol);
  }
}

// Scalar readout with a distinct fixed weight per entry, so every
// element of y influences the loss differently.
Tensor readout(Tape& tp, const Tensor& y) {
  std::vector<double> w(y.numel());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = 0.31 + 0.17 * static_cast<double>(i) * (i % 2 ? 1.0 : -1.0);
  return tp.sum_all(tp.mul(y, Tensor::from_data(y.shape(), std::move(w))));
}

double fd_max_err(const std::function<Tensor(Tape&)>& f, std::vector<Tensor> params,
                  bool train_mode = false) {
  GradCheckOptions o;
  o.train_mode = train_mode;
  return grad_check(f, std::move(params), o).max_rel_err;
}

}  // namespace

TEST_SUITE("tensor-core") {

TEST_CASE("tensor construction and shape invariants") {
  Tensor t = Tensor::zeros({2, 3});
  CHECK(t.numel() == 6);
  CHECK(t.shape() == Shape{2, 3});
  CHECK_FALSE(t.requires_grad());
  CHECK_FALSE(t.has_grad());

  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}), ShapeMismatchError);
  Tensor u = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  CHECK(u.at({1, 0}) == 3.0);
  CHECK_THROWS_AS(u.at({2, 0}), IndexOutOfRangeError);
  CHECK_THROWS_AS(u.at({0}), IndexOutOfRangeError);
  CHECK_THROWS_AS(u.item(), ShapeMismatchError);
  CHECK(Tensor::scalar(4.5).item() == 4.5);
}

TEST_CASE("matmul: identity leaves matrix unchanged") {
  Tape tp;
  Tensor i2 = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  check_close(tp.matmul(i2, a).data(), {1, 2, 3, 4}, 0.0);
}

TEST_CASE("matmul: 1x2 times 2x1") {
  Tape tp;
  Tensor a = Tensor::from_data({1, 2}, {1, 2});
  Tensor b = Tensor::from_data({2, 1}, {3, 4});
  check_close(tp.matmul(a, b).data(), {11}, 0.0);
}

TEST_CASE("matmul: frozen forward and backward values") {
  // Expected values computed with an independent float64 reference
  // implementation (NumPy).
  Tensor a = Tensor::from_data({2, 3}, {0.5, -1.25, 2.0, 3.5, 0.25, -0.75}, true);
  Tensor b = Tensor::from_data({3, 2}, {1.5, -2.0, 0.5, 4.0, -1.0, 0.25}, true);
  Tape tp;
  Tensor c = tp.matmul(a, b);
  check_close(c.data(), {-1.875, -5.5, 6.125, -6.1875}, 1e-12);

  // Upstream gradient dC = [[1,2],[3,4]] injected via an elementwise
  // weighted sum.
  Tensor w = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  tp.backward(tp.sum_all(tp.mul(c, w)));
  check_close(a.grad(), {-2.5, 8.5, -0.5, -3.5, 17.5, -2.0}, 1e-12);
  check_close(b.grad(), {11.0, 15.0, -0.5, -1.5, -0.25, 1.0}, 1e-12);
}

TEST_CASE("matmul: shape mismatch throws") {
  Tape tp;
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(tp.matmul(a, b), ShapeMismatchError);
}

TEST_CASE("matmul: random 5x4 @ 4x3 gradients match finite differences") {
  Rng rng(11);
  Tensor a = Tensor::randn({5, 4}, rng, 0.8, true);
  Tensor b = Tensor::randn({4, 3}, rng, 0.8, true);
  auto f = [&](Tape& tp) { return tp.sum_all(tp.matmul(a, b)); };
  CHECK(fd_max_err(f, {a, b}) < 1e-6);
}

TEST_CASE("softmax: uniform input gives uniform output") {
  Tape tp;
  Tensor y = tp.softmax(Tensor::from_data({3}, {0, 0, 0}), 0);
  check_close(y.data(), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
}

TEST_CASE("softmax: extreme logits stay finite") {
  Tape tp;
  Tensor y = tp.softmax(Tensor::from_data({2}, {1000, 0}), 0);
  CHECK(std::isfinite(y.data()[0]));
  CHECK(y.data()[0] == doctest::Approx(1.0));
  CHECK(y.data()[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax: rows sum to one on both axes") {
  Rng rng(3);
  Tensor x = Tensor::randn({5, 7}, rng, 2.0);
  Tape tp;
  Tensor r = tp.softmax(x, 1);
  for (int i = 0; i < 5; ++i) {
    double s = 0;
    for (int j = 0; j < 7; ++j) s += r.at({i, j});
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  Tensor c = tp.softmax(x, 0);
  for (int j = 0; j < 7; ++j) {
    double s = 0;
    for (int i = 0; i < 5; ++i) s += c.at({i, j});
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("softmax: backward matches finite differences on a length-6 vector") {
  Rng rng(17);
  Tensor x = Tensor::randn({6}, rng, 1.5, true);
  auto f = [&](Tape& tp) { return readout(tp, tp.softmax(x, 0)); };
  CHECK(fd_max_err(f, {x}) < 1e-6);
}

TEST_CASE("layer_norm: constant vector maps to beta") {
  Tape tp;
  Tensor x = Tensor::from_data({4}, {2.5, 2.5, 2.5, 2.5});
  Tensor g = Tensor::full({4}, 1.0);
  Tensor b = Tensor::zeros({4});
  check_close(tp.layer_norm(x, g, b).data(), {0, 0, 0, 0}, 1e-12);
}

TEST_CASE("layer_norm: two-point vector normalizes to +/-1") {
  Tape tp;
  Tensor x = Tensor::from_data({2}, {1, 3});
  Tensor y = tp.layer_norm(x, Tensor::full({2}, 1.0), Tensor::zeros({2}));
  check_close(y.data(), {-1.0, 1.0}, 1e-4);
}

TEST_CASE("layer_norm: frozen affine case") {
  // Independent float64 reference (NumPy).
  Tape tp;
  Tensor x = Tensor::from_data({4}, {0.2, -1.4, 3.1, 0.9});
  Tensor g = Tensor::from_data({4}, {1.5, 0.5, -1.0, 2.0});
  Tensor b = Tensor::from_data({4}, {0.1, -0.2, 0.3, 0.0});
  check_close(tp.layer_norm(x, g, b).data(),
              {-0.36379342378386814, -0.84931079329741554, -1.1841389561083779,
               0.24735649268472962},
              1e-9);
}

TEST_CASE("layer_norm: backward matches finite differences on 3x8 input") {
  Rng rng(23);
  Tensor x = Tensor::randn({3, 8}, rng, 1.2, true);
  Tensor g = Tensor::randn({8}, rng, 0.5, true);
  Tensor b = Tensor::randn({8}, rng, 0.5, true);
  auto f = [&](Tape& tp) { return readout(tp, tp.layer_norm(x, g, b)); };
  CHECK(fd_max_err(f, {x, g, b}) < 1e-6);
}

TEST_CASE("gelu: frozen values of the tanh approximation") {
  // Independent float64 reference (NumPy).
  Tape tp;
  Tensor x = Tensor::from_data({7}, {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0});
  check_close(tp.gelu(x).data(),
              {-0.045402305912224938, -0.15880800939172329, -0.15428599017485606, 0.0,
               0.34571400982514394, 0.84119199060827676, 1.954597694087775},
              1e-12);
}

TEST_CASE("gelu: backward matches finite differences") {
  Rng rng(29);
  Tensor x = Tensor::randn({11}, rng, 1.5, true);
  auto f = [&](Tape& tp) { return readout(tp, tp.gelu(x)); };
  CHECK(fd_max_err(f, {x}) < 1e-6);
}

TEST_CASE("dropout: identity at eval time") {
  Tape tp;  // train_mode defaults to false
  Tensor x = Tensor::from_data({3}, {1, 2, 3});
  Tensor y = tp.dropout(x, 0.5, 99);
  CHECK(y.same_storage(x));
}

TEST_CASE("dropout: train-time mask zeroes or rescales") {
  Tape tp(TapeOptions{.recording = false, .train_mode = true, .check_finite = true});
  Tensor x = Tensor::full({1000}, 1.0);
  Tensor y = tp.dropout(x, 0.25, 7);
  int kept = 0;
  for (double v : y.data()) {
    const bool zero = v == 0.0;
    const bool scaled = std::abs(v - 1.0 / 0.75) < 1e-12;
    CHECK((zero || scaled));
    kept += scaled ? 1 : 0;
  }
  CHECK(kept > 650);
  CHECK(kept < 850);
}

TEST_CASE("dropout: expectation preserved over 10k masks") {
  Rng rng(31);
  Tensor x = Tensor::randn({64}, rng, 1.0);
  double input_mean = 0;
  for (double v : x.data()) input_mean += v;
  input_mean /= 64;
  REQUIRE(std::abs(input_mean) > 0.01);  // keep the relative check meaningful

  double acc = 0;
  const int n_masks = 10000;
  for (int s = 0; s < n_masks; ++s) {
    Tape tp(TapeOptions{.recording = false, .train_mode = true, .check_finite = true});
    Tensor y = tp.dropout(x, 0.3, 1000 + static_cast<std::uint64_t>(s));
    for (double v : y.data()) acc += v;
  }
  const double mean_of_means = acc / (64.0 * n_masks);
  CHECK(std::abs(mean_of_means - input_mean) <= 0.02 * std::abs(input_mean));
}

TEST_CASE("dropout: fixed-seed masked path matches finite differences") {
  Rng rng(37);
  Tensor x = Tensor::randn({12}, rng, 1.0, true);
  auto f = [&](Tape& tp) { return readout(tp, tp.dropout(x, 0.5, 424242)); };
  CHECK(fd_max_err(f, {x}, /*train_mode=*/true) < 1e-6);
}

TEST_CASE("embedding_lookup: copies rows and scatters gradients") {
  Tensor table = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<int> ids{2, 0, 2};
  Tape tp;
  Tensor y = tp.embedding_lookup(table, ids);
  check_close(y.data(), {5, 6, 1, 2, 5, 6}, 0.0);

  tp.backward(tp.sum_all(y));
  // Row 2 referenced twice, row 1 never.
  check_close(table.grad(), {1, 1, 0, 0, 2, 2}, 0.0);

  Tape tp2;
  const std::vector<int> bad{3};
  CHECK_THROWS_AS(tp2.embedding_lookup(table, bad), IndexOutOfRangeError);
}

TEST_CASE("embedding_bag_sum: sums listed rows, empty list gives zero row") {
  Tensor table = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<std::vector<int>> lists{{0, 2}, {}, {1, 1}};
  Tape tp;
  Tensor y = tp.embedding_bag_sum(table, lists);
  check_close(y.data(), {6, 8, 0, 0, 6, 8}, 0.0);
  auto f = [&](Tape& t2) { return readout(t2, t2.embedding_bag_sum(table, lists)); };
  CHECK(fd_max_err(f, {table}) < 1e-6);
}

TEST_CASE("gather_rows / concat_rows / reshape round trips") {
  Tensor x = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  Tape tp;
  const std::vector<int> idx{2, 2, 0};
  check_close(tp.gather_rows(x, idx).data(), {5, 6, 5, 6, 1, 2}, 0.0);

  Tensor a = Tensor::from_data({1, 2}, {7, 8});
  check_close(tp.concat_rows(a, Tensor::from_data({2, 2}, {1, 2, 3, 4})).data(),
              {7, 8, 1, 2, 3, 4}, 0.0);

  check_close(tp.reshape(x, {2, 3}).data(), {1, 2, 3, 4, 5, 6}, 0.0);
  CHECK_THROWS_AS(tp.reshape(x, {4, 2}), ShapeMismatchError);

  auto f = [&](Tape& t2) {
    return readout(t2, t2.concat_rows(t2.gather_rows(x, idx), t2.reshape(x, {3, 2})));
  };
  CHECK(fd_max_err(f, {x}) < 1e-6);
}

TEST_CASE("mean and sum_all: values and gradients") {
  Tensor x = Tensor::from_data({2, 2}, {1, 2, 3, 4}, true);
  Tape tp;
  check_close(tp.mean(x, 0).data(), {2, 3}, 1e-15);
  check_close(tp.mean(x, 1).data(), {1.5, 3.5}, 1e-15);
  CHECK(tp.sum_all(x).item() == 10.0);
  CHECK(tp.mean(Tensor::from_data({3}, {3, 4, 5}), 0).item() == 4.0);

  auto f = [&](Tape& t2) { return readout(t2, t2.mean(x, 0)); };
  CHECK(fd_max_err(f, {x}) < 1e-6);
  auto f1 = [&](Tape& t2) { return readout(t2, t2.mean(x, 1)); };
  CHECK(fd_max_err(f1, {x}) < 1e-6);
}

TEST_CASE("chunk_mean: whole and partial chunks") {
  Tensor x = Tensor::from_data({7, 1}, {1, 2, 3, 4, 5, 6, 7}, true);
  Tape tp;
  check_close(tp.chunk_mean(x, 3).data(), {2, 5, 7}, 1e-15);
  auto f = [&](Tape& t2) { return readout(t2, t2.chunk_mean(x, 3)); };
  CHECK(fd_max_err(f, {x}) < 1e-6);
}

TEST_CASE("add / mul / scale / add_rows / scale_rows gradients") {
  Rng rng(41);
  Tensor a = Tensor::randn({3, 4}, rng, 1.0, true);
  Tensor b = Tensor::randn({3, 4}, rng, 1.0, true);
  Tensor bias = Tensor::randn({4}, rng, 1.0, true);
  const std::vector<double> w{0.5, -1.5, 2.0};
  auto f = [&](Tape& tp) {
    Tensor y = tp.add(tp.mul(a, b), tp.scale(a, 0.7));
    y = tp.add_rows(y, bias);
    return readout(tp, tp.scale_rows(y, w));
  };
  CHECK(fd_max_err(f, {a, b, bias}) < 1e-6);
}

TEST_CASE("cross_entropy_with_logits: uniform two-class logits give ln 2") {
  Tape tp;
  Tensor z = Tensor::from_data({1, 2}, {0, 0});
  const std::vector<int> t{0};
  CHECK(std::abs(tp.cross_entropy_with_logits(z, t).item() - std::log(2.0)) <= 1e-12);
}

TEST_CASE("cross_entropy_with_logits: frozen loss and gradient") {
  // Independent float64 reference (NumPy).
  Tensor z = Tensor::from_data({3, 2}, {2.0, -1.0, 0.5, 0.5, -3.0, 1.0}, true);
  const std::vector<int> t{0, 1, 0};
  Tape tp;
  Tensor loss = tp.cross_entropy_with_logits(z, t);
  CHECK(std::abs(loss.item() - 1.5866281533504989) <= 1e-12);
  tp.backward(loss);
  check_close(z.grad(),
              {-0.015808624392522248, 0.015808624392522262, 0.16666666666666666,
               -0.16666666666666666, -0.32733793001263617, 0.32733793001263617},
              1e-12);

  Tape tp2;
  const std::vector<int> bad{2, 0, 0};
  CHECK_THROWS_AS(tp2.cross_entropy_with_logits(z, bad), IndexOutOfRangeError);
}

TEST_CASE("grouped_mha: single full group matches frozen reference") {
  // Weights and expected output from an independent float64 reference
  // implementation (NumPy).
  Tensor x = Tensor::from_data(
      {3, 4}, {0.00098412268598605944, 0.23899643000677592,  -0.21931028428977406,
               -0.71247347100581937,   -0.36373662813737806, -0.79331724399716996,
               0.048114882077950789,   1.0721721964436268,   -0.39376521484106375,
               -0.49637991985595237,   0.39187364014815862,  0.28550960652804863});
  Tensor w_qkv = Tensor::from_data(
      {4, 12},
      {0.042165699599159424,  -0.37218721788328191, -0.011700728985309397,
       0.27812127778331514,   -0.53768581891403278, -0.18304630441608727,
       -0.76048909592033764,  -0.51581509591399044, -0.73669401511669297,
       -0.094036452429872519, -0.50697859257748135, 0.10850574352868061,
       0.062700434649690065,  -0.07477237785198175, -1.0067038843282052,
       -0.21547715833865466,  -0.019400378160428795, 0.045323594401323025,
       -0.61205430620215751,  -0.19110131041357226, -0.39140763122265582,
       -0.32353489577023975,  0.42435944935443148,  -0.32301387013275862,
       -0.013008681978208239, 0.35375594695326962,  -0.23344017309732079,
       -0.044680779833663857, 0.044185657299792236, 0.025512709702024784,
       -0.49002233056707739,  0.030456092150803239, 0.54352936869661506,
       -0.61885787125139302,  0.34375307520863929,  0.047741610278632496,
       -0.25658815764288856,  0.80016661853696913,  0.30490388483388475,
       -0.47971556084208933,  0.029806491508585373, 0.23067583346807413,
       -0.075512850140299737, 0.2731641068780824,   -0.026606928059766229,
       0.26689902433373119,   0.57540903666246079,  -0.27026490040226114});
  Tensor b_qkv = Tensor::from_data(
      {12}, {0.020313861038960906, -0.046330757653841516, 0.012726841122583083,
             -0.118719452785014,   -0.057930159650267321, -0.019619597280449669,
             0.089876387210040778, 0.11452220074541319,   -0.13235277924842551,
             -0.079464236598704954, 0.064690342257342187, -0.19924197841744945});
  Tensor w_out = Tensor::from_data(
      {4, 4}, {-0.18526794598094679,  -0.038914770268035609, 0.50280599091472788,
               0.27576156022830228,   -0.13088536808887916,  -0.14743035763998366,
               -0.10007816020716997,  0.60941176018246412,   -0.17120997702914689,
               -0.12147215534589176,  0.14103562691410615,   -0.048308178034582053,
               -0.078913691186289034, -0.4456268572604225,   -0.0046085872154192692,
               -0.1774324891897677});
  Tensor b_out = Tensor::from_data({4}, {0.11661277761902228, 0.065308850270116389,
                                         -0.0024143613009932237, 0.066838102326734386});

  Tape tp;
  auto full = std::make_shared<AttentionGroups>(AttentionGroups{{0, 1, 2}});
  Tensor y = tp.grouped_mha(x, full, w_qkv, b_qkv, w_out, b_out, 2);
  check_close(y.data(),
              {0.054560892711960976, 0.10180741746218319, 0.12005017244288856,
               0.17311206284190789,  0.03298773496549777, 0.092013421957202454,
               0.14853397933489854,  0.21782414539820522, 0.039553607295158638,
               0.094809655856294708, 0.14055521836325055, 0.2057418115443046},
              1e-9);

  SUBCASE("overlapping groups average, missing rows zero") {
    auto overlap = std::make_shared<AttentionGroups>(AttentionGroups{{0, 1}, {0, 2}});
    Tensor yo = tp.grouped_mha(x, overlap, w_qkv, b_qkv, w_out, b_out, 2);
    check_close(yo.data(),
                {0.11016687974819879,  0.12483962020887461, 0.037521585789058988,
                 0.09584668552237624,  0.063959293537270617, 0.10224304899909423,
                 0.056048785898986264, 0.22700954593841782, 0.11460450927901593,
                 0.12880125360219935,  0.080283033651692176, 0.046378239860210502},
                1e-9);

    auto partial = std::make_shared<AttentionGroups>(AttentionGroups{{1, 2}});
    Tensor yp = tp.grouped_mha(x, partial, w_qkv, b_qkv, w_out, b_out, 2);
    for (int j = 0; j < 4; ++j) CHECK(yp.at({0, j}) == 0.0);
  }

  SUBCASE("gradients match finite differences") {
    Tensor xg = Tensor::from_data(x.shape(), {x.data().begin(), x.data().end()}, true);
    Tensor wq = Tensor::from_data(w_qkv.shape(), {w_qkv.data().begin(), w_qkv.data().end()}, true);
    Tensor bq = Tensor::from_data(b_qkv.shape(), {b_qkv.data().begin(), b_qkv.data().end()}, true);
    Tensor wo = Tensor::from_data(w_out.shape(), {w_out.data().begin(), w_out.data().end()}, true);
    Tensor bo = Tensor::from_data(b_out.shape(), {b_out.data().begin(), b_out.data().end()}, true);
    auto overlap = std::make_shared<AttentionGroups>(AttentionGroups{{0, 1}, {0, 2}, {1, 2}});
    auto f = [&](Tape& t2) {
      return readout(t2, t2.grouped_mha(xg, overlap, wq, bq, wo, bo, 2));
    };
    CHECK(fd_max_err(f, {xg, wq, bq, wo, bo}) < 1e-5);
  }
}

TEST_CASE("backward: shared subexpression accumulates both paths") {
  Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
  Tape tp;
  // f = sum(2x) + sum(3x): two paths into x, gradient must be exactly 5.
  Tensor f = tp.add(tp.scale(x, 2.0), tp.scale(x, 3.0));
  tp.backward(tp.sum_all(f));
  check_close(x.grad(), {5, 5, 5}, 0.0);
}

TEST_CASE("backward: usage errors") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  Tape tp;
  Tensor s = tp.sum_all(x);
  tp.backward(s);
  CHECK_THROWS_AS(tp.backward(s), ConfigError);

  Tape eval(TapeOptions{.recording = false, .train_mode = false, .check_finite = true});
  Tensor s2 = eval.sum_all(x);
  CHECK_THROWS_AS(eval.backward(s2), ConfigError);

  Tape tp3;
  Tensor y = tp3.scale(x, 2.0);
  CHECK_THROWS_AS(tp3.backward(y), ShapeMismatchError);
}

TEST_CASE("non-finite op output raises an error") {
  Tape tp;
  Tensor x = Tensor::from_data({1}, {1e308});
  CHECK_THROWS_AS(tp.scale(x, 10.0), NonFiniteError);
  Tape unchecked(TapeOptions{.recording = true, .train_mode = false, .check_finite = false});
  CHECK_NOTHROW(unchecked.scale(x, 10.0));
}

TEST_CASE("grad_check: sum of matmul against finite differences") {
  Rng rng(43);
  Tensor a = Tensor::randn({4, 4}, rng, 1.0, true);
  Tensor b = Tensor::randn({4, 4}, rng, 1.0, true);
  auto f = [&](Tape& tp) { return tp.sum_all(tp.matmul(a, b)); };
  CHECK(grad_check(f, {a, b}).max_rel_err < 1e-7);
}

TEST_CASE("grad_check: constant function has exactly zero gradient") {
  Tensor x = Tensor::from_data({3}, {1, 2, 3}, true);
  auto f = [](Tape&) { return Tensor::scalar(3.25); };
  GradCheckResult r = grad_check(f, {x});
  CHECK(r.max_rel_err == 0.0);
  CHECK(r.entries_checked == 3);
}

TEST_CASE("grad_check: non-deterministic function is rejected") {
  Tensor x = Tensor::from_data({2}, {1, 2}, true);
  int calls = 0;
  auto f = [&calls](Tape&) mutable { return Tensor::scalar(static_cast<double>(++calls)); };
  CHECK_THROWS_AS(grad_check(f, {x}), NonDeterministicError);
}

TEST_CASE("grad_check: sampled-entry mode stays within budget") {
  Rng rng(47);
  Tensor a = Tensor::randn({8, 8}, rng, 0.5, true);
  auto f = [&](Tape& tp) { return readout(tp, tp.gelu(a)); };
  GradCheckOptions o;
  o.max_entries_per_param = 5;
  GradCheckResult r = grad_check(f, {a}, o);
  CHECK(r.entries_checked <= 5);
  CHECK(r.entries_checked >= 1);
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("randomized small-shape gradient sweep across ops") {
  for (std::uint64_t seed : {101, 202, 303}) {
    Rng rng(seed);
    const int m = 1 + static_cast<int>(rng.below(4));
    const int k = 1 + static_cast<int>(rng.below(4));
    const int n = 1 + static_cast<int>(rng.below(4));
    CAPTURE(seed);

    Tensor a = Tensor::randn({m, k}, rng, 1.0, true);
    Tensor b = Tensor::randn({k, n}, rng, 1.0, true);
    Tensor g = Tensor::randn({n}, rng, 0.4, true);
    Tensor be = Tensor::randn({n}, rng, 0.4, true);
    auto f = [&](Tape& tp) {
      Tensor y = tp.matmul(a, b);
      y = tp.layer_norm(y, g, be);
      y = tp.gelu(y);
      y = tp.softmax(y, 1);
      return readout(tp, y);
    };
    CHECK(fd_max_err(f, {a, b, g, be}) < 1e-5);

    const int heads = (k % 2 == 0) ? 2 : 1;
    Tensor xx = Tensor::randn({m + 2, 2 * heads}, rng, 0.9, true);
    Tensor wq = Tensor::randn({2 * heads, 6 * heads}, rng, 0.4, true);
    Tensor bq = Tensor::randn({6 * heads}, rng, 0.2, true);
    Tensor wo = Tensor::randn({2 * heads, 2 * heads}, rng, 0.4, true);
    Tensor bo = Tensor::randn({2 * heads}, rng, 0.2, true);
    auto groups = std::make_shared<AttentionGroups>();
    groups->push_back({0, 1});
    for (int r = 2; r < m + 2; ++r) groups->back().push_back(r);
    groups->push_back({0, static_cast<int>(rng.below(static_cast<std::uint64_t>(m + 2)))});
    auto fm = [&](Tape& tp) {
      return readout(tp, tp.grouped_mha(xx, groups, wq, bq, wo, bo, heads));
    };
    CHECK(fd_max_err(fm, {xx, wq, bq, wo, bo}) < 1e-5);
  }
}

}  // TEST_SUITE
