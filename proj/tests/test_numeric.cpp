#include <doctest.h>

#include <cmath>

#include "ops.hpp"

using namespace protoforge;

namespace {

Array2<double> random_array(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Array2<double> out(rows, cols);
  for (size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform_real(lo, hi);
  return out;
}

// independent scalar oracles --------------------------------------------------

Array2<double> gather_oracle(const Array2<double>& table, const std::vector<int>& ids) {
  Array2<double> out(static_cast<int>(ids.size()), table.cols());
  for (size_t i = 0; i < ids.size(); ++i)
    for (int c = 0; c < table.cols(); ++c) out.at(static_cast<int>(i), c) = table.at(ids[i], c);
  return out;
}

Array2<double> conv_oracle(const Array2<double>& in, const Array2<double>& kernel,
                           const Array2<double>& bias, int window) {
  const int steps = in.rows(), d = in.cols(), d_h = kernel.cols(), half = (window - 1) / 2;
  Array2<double> out(steps, d_h);
  for (int t = 0; t < steps; ++t)
    for (int c = 0; c < d_h; ++c) {
      double acc = bias.at(0, c);
      for (int k = 0; k < window; ++k)
        for (int j = 0; j < d; ++j) {
          int src = t + k - half;
          if (src >= 0 && src < steps) acc += in.at(src, j) * kernel.at(k * d + j, c);
        }
      out.at(t, c) = acc;
    }
  return out;
}

Array2<double> matmul_oracle(const Array2<double>& a, const Array2<double>& w,
                             const Array2<double>& b) {
  Array2<double> out(a.rows(), w.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) {
      double acc = b.at(0, j);
      for (int k = 0; k < a.cols(); ++k) acc += a.at(i, k) * w.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

Array2<double> sqdist_oracle(const Array2<double>& a, const Array2<double>& b) {
  Array2<double> out(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) {
      double acc = 0;
      for (int k = 0; k < a.cols(); ++k) {
        double d = a.at(i, k) - b.at(j, k);
        acc += d * d;
      }
      out.at(i, j) = acc;
    }
  return out;
}

}  // namespace

TEST_CASE("embedding_lookup gathers identity rows") {
  Array2<double> table(3, 3);
  for (int i = 0; i < 3; ++i) table.at(i, i) = 1.0;
  std::vector<int> ids = {2, 0};
  Array2<double> out = embedding_lookup<double>(table, ids);
  CHECK(out.rows() == 2);
  CHECK(out.at(0, 2) == 1.0);
  CHECK(out.at(0, 0) == 0.0);
  CHECK(out.at(1, 0) == 1.0);
}

TEST_CASE("embedding_lookup rejects out-of-range id naming it") {
  Array2<double> table(3, 2);
  std::vector<int> ids = {5};
  CHECK_THROWS_WITH_AS(embedding_lookup<double>(table, ids),
                       doctest::Contains("id 5"), IndexError);
}

TEST_CASE("embedding_lookup matches gather oracle on random table") {
  Rng rng(11);
  Array2<double> table = random_array(10, 4, rng);
  std::vector<int> ids = {3, 7, 3};
  Array2<double> out = embedding_lookup<double>(table, ids);
  CHECK(out == gather_oracle(table, ids));
}

TEST_CASE("embedding_lookup backward accumulates duplicate ids") {
  Array2<double> grad_out(2, 2);
  grad_out.at(0, 0) = 1.0;
  grad_out.at(0, 1) = 2.0;
  grad_out.at(1, 0) = 10.0;
  grad_out.at(1, 1) = 20.0;
  std::vector<int> ids = {1, 1};
  Array2<double> table_grad(3, 2);
  embedding_lookup_backward<double>(ids, grad_out, table_grad);
  CHECK(table_grad.at(1, 0) == 11.0);
  CHECK(table_grad.at(1, 1) == 22.0);
  CHECK(table_grad.at(0, 0) == 0.0);
}

TEST_CASE("embedding_lookup backward conserves gradient mass") {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    int rows = 3 + static_cast<int>(rng.uniform_int(8));
    int n = 1 + static_cast<int>(rng.uniform_int(12));
    std::vector<int> ids(n);
    for (int& id : ids) id = static_cast<int>(rng.uniform_int(rows));
    Array2<double> grad_out = random_array(n, 3, rng);
    Array2<double> table_grad(rows, 3);
    embedding_lookup_backward<double>(ids, grad_out, table_grad);
    double up = 0, down = 0;
    for (size_t i = 0; i < grad_out.size(); ++i) up += grad_out[i];
    for (size_t i = 0; i < table_grad.size(); ++i) down += table_grad[i];
    CHECK(down == doctest::Approx(up).epsilon(1e-12));
  }
}

TEST_CASE("conv1d_same with a centered delta kernel reproduces the input slice") {
  // kernel that copies input channel 1 at the center tap into channel 0
  Array2<double> kernel(3 * 2, 1);
  kernel.at(1 * 2 + 1, 0) = 1.0;
  Array2<double> bias(1, 1);
  Rng rng(13);
  Array2<double> in = random_array(5, 2, rng);
  Array2<double> out = conv1d_same(in, kernel, bias, 3);
  for (int t = 0; t < 5; ++t) CHECK(out.at(t, 0) == in.at(t, 1));
}

TEST_CASE("conv1d_same on all-zero input broadcasts the bias") {
  Array2<double> in(4, 3);
  Array2<double> kernel(9, 2);
  Array2<double> bias(1, 2);
  bias.at(0, 0) = 0.5;
  bias.at(0, 1) = -1.5;
  Array2<double> out = conv1d_same(in, kernel, bias, 3);
  for (int t = 0; t < 4; ++t) {
    CHECK(out.at(t, 0) == 0.5);
    CHECK(out.at(t, 1) == -1.5);
  }
}

TEST_CASE("conv1d_same rejects an even window") {
  Array2<double> in(4, 3), kernel(12, 2), bias(1, 2);
  CHECK_THROWS_AS(conv1d_same(in, kernel, bias, 4), ConfigError);
}

TEST_CASE("conv1d_same matches the naive triple-loop oracle") {
  Rng rng(14);
  Array2<double> in = random_array(5, 2, rng);
  Array2<double> kernel = random_array(6, 4, rng);
  Array2<double> bias = random_array(1, 4, rng);
  Array2<double> out = conv1d_same(in, kernel, bias, 3);
  Array2<double> expect = conv_oracle(in, kernel, bias, 3);
  REQUIRE(out.rows() == expect.rows());
  for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("max_over_time basics") {
  SUBCASE("single row is returned unchanged") {
    Array2<double> in(1, 3);
    in.at(0, 0) = -1;
    in.at(0, 1) = 0.5;
    in.at(0, 2) = 2;
    MaxPool<double> p = max_over_time(in);
    CHECK(p.values.at(0, 0) == -1);
    CHECK(p.values.at(0, 2) == 2);
    CHECK(p.argmax == std::vector<int>{0, 0, 0});
  }
  SUBCASE("column [1,3,2] pools to 3 with gradient on row 1") {
    Array2<double> in(3, 1);
    in.at(0, 0) = 1;
    in.at(1, 0) = 3;
    in.at(2, 0) = 2;
    MaxPool<double> p = max_over_time(in);
    CHECK(p.values.at(0, 0) == 3);
    CHECK(p.argmax[0] == 1);
    Array2<double> g(1, 1);
    g.at(0, 0) = 5.0;
    Array2<double> gin(3, 1);
    max_over_time_backward(p.argmax, g, gin);
    CHECK(gin.at(0, 0) == 0);
    CHECK(gin.at(1, 0) == 5.0);
    CHECK(gin.at(2, 0) == 0);
  }
  SUBCASE("empty input is a shape error") {
    Array2<double> in(0, 3);
    CHECK_THROWS_AS(max_over_time(in), ShapeError);
  }
}

TEST_CASE("max_over_time tie routes the whole gradient to row 0") {
  // tie [2, 2]: the subgradient choice is the first row; the one-sided
  // difference from above at row 0 equals the routed gradient
  Array2<double> in(2, 1);
  in.at(0, 0) = 2.0;
  in.at(1, 0) = 2.0;
  MaxPool<double> p = max_over_time(in);
  CHECK(p.argmax[0] == 0);
  Array2<double> g(1, 1);
  g.at(0, 0) = 1.0;
  Array2<double> gin(2, 1);
  max_over_time_backward(p.argmax, g, gin);
  CHECK(gin.at(0, 0) == 1.0);
  CHECK(gin.at(1, 0) == 0.0);
  const double eps = 1e-6;
  auto pool_max = [&](double x0, double x1) { return std::max(x0, x1); };
  double one_sided_up = (pool_max(2.0 + eps, 2.0) - pool_max(2.0, 2.0)) / eps;
  CHECK(one_sided_up == doctest::Approx(gin.at(0, 0)));
}

TEST_CASE("pairwise_sq_euclidean basics and oracle") {
  SUBCASE("zero diagonal when A = B") {
    Rng rng(15);
    Array2<double> a = random_array(4, 3, rng);
    Array2<double> d = pairwise_sq_euclidean(a, a);
    for (int i = 0; i < 4; ++i) CHECK(d.at(i, i) == 0.0);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(d.at(i, j) == d.at(j, i));
  }
  SUBCASE("3-4-5 triangle") {
    Array2<double> a(1, 2), b(1, 2);
    b.at(0, 0) = 3;
    b.at(0, 1) = 4;
    CHECK(pairwise_sq_euclidean(a, b).at(0, 0) == 25.0);
  }
  SUBCASE("random 4x3 vs 5x3 matches the double-loop oracle bit for bit") {
    Rng rng(16);
    Array2<double> a = random_array(4, 3, rng);
    Array2<double> b = random_array(5, 3, rng);
    CHECK(pairwise_sq_euclidean(a, b) == sqdist_oracle(a, b));
  }
  SUBCASE("dimension mismatch is a shape error") {
    Array2<double> a(2, 3), b(2, 4);
    CHECK_THROWS_AS(pairwise_sq_euclidean(a, b), ShapeError);
  }
}

TEST_CASE("pairwise_sq_euclidean is nonnegative and zero iff rows equal") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    Array2<double> a = random_array(3, 4, rng);
    Array2<double> b = random_array(3, 4, rng);
    int dup = static_cast<int>(rng.uniform_int(3));
    for (int c = 0; c < 4; ++c) b.at(dup, c) = a.at(dup, c);
    Array2<double> d = pairwise_sq_euclidean(a, b);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        CHECK(d.at(i, j) >= 0.0);
        bool rows_equal = true;
        for (int c = 0; c < 4; ++c) rows_equal = rows_equal && a.at(i, c) == b.at(j, c);
        CHECK((d.at(i, j) == 0.0) == rows_equal);
      }
  }
}

TEST_CASE("sigmoid values") {
  Array2<double> x(1, 3);
  x.at(0, 0) = 0.0;
  x.at(0, 1) = 1000.0;
  x.at(0, 2) = -1000.0;
  Array2<double> y = sigmoid(x);
  CHECK(y.at(0, 0) == 0.5);
  CHECK(y.at(0, 1) == doctest::Approx(1.0));
  CHECK(y.at(0, 2) == doctest::Approx(0.0));
  CHECK(std::isfinite(y.at(0, 1)));

  // high-precision reference for sigmoid(1)
  Array2<double> one(1, 1);
  one.at(0, 0) = 1.0;
  CHECK(sigmoid(one).at(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
}

TEST_CASE("sigmoid stays strictly inside (0,1) including +-1e6") {
  Rng rng(18);
  Array2<double> x(1, 202);
  x.at(0, 0) = 1e6;
  x.at(0, 1) = -1e6;
  for (int i = 2; i < 202; ++i) x.at(0, i) = rng.uniform_real(-50, 50);
  Array2<double> y = sigmoid(x);
  for (size_t i = 0; i < y.size(); ++i) {
    CHECK(y[i] > 0.0);
    CHECK(y[i] < 1.0);
  }
}

TEST_CASE("log_softmax_nll uniform scores give ln C per row") {
  Array2<double> scores(2, 5);
  scores.fill(0.7);
  std::vector<int> labels = {0, 3};
  NllResult<double> res = log_softmax_nll<double>(scores, labels);
  CHECK(res.loss == doctest::Approx(2.0 * std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("log_softmax_nll with a dominant score drives the loss to zero") {
  Array2<double> scores(1, 3);
  scores.at(0, 0) = 1000.0;
  std::vector<int> labels = {0};
  NllResult<double> res = log_softmax_nll<double>(scores, labels);
  CHECK(res.loss == doctest::Approx(0.0));
  CHECK(std::isfinite(res.loss));
}

TEST_CASE("log_softmax_nll matches the direct exp/normalize oracle") {
  Rng rng(19);
  Array2<double> scores = random_array(3, 4, rng, -3, 3);
  std::vector<int> labels = {2, 0, 3};
  NllResult<double> res = log_softmax_nll<double>(scores, labels);
  double expect = 0;
  for (int i = 0; i < 3; ++i) {
    double z = 0;
    for (int c = 0; c < 4; ++c) z += std::exp(scores.at(i, c));
    expect -= std::log(std::exp(scores.at(i, labels[i])) / z);
    for (int c = 0; c < 4; ++c) {
      double p = std::exp(scores.at(i, c)) / z;
      double g = p - (c == labels[i] ? 1.0 : 0.0);
      CHECK(res.grad_scores.at(i, c) == doctest::Approx(g).epsilon(1e-10));
    }
  }
  CHECK(res.loss == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("log_softmax_nll row gradients sum to zero") {
  Rng rng(20);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_int(5));
    int c = 2 + static_cast<int>(rng.uniform_int(6));
    Array2<double> scores = random_array(n, c, rng, -10, 10);
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.uniform_int(c));
    NllResult<double> res = log_softmax_nll<double>(scores, labels);
    for (int i = 0; i < n; ++i) {
      double sum = 0;
      for (int j = 0; j < c; ++j) sum += res.grad_scores.at(i, j);
      CHECK(std::fabs(sum) < 1e-12);
    }
  }
}

TEST_CASE("log_softmax_nll rejects an out-of-range label") {
  Array2<double> scores(1, 3);
  std::vector<int> labels = {3};
  CHECK_THROWS_AS(log_softmax_nll<double>(scores, labels), IndexError);
}

TEST_CASE("linear identity and bias broadcast") {
  Array2<double> w(3, 3);
  for (int i = 0; i < 3; ++i) w.at(i, i) = 1.0;
  Array2<double> b(1, 3);
  Rng rng(21);
  Array2<double> in = random_array(2, 3, rng);
  CHECK(linear(in, w, b) == in);

  Array2<double> zero_in(2, 3);
  Array2<double> bias(1, 3);
  bias.at(0, 0) = 1;
  bias.at(0, 1) = 2;
  bias.at(0, 2) = 3;
  Array2<double> out = linear(zero_in, w, bias);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) CHECK(out.at(i, j) == bias.at(0, j));
}

TEST_CASE("linear matches the triple-loop oracle") {
  Rng rng(22);
  Array2<double> in = random_array(2, 3, rng);
  Array2<double> w = random_array(3, 4, rng);
  Array2<double> b = random_array(1, 4, rng);
  Array2<double> out = linear(in, w, b);
  Array2<double> expect = matmul_oracle(in, w, b);
  for (size_t i = 0; i < out.size(); ++i)
    CHECK(out[i] == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("linear rejects mismatched shapes") {
  Array2<double> in(2, 3), w(4, 4), b(1, 4);
  CHECK_THROWS_AS(linear(in, w, b), ShapeError);
}

TEST_CASE("dropout") {
  Rng rng(23);
  Array2<double> in = random_array(3, 4, rng);

  SUBCASE("rate 0 is the identity in both modes") {
    Rng r1(1);
    CHECK(dropout<double>(in, 0.0, Mode::kTrain, r1, nullptr) == in);
    CHECK(dropout<double>(in, 0.0, Mode::kEval, r1, nullptr) == in);
  }
  SUBCASE("eval mode ignores the rate") {
    Rng r1(1);
    CHECK(dropout<double>(in, 0.2, Mode::kEval, r1, nullptr) == in);
  }
  SUBCASE("rate >= 1 is a configuration error") {
    Rng r1(1);
    CHECK_THROWS_AS(dropout<double>(in, 1.0, Mode::kTrain, r1, nullptr), ConfigError);
  }
  SUBCASE("train mode preserves the mean within 2% over 1e5 samples") {
    Array2<double> ones = Array2<double>::filled(1, 100000, 1.0);
    Rng r1(99);
    Array2<double> out = dropout<double>(ones, 0.2, Mode::kTrain, r1, nullptr);
    double mean = 0;
    for (size_t i = 0; i < out.size(); ++i) mean += out[i];
    mean /= out.size();
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
  }
  SUBCASE("backward routes through the recorded mask") {
    Rng r1(7);
    Array2<double> mask;
    Array2<double> out = dropout(in, 0.5, Mode::kTrain, r1, &mask);
    Array2<double> g = Array2<double>::filled(3, 4, 1.0);
    Array2<double> gin(3, 4);
    dropout_backward(mask, g, gin);
    CHECK(gin == mask);
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == in[i] * mask[i]);
  }
}

TEST_CASE("relu and tanh forward/backward") {
  Array2<double> x(1, 4);
  x.at(0, 0) = -2;
  x.at(0, 1) = 0;
  x.at(0, 2) = 0.5;
  x.at(0, 3) = 3;
  Array2<double> y = relu(x);
  CHECK(y.at(0, 0) == 0);
  CHECK(y.at(0, 1) == 0);
  CHECK(y.at(0, 2) == 0.5);
  Array2<double> g = Array2<double>::filled(1, 4, 1.0);
  Array2<double> gin(1, 4);
  relu_backward(x, g, gin);
  CHECK(gin.at(0, 0) == 0);
  CHECK(gin.at(0, 1) == 0);  // subgradient at 0 chosen as 0
  CHECK(gin.at(0, 2) == 1);

  Array2<double> t = tanh_act(x);
  CHECK(t.at(0, 3) == doctest::Approx(std::tanh(3.0)));
  Array2<double> gt(1, 4);
  tanh_backward(t, g, gt);
  CHECK(gt.at(0, 2) == doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)));
}
