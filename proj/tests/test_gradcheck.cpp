#include <doctest.h>

#include <cmath>

#include "grad_check.hpp"
#include "ops.hpp"

using namespace protoforge;

namespace {

Array2<double> random_array(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Array2<double> out(rows, cols);
  for (size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform_real(lo, hi);
  return out;
}

// scalarize an op output with fixed weights, so every op reduces to a loss
double weighted_sum(const Array2<double>& x, const Array2<double>& w) {
  double acc = 0;
  for (size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i];
  return acc;
}

void expect_pass(const GradCheckReport& report) {
  for (const auto& e : report.entries) {
    INFO("param ", e.param, " max_rel_err ", e.max_rel_err);
    CHECK(e.pass);
    CHECK(e.checked > 0);
  }
  CHECK(report.pass);
}

}  // namespace

TEST_CASE("grad_check on a quadratic recovers the analytic gradient") {
  ParamStore<double> params;
  Array2<double> x(1, 2);
  x.at(0, 0) = 1.0;
  x.at(0, 1) = 2.0;
  params.add("x", x);

  auto loss_fn = [&](bool with_grad) {
    const Array2<double>& v = params.value("x");
    double loss = v.at(0, 0) * v.at(0, 0) + v.at(0, 1) * v.at(0, 1);
    if (with_grad) {
      params.grad("x").at(0, 0) += 2.0 * v.at(0, 0);
      params.grad("x").at(0, 1) += 2.0 * v.at(0, 1);
    }
    return loss;
  };

  Rng rng(1);
  GradCheckReport report = grad_check(loss_fn, params, {"x"}, 1e-3, 1e-4, 100, rng);
  expect_pass(report);
  CHECK(report.entries[0].max_rel_err < 1e-9);
}

TEST_CASE("grad_check flags a wrong analytic gradient") {
  ParamStore<double> params;
  params.add("x", Array2<double>::filled(1, 1, 1.5));
  auto loss_fn = [&](bool with_grad) {
    double v = params.value("x").at(0, 0);
    if (with_grad) params.grad("x").at(0, 0) += 3.0 * v;  // wrong: true grad is 2v
    return v * v;
  };
  Rng rng(2);
  GradCheckReport report = grad_check(loss_fn, params, {"x"}, 1e-3, 1e-4, 10, rng);
  CHECK_FALSE(report.pass);
}

TEST_CASE("grad_check detects a non-deterministic loss") {
  ParamStore<double> params;
  params.add("x", Array2<double>::filled(1, 1, 1.0));
  int calls = 0;
  auto loss_fn = [&](bool) { return params.value("x").at(0, 0) + 0.001 * calls++; };
  Rng rng(3);
  CHECK_THROWS_AS(grad_check(loss_fn, params, {"x"}, 1e-3, 1e-4, 10, rng), DeterminismError);
}

TEST_CASE("grad_check excludes a max-pool tie as a subgradient coordinate") {
  // two tied inputs feeding a max: the analytic rule sends everything to the
  // first row, the central difference sees half the slope on each
  ParamStore<double> params;
  params.add("x", Array2<double>::filled(2, 1, 2.0));
  auto loss_fn = [&](bool with_grad) {
    MaxPool<double> pool = max_over_time(params.value("x"));
    if (with_grad) {
      Array2<double> g(1, 1);
      g.at(0, 0) = 1.0;
      max_over_time_backward(pool.argmax, g, params.grad("x"));
    }
    return pool.values.at(0, 0);
  };
  Rng rng(4);
  GradCheckReport report = grad_check(loss_fn, params, {"x"}, 1e-3, 1e-4, 10, rng);
  CHECK(report.pass);  // both tied coordinates are excluded, not failed
  CHECK(report.entries[0].skipped_nonsmooth == 2);
}

TEST_CASE("every op backward matches central differences at 1e-4") {
  Rng seed_rng(5);
  const double eps = 1e-3, tol = 1e-4;
  const int coords = 100;

  SUBCASE("embedding_lookup") {
    ParamStore<double> params;
    Rng rng(51);
    params.add("table", random_array(6, 4, rng));
    std::vector<int> ids = {1, 5, 1, 0};
    Array2<double> w = random_array(4, 4, rng);
    auto loss_fn = [&](bool with_grad) {
      Array2<double> out = embedding_lookup<double>(params.value("table"), ids);
      if (with_grad) {
        Array2<double> g = w;
        embedding_lookup_backward<double>(ids, g, params.grad("table"));
      }
      return weighted_sum(out, w);
    };
    Rng rng2(52);
    expect_pass(grad_check(loss_fn, params, {"table"}, eps, tol, coords, rng2));
  }

  SUBCASE("conv1d_same") {
    ParamStore<double> params;
    Rng rng(53);
    params.add("in", random_array(5, 3, rng));
    params.add("kernel", random_array(9, 4, rng));
    params.add("bias", random_array(1, 4, rng));
    Array2<double> w = random_array(5, 4, rng);
    auto loss_fn = [&](bool with_grad) {
      Array2<double> out = conv1d_same(params.value("in"), params.value("kernel"),
                                       params.value("bias"), 3);
      if (with_grad) {
        Array2<double> gin(5, 3);
        conv1d_same_backward(params.value("in"), params.value("kernel"), 3, w, gin,
                             params.grad("kernel"), params.grad("bias"));
        for (size_t i = 0; i < gin.size(); ++i) params.grad("in")[i] += gin[i];
      }
      return weighted_sum(out, w);
    };
    Rng rng2(54);
    expect_pass(grad_check(loss_fn, params, {"in", "kernel", "bias"}, eps, tol, coords, rng2));
  }

  SUBCASE("max_over_time away from ties") {
    ParamStore<double> params;
    Rng rng(55);
    params.add("in", random_array(6, 5, rng));
    Array2<double> w = random_array(1, 5, rng);
    auto loss_fn = [&](bool with_grad) {
      MaxPool<double> pool = max_over_time(params.value("in"));
      if (with_grad) max_over_time_backward(pool.argmax, w, params.grad("in"));
      return weighted_sum(pool.values, w);
    };
    Rng rng2(56);
    expect_pass(grad_check(loss_fn, params, {"in"}, eps, tol, coords, rng2));
  }

  SUBCASE("pairwise_sq_euclidean") {
    ParamStore<double> params;
    Rng rng(57);
    params.add("a", random_array(4, 3, rng));
    params.add("b", random_array(5, 3, rng));
    Array2<double> w = random_array(4, 5, rng);
    auto loss_fn = [&](bool with_grad) {
      Array2<double> d = pairwise_sq_euclidean(params.value("a"), params.value("b"));
      if (with_grad)
        pairwise_sq_euclidean_backward(params.value("a"), params.value("b"), w,
                                       params.grad("a"), params.grad("b"));
      return weighted_sum(d, w);
    };
    Rng rng2(58);
    expect_pass(grad_check(loss_fn, params, {"a", "b"}, eps, tol, coords, rng2));
  }

  SUBCASE("sigmoid, relu, tanh") {
    ParamStore<double> params;
    Rng rng(59);
    params.add("x", random_array(3, 4, rng, -2, 2));
    Array2<double> w = random_array(3, 4, rng);
    auto loss_fn = [&](bool with_grad) {
      const Array2<double>& x = params.value("x");
      Array2<double> s = sigmoid(x);
      Array2<double> r = relu(x);
      Array2<double> t = tanh_act(x);
      if (with_grad) {
        sigmoid_backward(s, w, params.grad("x"));
        relu_backward(x, w, params.grad("x"));
        tanh_backward(t, w, params.grad("x"));
      }
      return weighted_sum(s, w) + weighted_sum(r, w) + weighted_sum(t, w);
    };
    Rng rng2(60);
    expect_pass(grad_check(loss_fn, params, {"x"}, eps, tol, coords, rng2));
  }

  SUBCASE("log_softmax_nll") {
    ParamStore<double> params;
    Rng rng(61);
    params.add("scores", random_array(4, 6, rng, -2, 2));
    std::vector<int> labels = {2, 0, 5, 3};
    auto loss_fn = [&](bool with_grad) {
      NllResult<double> res = log_softmax_nll<double>(params.value("scores"), labels);
      if (with_grad)
        for (size_t i = 0; i < res.grad_scores.size(); ++i)
          params.grad("scores")[i] += res.grad_scores[i];
      return res.loss;
    };
    Rng rng2(62);
    expect_pass(grad_check(loss_fn, params, {"scores"}, eps, tol, coords, rng2));
  }

  SUBCASE("linear") {
    ParamStore<double> params;
    Rng rng(63);
    params.add("in", random_array(3, 4, rng));
    params.add("w", random_array(4, 5, rng));
    params.add("b", random_array(1, 5, rng));
    Array2<double> w = random_array(3, 5, rng);
    auto loss_fn = [&](bool with_grad) {
      Array2<double> out = linear(params.value("in"), params.value("w"), params.value("b"));
      if (with_grad) {
        Array2<double> gin(3, 4);
        linear_backward(params.value("in"), params.value("w"), w, gin, params.grad("w"),
                        params.grad("b"));
        for (size_t i = 0; i < gin.size(); ++i) params.grad("in")[i] += gin[i];
      }
      return weighted_sum(out, w);
    };
    Rng rng2(64);
    expect_pass(grad_check(loss_fn, params, {"in", "w", "b"}, eps, tol, coords, rng2));
  }

  SUBCASE("dropout with a seed-frozen mask") {
    ParamStore<double> params;
    Rng rng(65);
    params.add("x", random_array(3, 4, rng));
    Array2<double> w = random_array(3, 4, rng);
    auto loss_fn = [&](bool with_grad) {
      Rng mask_rng(777);  // same mask on every call
      Array2<double> mask;
      Array2<double> out = dropout(params.value("x"), 0.3, Mode::kTrain, mask_rng, &mask);
      if (with_grad) dropout_backward(mask, w, params.grad("x"));
      return weighted_sum(out, w);
    };
    Rng rng2(66);
    expect_pass(grad_check(loss_fn, params, {"x"}, eps, tol, coords, rng2));
  }
}
