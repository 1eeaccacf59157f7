#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "mf/checkpoint.hpp"
#include "mf/error.hpp"
#include "mf/ops.hpp"
#include "mf/optim.hpp"
#include "mf/rng.hpp"
#include "mf/tensor.hpp"
#include "oracles.hpp"

using namespace mf;

TEST_CASE("tensor invariants") {
  Tensor t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.at2(1, 2) == 6);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), DimensionError);
  Tensor bad = Tensor::from({2}, {1.0, std::nan("")});
  CHECK_THROWS_AS(bad.check_finite("bad"), NumericError);
}

TEST_CASE("matmul identity and dot product") {
  Tensor id = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor a = Tensor::from({2, 2}, {2, 3, 4, 5});
  Tensor left = matmul(id, a);
  Tensor right = matmul(a, id);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(left.at(i) == a.at(i));
    CHECK(right.at(i) == a.at(i));
  }

  Tensor r = Tensor::from({1, 2}, {1, 2});
  Tensor c = Tensor::from({2, 1}, {3, 4});
  CHECK(matmul(r, c).scalar_value() == 11.0);

  CHECK_THROWS_AS(matmul(r, r), DimensionError);
}

TEST_CASE("matmul gradient vs finite differences") {
  Rng rng(7);
  ParameterStore params;
  std::vector<double> av(12), bv(8);
  for (auto& v : av) v = rng.uniform(-1, 1);
  for (auto& v : bv) v = rng.uniform(-1, 1);
  params.add("a", Tensor::from({3, 4}, av, true));
  params.add("b", Tensor::from({4, 2}, bv, true));

  auto loss_value = [&]() {
    Tensor c = matmul(params.get("a"), params.get("b"));
    // weight entries unevenly so gradients differ per element
    double acc = 0.0;
    for (std::size_t i = 0; i < c.numel(); ++i) acc += (1.0 + 0.3 * i) * c.at(i);
    return acc;
  };
  {
    Tape tape;
    Tensor c = matmul(params.get("a"), params.get("b"));
    std::vector<double> w(c.numel());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + 0.3 * i;
    Tensor weighted = mul(c, Tensor::from(c.shape, w));
    backward(sum_all(weighted));
  }
  auto report = oracles::finite_difference_check(params, loss_value);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("softmax examples") {
  Tensor sym = softmax_rows(Tensor::from({1, 2}, {0, 0}));
  CHECK(sym.at(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sym.at(1) == doctest::Approx(0.5).epsilon(1e-12));

  // scalar exp/sum oracle
  Tensor s = softmax_rows(Tensor::from({1, 3}, {1, 2, 3}));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(s.at(0) == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
  CHECK(s.at(1) == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
  CHECK(s.at(2) == doctest::Approx(std::exp(3.0) / z).epsilon(1e-12));
  CHECK(s.at(0) == doctest::Approx(0.09003).epsilon(1e-4));
  CHECK(s.at(1) == doctest::Approx(0.24473).epsilon(1e-4));
  CHECK(s.at(2) == doctest::Approx(0.66524).epsilon(1e-4));
}

TEST_CASE("softmax shift invariance and row sums") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(6);
    for (auto& v : x) v = rng.uniform(-30, 30);
    Tensor base = softmax_rows(Tensor::from({2, 3}, x));
    for (std::size_t r = 0; r < 2; ++r) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 3; ++j) sum += base.at2(r, j);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    const double c = rng.uniform(-100, 100);
    std::vector<double> shifted = x;
    for (auto& v : shifted) v += c;
    Tensor moved = softmax_rows(Tensor::from({2, 3}, shifted));
    for (std::size_t i = 0; i < 6; ++i)
      CHECK(moved.at(i) == doctest::Approx(base.at(i)).epsilon(1e-10));
  }
}

TEST_CASE("layer_norm examples and gradient") {
  Tensor gain = Tensor::from({3}, {1, 1, 1});
  Tensor bias = Tensor::from({3}, {0, 0, 0});
  Tensor constant = layer_norm(Tensor::from({1, 3}, {5, 5, 5}), gain, bias);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(constant.at(i)) < 1e-8);

  Tensor g2 = Tensor::from({2}, {1, 1});
  Tensor b2 = Tensor::from({2}, {0, 0});
  Tensor two = layer_norm(Tensor::from({1, 2}, {1, 3}), g2, b2);
  CHECK(two.at(0) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(two.at(1) == doctest::Approx(1.0).epsilon(1e-5));

  Rng rng(3);
  ParameterStore params;
  std::vector<double> xv(8), gv(4), bv(4);
  for (auto& v : xv) v = rng.uniform(-2, 2);
  for (auto& v : gv) v = rng.uniform(0.5, 1.5);
  for (auto& v : bv) v = rng.uniform(-0.5, 0.5);
  params.add("x", Tensor::from({2, 4}, xv, true));
  params.add("g", Tensor::from({4}, gv, true));
  params.add("b", Tensor::from({4}, bv, true));
  auto loss_value = [&]() {
    Tensor y = layer_norm(params.get("x"), params.get("g"), params.get("b"));
    double acc = 0.0;
    for (std::size_t i = 0; i < y.numel(); ++i) acc += (1.0 + 0.25 * i) * y.at(i);
    return acc;
  };
  {
    Tape tape;
    Tensor y = layer_norm(params.get("x"), params.get("g"), params.get("b"));
    std::vector<double> w(y.numel());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 + 0.25 * i;
    backward(sum_all(mul(y, Tensor::from(y.shape, w))));
  }
  auto report = oracles::finite_difference_check(params, loss_value);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("cross_entropy examples") {
  // confident correct prediction
  Tensor confident = Tensor::from({1, 3}, {100.0, 0.0, 0.0});
  CHECK(cross_entropy_mean(confident, {0}, -1).scalar_value() < 1e-12);

  // uniform over V=4
  Tensor uniform = Tensor::from({1, 4}, {0, 0, 0, 0});
  CHECK(cross_entropy_mean(uniform, {2}, -1).scalar_value() ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // 2x3 case vs direct scalar computation
  Tensor logits = Tensor::from({2, 3}, {0.3, -0.2, 1.1, 2.0, 0.5, -0.7});
  std::vector<int> targets = {2, 0};
  double expected = 0.0;
  for (int r = 0; r < 2; ++r) {
    double z = 0.0;
    for (int j = 0; j < 3; ++j) z += std::exp(logits.at2(r, j));
    expected += std::log(z) - logits.at2(r, targets[r]);
  }
  expected /= 2.0;
  CHECK(cross_entropy_mean(logits, targets, -1).scalar_value() ==
        doctest::Approx(expected).epsilon(1e-12));

  // ignored positions contribute nothing
  Tensor three = Tensor::from({3, 3}, {0.3, -0.2, 1.1, 9.0, 9.0, 9.0, 2.0, 0.5, -0.7});
  double with_ignore = cross_entropy_mean(three, {2, -1, 0}, -1).scalar_value();
  CHECK(with_ignore == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(cross_entropy_mean(three, {-1, -1, -1}, -1), NumericError);
  CHECK_THROWS_AS(cross_entropy_mean(three, {5, 0, 0}, -1), DataError);
}

TEST_CASE("cross_entropy per-row shift invariance") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> base(8);
    for (auto& v : base) v = rng.uniform(-5, 5);
    std::vector<double> shifted = base;
    const double c0 = rng.uniform(-40, 40), c1 = rng.uniform(-40, 40);
    for (int j = 0; j < 4; ++j) shifted[j] += c0;
    for (int j = 4; j < 8; ++j) shifted[j] += c1;
    const double a =
        cross_entropy_mean(Tensor::from({2, 4}, base), {1, 3}, -1).scalar_value();
    const double b =
        cross_entropy_mean(Tensor::from({2, 4}, shifted), {1, 3}, -1).scalar_value();
    CHECK(std::abs(a - b) < 1e-10);
  }
}

TEST_CASE("backward basics and accumulation") {
  ParameterStore params;
  params.add("w", Tensor::from({2, 2}, {1, 2, 3, 4}, true));
  {
    Tape tape;
    backward(sum_all(params.get("w")));
  }
  for (std::size_t i = 0; i < 4; ++i) CHECK((*params.get("w").grad)[i] == 1.0);

  // parameter reused in two branches: gradients add
  params.zero_grads();
  Tensor x = Tensor::from({2, 1}, {1.0, -2.0});
  {
    Tape tape;
    Tensor w = params.get("w");
    Tensor branch_a = matmul(w, x);
    Tensor branch_b = matmul(w, x);
    backward(add(sum_all(branch_a), sum_all(branch_b)));
  }
  // d/dw sum(Wx) = [x^T; x^T], twice
  CHECK((*params.get("w").grad)[0] == 2.0 * 1.0);
  CHECK((*params.get("w").grad)[1] == 2.0 * -2.0);
  CHECK((*params.get("w").grad)[2] == 2.0 * 1.0);
  CHECK((*params.get("w").grad)[3] == 2.0 * -2.0);

  {
    Tape tape;
    Tensor w = params.get("w");
    Tensor y = scale(w, 2.0);
    CHECK_THROWS_AS(backward(y), DimensionError);
  }
}

TEST_CASE("pooling, slicing and concat gradients") {
  Rng rng(5);
  ParameterStore params;
  std::vector<double> xv(12);
  for (auto& v : xv) v = rng.uniform(-2, 2);
  params.add("x", Tensor::from({4, 3}, xv, true));
  auto loss_value = [&]() {
    Tensor pooled = mean_max_pool_rows(params.get("x"), 1, 4);
    Tensor head = slice_cols(pooled, 1, 4);
    double acc = 0.0;
    for (std::size_t i = 0; i < head.numel(); ++i) acc += (i + 1.0) * head.at(i);
    return acc;
  };
  {
    Tape tape;
    Tensor pooled = mean_max_pool_rows(params.get("x"), 1, 4);
    Tensor head = slice_cols(pooled, 1, 4);
    std::vector<double> w(head.numel());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = i + 1.0;
    backward(sum_all(mul(head, Tensor::from(head.shape, w))));
  }
  auto report = oracles::finite_difference_check(params, loss_value);
  CHECK(report.max_rel_err < 1e-6);

  CHECK_THROWS_AS(mean_max_pool_rows(params.get("x"), 2, 2), DimensionError);
}

TEST_CASE("adamw examples") {
  // zero gradient, zero weight decay: parameters unchanged
  {
    ParameterStore params;
    params.add("p", Tensor::from({2}, {1.5, -0.5}, true));
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    AdamW opt(cfg);
    opt.step(params);
    CHECK(params.get("p").at(0) == 1.5);
    CHECK(params.get("p").at(1) == -0.5);
  }
  // single step with positive gradient decreases the parameter
  {
    ParameterStore params;
    params.add("p", Tensor::from({1}, {1.0}, true));
    (*params.get("p").grad)[0] = 1.0;
    AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 0.0;
    AdamW opt(cfg);
    opt.step(params);
    CHECK(params.get("p").at(0) < 1.0);
  }
  // NaN gradient aborts naming the parameter
  {
    ParameterStore params;
    params.add("weights.q", Tensor::from({1}, {1.0}, true));
    (*params.get("weights.q").grad)[0] = std::nan("");
    AdamW opt;
    bool threw = false;
    try {
      opt.step(params);
    } catch (const NumericError& e) {
      threw = true;
      CHECK(std::string(e.what()).find("weights.q") != std::string::npos);
    }
    CHECK(threw);
  }
}

TEST_CASE("adamw 3-step trajectory matches scalar oracle") {
  // quadratic f(p) = 0.5 * (p - 3)^2, gradient p - 3
  ParameterStore params;
  params.add("p", Tensor::from({1}, {1.0}, true));
  AdamWConfig cfg;
  cfg.lr = 0.05;
  cfg.weight_decay = 0.01;
  AdamW opt(cfg);

  oracles::ScalarAdamW ref{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay};
  double ref_p = 1.0;
  for (int step = 0; step < 3; ++step) {
    const double g = params.get("p").at(0) - 3.0;
    params.zero_grads();
    (*params.get("p").grad)[0] = g;
    opt.step(params);
    ref_p = ref.step(ref_p, ref_p - 3.0);
    CHECK(std::abs(params.get("p").at(0) - ref_p) < 1e-12);
  }
}

TEST_CASE("checkpoint round-trip is bit exact") {
  Rng rng(99);
  ParameterStore store;
  std::vector<double> a(6), b(3);
  for (auto& v : a) v = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-8, 8));
  for (auto& v : b) v = rng.normal(0, 1);
  b[1] = 0.1 + 0.2;  // deliberately non-representable sum
  store.add("layer.weight", Tensor::from({2, 3}, a, true));
  store.add("layer.bias", Tensor::from({3}, b, true));

  const std::string path = (std::filesystem::temp_directory_path() / "mf_ckpt_test.bin").string();
  save_checkpoint(store, path);
  ParameterStore loaded = load_checkpoint(path);
  CHECK(loaded.names() == store.names());
  for (const auto& name : store.names()) {
    const Tensor& x = store.get(name);
    const Tensor& y = loaded.get(name);
    CHECK(x.shape == y.shape);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      // bit-exact, not approximately equal
      CHECK(std::memcmp(&(*x.values)[i], &(*y.values)[i], sizeof(double)) == 0);
    }
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/nope.bin"), DataError);
}

TEST_CASE("grad clip and parameter store utilities") {
  ParameterStore params;
  params.add("a", Tensor::from({2}, {0.0, 0.0}, true));
  (*params.get("a").grad)[0] = 3.0;
  (*params.get("a").grad)[1] = 4.0;
  CHECK(params.grad_norm() == doctest::Approx(5.0));
  params.clip_grad_norm(1.0);
  CHECK(params.grad_norm() == doctest::Approx(1.0));
  CHECK(params.total_parameters() == 2);

  ParameterStore copy = params.clone();
  (*copy.get("a").values)[0] = 42.0;
  CHECK(params.get("a").at(0) == 0.0);
}
