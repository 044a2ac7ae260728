#include <doctest.h>

#include <cmath>
#include <limits>

#include "mgn/nn.hpp"

using namespace mgn;

namespace {

// Plain-loop reference for a ReLU network; weights read from the store.
std::vector<double> reference_mlp(const ParamStore& store, const Mlp& mlp, std::vector<double> x) {
  const auto& w = mlp.weight_ids();
  const auto& b = mlp.bias_ids();
  for (std::size_t l = 0; l < w.size(); ++l) {
    const Matrix& W = store.value(w[l]);
    std::vector<double> y(W.rows(), 0.0);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      double acc = store.value(b[l])(r, 0);
      for (Eigen::Index c = 0; c < W.cols(); ++c) acc += W(r, c) * x[c];
      y[r] = (l + 1 < w.size() && acc < 0) ? 0.0 : acc;
    }
    x = y;
  }
  return x;
}

double scalar_loss(const Matrix& y, const Matrix& weights) { return y.cwiseProduct(weights).sum(); }

}  // namespace

TEST_CASE("zero network outputs zero") {
  ParamStore store;
  Mlp mlp(store, "m", 5, 7, 2, 3, false);
  Matrix x = Matrix::Random(5, 4);
  CHECK(mlp.forward(store, x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("1x1 identity network") {
  ParamStore store;
  Mlp mlp(store, "id", 1, 1, 0, 1, false);
  store[mlp.weight_ids()[0]].value(0, 0) = 1.0;
  Matrix x(1, 3);
  x << -2.0, 0.0, 3.5;
  CHECK(mlp.forward(store, x) == x);
}

TEST_CASE("dense forward matches a plain-loop oracle") {
  ParamStore store;
  Mlp mlp(store, "m", 3, 8, 2, 2, false);
  Rng rng(17);
  mlp.init(store, rng);
  Matrix x = Matrix::Random(3, 10);
  const Matrix y = mlp.forward(store, x);
  for (int i = 0; i < 10; ++i) {
    const auto ref = reference_mlp(store, mlp, {x(0, i), x(1, i), x(2, i)});
    CHECK(std::abs(y(0, i) - ref[0]) <= 1e-12);
    CHECK(std::abs(y(1, i) - ref[1]) <= 1e-12);
  }
  CHECK_THROWS_AS(mlp.forward(store, Matrix::Zero(4, 1)), NnError);
}

TEST_CASE("layer norm") {
  Matrix c = Matrix::Constant(4, 1, 3.7);
  CHECK(layer_norm(c, 1, 0).cwiseAbs().maxCoeff() == 0.0);

  Matrix x(2, 1);
  x << 1, -1;
  const Matrix y = layer_norm(x, 1, 0, 1e-5);
  CHECK(y(0, 0) == doctest::Approx(1.0 / std::sqrt(1.0 + 1e-5)).epsilon(1e-14));
  CHECK(y(0, 0) == doctest::Approx(0.999995).epsilon(1e-6));
  CHECK(y(1, 0) == doctest::Approx(-0.999995).epsilon(1e-6));

  Matrix r = Matrix::Random(6, 5);
  CHECK((layer_norm(r, 0.0, 0.7).array() == 0.7).all());

  const Matrix z = layer_norm(r, 1.0, 0.0, 0.0);
  for (int i = 0; i < 5; ++i) {
    const double mean = z.col(i).mean();
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::abs(std::sqrt(z.col(i).squaredNorm() / 6.0 - mean * mean) - 1.0) < 1e-12);
  }
}

TEST_CASE("gradient of a quadratic through an identity layer") {
  ParamStore store;
  Mlp mlp(store, "q", 2, 2, 0, 2, false);
  store[mlp.weight_ids()[0]].value = Matrix::Identity(2, 2);
  Mlp::Tape tape;
  Matrix x(2, 1);
  x << 1, 2;
  const Matrix y = mlp.forward(store, x, &tape);
  // loss = |Wx|^2 / 2, so dloss/dy = y.
  const Matrix gx = mlp.backward(store, tape, y);
  CHECK(gx(0, 0) == 1.0);
  CHECK(gx(1, 0) == 2.0);
}

TEST_CASE("backward before forward is rejected") {
  ParamStore store;
  Mlp mlp(store, "m", 2, 2, 1, 2, false);
  Mlp::Tape tape;
  CHECK_THROWS_AS(mlp.backward(store, tape, Matrix::Zero(2, 1)), NnError);
}

TEST_CASE("ReLU uses a zero subgradient at the kink") {
  ParamStore store;
  Mlp mlp(store, "r", 1, 1, 1, 1, false);
  // Hidden pre-activation is exactly 0 for x = 1.
  store[mlp.weight_ids()[0]].value(0, 0) = 1.0;
  store[mlp.bias_ids()[0]].value(0, 0) = -1.0;
  store[mlp.weight_ids()[1]].value(0, 0) = 1.0;
  Mlp::Tape tape;
  Matrix x = Matrix::Ones(1, 1);
  mlp.forward(store, x, &tape);
  const Matrix gx = mlp.backward(store, tape, Matrix::Ones(1, 1));
  CHECK(gx(0, 0) == 0.0);
  CHECK(store.grad(mlp.weight_ids()[0])(0, 0) == 0.0);
}

TEST_CASE("MLP gradients match central differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ParamStore store;
    Mlp mlp(store, "m", 4, 6, 2, 3, true);
    Rng rng(seed);
    mlp.init(store, rng);
    store[mlp.alpha_id()].value(0, 0) = 1.3;
    store[mlp.beta_id()].value(0, 0) = -0.2;
    const Matrix x = Matrix::Random(4, 5);
    const Matrix w = Matrix::Random(3, 5);
    Mlp::Tape tape;
    mlp.forward(store, x, &tape);
    const Matrix gx = mlp.backward(store, tape, w);
    const double h = 1e-6;
    for (std::size_t p = 0; p < store.size(); ++p) {
      Matrix& value = store[static_cast<int>(p)].value;
      for (Eigen::Index k = 0; k < value.size(); ++k) {
        const double old = value.data()[k];
        value.data()[k] = old + h;
        const double up = scalar_loss(mlp.forward(store, x), w);
        value.data()[k] = old - h;
        const double down = scalar_loss(mlp.forward(store, x), w);
        value.data()[k] = old;
        const double fd = (up - down) / (2 * h);
        const double an = store[static_cast<int>(p)].grad.data()[k];
        CHECK(std::abs(fd - an) <= 1e-4 * std::max({std::abs(fd), std::abs(an), 1e-6}));
      }
    }
    Matrix xp = x;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      xp.data()[k] = x.data()[k] + h;
      const double up = scalar_loss(mlp.forward(store, xp), w);
      xp.data()[k] = x.data()[k] - h;
      const double down = scalar_loss(mlp.forward(store, xp), w);
      xp.data()[k] = x.data()[k];
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(fd - gx.data()[k]) <= 1e-4 * std::max({std::abs(fd), std::abs(gx.data()[k]), 1e-6}));
    }
  }
}

TEST_CASE("first Adam step has magnitude lr") {
  ParamStore store;
  const int id = store.add("p", 3, 1);
  store[id].value << 1.0, 2.0, 3.0;
  store.grad(id) << 0.5, -4.0, 1e-3;
  store.adam_step(0.1);
  CHECK(store[id].value(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
  CHECK(store[id].value(1, 0) == doctest::Approx(2.0 + 0.1 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
  CHECK(store[id].value(2, 0) == doctest::Approx(3.0 - 0.1 * 1e-3 / (1e-3 + 1e-8)).epsilon(1e-14));
  CHECK(store.grad(id).cwiseAbs().maxCoeff() == 0.0);
  CHECK(store.step_count() == 1);
}

TEST_CASE("zero gradients leave parameters unchanged") {
  ParamStore store;
  const int id = store.add("p", 2, 2);
  store[id].value << 1, 2, 3, 4;
  const Matrix before = store[id].value;
  for (int i = 0; i < 5; ++i) store.adam_step(1e-2);
  CHECK(store[id].value == before);
}

TEST_CASE("Adam updates parameters independently") {
  ParamStore a, b;
  const int a1 = a.add("x", 1, 1), a2 = a.add("y", 1, 1);
  const int b2 = b.add("y", 1, 1), b1 = b.add("x", 1, 1);
  for (int step = 0; step < 10; ++step) {
    const double gx = std::sin(step + 1.0), gy = std::cos(3.0 * step);
    a.grad(a1)(0, 0) = gx;
    a.grad(a2)(0, 0) = gy;
    b.grad(b1)(0, 0) = gx;
    b.grad(b2)(0, 0) = gy;
    a.adam_step(1e-3);
    b.adam_step(1e-3);
  }
  CHECK(a[a1].value(0, 0) == b[b1].value(0, 0));
  CHECK(a[a2].value(0, 0) == b[b2].value(0, 0));
}

TEST_CASE("non-finite gradients abort the step") {
  ParamStore store;
  const int id = store.add("p", 1, 1);
  store.grad(id)(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(store.adam_step(1e-3), NnError);
  CHECK(store[id].value(0, 0) == 0.0);
}

TEST_CASE("dense initialization") {
  ParamStore store;
  Mlp mlp(store, "m", 4, 300, 1, 300, true);
  Rng rng(5);
  mlp.init(store, rng);
  const Matrix& w0 = store.value(mlp.weight_ids()[0]);
  CHECK(w0.cwiseAbs().maxCoeff() <= 0.5);
  CHECK(store.value(mlp.bias_ids()[0]).cwiseAbs().maxCoeff() <= 0.5);
  CHECK(store.value(mlp.alpha_id())(0, 0) == 1.0);
  CHECK(store.value(mlp.beta_id())(0, 0) == 0.0);

  // Second layer: in = 300, 90000 entries uniform on [-b, b].
  const Matrix& w1 = store.value(mlp.weight_ids()[1]);
  const double bound = 1.0 / std::sqrt(300.0);
  CHECK(w1.cwiseAbs().maxCoeff() <= bound);
  const double n = static_cast<double>(w1.size());
  CHECK(std::abs(w1.mean()) <= 3 * bound / std::sqrt(3.0 * n));

  ParamStore other;
  Mlp same(other, "m", 4, 300, 1, 300, true);
  Rng rng2(5);
  same.init(other, rng2);
  for (std::size_t p = 0; p < store.size(); ++p) {
    CHECK(store[static_cast<int>(p)].value == other[static_cast<int>(p)].value);
  }
}

TEST_CASE("forward is repeatable") {
  ParamStore store;
  Mlp mlp(store, "m", 6, 16, 2, 4, true);
  Rng rng(8);
  mlp.init(store, rng);
  const Matrix x = Matrix::Random(6, 20);
  CHECK(mlp.forward(store, x) == mlp.forward(store, x));
}
