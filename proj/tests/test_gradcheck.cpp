#include <doctest.h>

#include "drtune/gradcheck.hpp"
#include "drtune/rng.hpp"

using namespace drtune;

TEST_CASE("finite_diff_check on sum of squares") {
  Rng rng(7);
  Tensor x = constant({6}, rng.normal_array(6));
  const double err = finite_diff_check(
      [](Tape&, const Tensor& t) { return sum(square(t)); }, x);
  CHECK(err < 1e-6);
}

TEST_CASE("finite_diff_check with detached factor") {
  // d/dx of sum(sg(x) * x) with the sg branch frozen equals sg(x).
  Rng rng(8);
  Tensor x = constant({5}, rng.normal_array(5));
  const double err = finite_diff_check(
      [xc = x.data](Tape&, const Tensor& t) {
        Tensor frozen = constant(t.shape, xc);
        return sum(mul(frozen, t));
      },
      x);
  CHECK(err < 1e-6);
  // ...and the live graph with stop_gradient reports the same gradient.
  Tape tape;
  Tensor leaf = tape.leaf(x.shape, x.data);
  tape.backward(sum(mul(stop_gradient(leaf), leaf)));
  Array g = tape.grad(leaf);
  for (int i = 0; i < 5; ++i) CHECK(g[i] == doctest::Approx(x.data[i]));
}

TEST_CASE("every primitive passes gradcheck on random inputs") {
  Rng rng(42);
  const std::vector<std::pair<const char*, TensorFn>> fns = {
      {"add", [](Tape&, const Tensor& t) { return sum(add(t, 0.5)); }},
      {"mul_scalar", [](Tape&, const Tensor& t) { return sum(mul(t, -1.3)); }},
      {"mul", [](Tape&, const Tensor& t) { return sum(mul(t, t)); }},
      {"square", [](Tape&, const Tensor& t) { return mean(square(t)); }},
      {"silu", [](Tape&, const Tensor& t) { return sum(silu(t)); }},
      {"exp", [](Tape&, const Tensor& t) { return sum(exp(t)); }},
      {"stddev", [](Tape&, const Tensor& t) { return stddev(t); }},
      {"mean", [](Tape&, const Tensor& t) { return mean(square(t)); }},
  };
  for (const auto& [name, fn] : fns) {
    for (int rep = 0; rep < 8; ++rep) {
      Tensor x = constant({6}, rng.normal_array(6));
      INFO(name);
      CHECK(finite_diff_check(fn, x) < 1e-4);
    }
  }
}

TEST_CASE("random op compositions up to depth 6 pass gradcheck") {
  Rng rng(99);
  for (int rep = 0; rep < 30; ++rep) {
    const int depth = 1 + rep % 5;
    auto salt = rng.raw();
    TensorFn fn = [depth, salt](Tape&, const Tensor& t) {
      Rng local(salt);
      Tensor h = t;
      for (int d = 0; d < depth; ++d) {
        switch (local.randint(0, 4)) {
          case 0: h = silu(h); break;
          case 1: h = mul(h, 0.5 + local.uniform()); break;
          case 2: h = add(h, local.normal()); break;
          case 3: h = mul(h, h); break;
          case 4: h = neg(h); break;
        }
      }
      return mean(square(h));
    };
    Tensor x = constant({8}, rng.uniform_array(8, -1.0, 1.0));
    CHECK(finite_diff_check(fn, x) < 1e-4);
  }
}

TEST_CASE("matmul chain matches finite differences") {
  Rng rng(5);
  Array bdata = rng.normal_array(6);
  TensorFn fn = [bdata](Tape&, const Tensor& t) {
    Tensor b = constant({3, 2}, bdata);
    return sum(silu(matmul(t, b)));
  };
  Tensor a = constant({2, 3}, rng.normal_array(6));
  CHECK(finite_diff_check(fn, a) < 1e-5);
}
