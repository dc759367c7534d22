#include <doctest.h>

#include <cmath>

#include "drtune/gradcheck.hpp"
#include "drtune/rng.hpp"
#include "drtune/sampler.hpp"

using namespace drtune;

TEST_CASE("linear schedule arithmetic") {
  NoiseSchedule s = build_linear_schedule(2, 0.1, 0.2);
  CHECK(s.beta[0] == doctest::Approx(0.1));
  CHECK(s.beta[1] == doctest::Approx(0.2));
  CHECK(s.alpha[0] == doctest::Approx(0.9));
  CHECK(s.alpha[1] == doctest::Approx(0.8));
  CHECK(s.alpha_bar[0] == doctest::Approx(0.9));
  CHECK(s.alpha_bar[1] == doctest::Approx(0.72));

  NoiseSchedule c = build_linear_schedule(5, 0.05, 0.05);
  for (int i = 0; i < 5; ++i) CHECK(c.beta[i] == doctest::Approx(0.05));

  CHECK_THROWS_AS(build_linear_schedule(1, 0.1, 0.2), ValueError);
  CHECK_THROWS_AS(build_linear_schedule(10, 0.2, 0.1), ValueError);
  CHECK_THROWS_AS(build_linear_schedule(10, 0.0, 0.1), ValueError);
}

TEST_CASE("alpha_bar is strictly decreasing") {
  NoiseSchedule s = build_linear_schedule(50, 1e-4, 0.2);
  for (int i = 1; i < 50; ++i) CHECK(s.alpha_bar[i] < s.alpha_bar[i - 1]);
}

TEST_CASE("forward_diffuse") {
  NoiseSchedule s = build_linear_schedule(2, 0.1, 0.2);
  Tensor x0 = constant({1}, (Array(1) << 1.0).finished());
  Tensor zero = constant({1}, Array::Zero(1));
  CHECK(forward_diffuse(x0, 0, zero, s).data[0] == 1.0);
  CHECK(forward_diffuse(x0, 2, zero, s).data[0] ==
        doctest::Approx(std::sqrt(0.72)));
  CHECK_THROWS_AS(forward_diffuse(x0, 3, zero, s), ValueError);
}

TEST_CASE("forward_diffuse variance matches 1 - alpha_bar (Monte Carlo)") {
  NoiseSchedule s = build_linear_schedule(10, 0.02, 0.3);
  const int t = 6;
  Rng rng(1234);
  const int n = 10000;
  Tensor x0 = constant({1}, (Array(1) << 0.4).finished());
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    Tensor eps = constant({1}, rng.normal_array(1));
    const double v = forward_diffuse(x0, t, eps, s).data[0];
    sum += v;
    sumsq += v * v;
  }
  const double mu = sum / n;
  const double var = sumsq / n - mu * mu;
  const double expected = 1.0 - s.alpha_bar_at(t);
  CHECK(var == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("ddpm coefficients") {
  NoiseSchedule s = build_linear_schedule(2, 0.1, 0.2);
  SamplerCoeffs co = ddpm_coeffs(s);
  CHECK(co.c_at(1) == 0.0);
  CHECK(co.a_at(2) == doctest::Approx(1.0 / std::sqrt(0.8)));
}

TEST_CASE("ddpm one step equals the ancestral posterior step") {
  // Independent oracle: posterior mean
  //   mu = sqrt(abar_prev) beta / (1-abar) x0hat
  //      + sqrt(alpha) (1-abar_prev) / (1-abar) x_t
  // with x0hat = (x_t - sqrt(1-abar) eps) / sqrt(abar), plus
  // sqrt(beta-tilde) noise.
  NoiseSchedule s = build_linear_schedule(6, 0.05, 0.4);
  SamplerCoeffs co = ddpm_coeffs(s);
  Rng rng(77);
  for (int t = 1; t <= 6; ++t) {
    const double xt = rng.normal(), eps = rng.normal(), z = rng.normal();
    const double alpha = s.alpha_at(t), abar = s.alpha_bar_at(t);
    const double abar_prev = s.alpha_bar_prev(t), beta = s.beta_at(t);
    const double x0hat = (xt - std::sqrt(1 - abar) * eps) / std::sqrt(abar);
    double mu = std::sqrt(abar_prev) * beta / (1 - abar) * x0hat +
                std::sqrt(alpha) * (1 - abar_prev) / (1 - abar) * xt;
    const double beta_tilde = (1 - abar_prev) / (1 - abar) * beta;
    const double oracle = mu + std::sqrt(beta_tilde) * z;

    Tensor xt_t = constant({1}, (Array(1) << xt).finished());
    Tensor eps_t = constant({1}, (Array(1) << eps).finished());
    Tensor z_t = constant({1}, (Array(1) << z).finished());
    const double got = sample_step(xt_t, eps_t, t, co, z_t).data[0];
    CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("ddim coefficients") {
  NoiseSchedule s = build_linear_schedule(8, 0.02, 0.3);
  SamplerCoeffs det = ddim_coeffs(s, 0.0);
  CHECK(det.deterministic());
  CHECK_THROWS_AS(ddim_coeffs(s, 1.5), ValueError);

  // Degenerate no-op step: abar_prev == abar gives a_t = 1.
  NoiseSchedule flat = build_linear_schedule(3, 1e-12, 1e-12);
  SamplerCoeffs fc = ddim_coeffs(flat, 0.0);
  CHECK(fc.a_at(2) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ddim eta=1 step distribution matches ddpm on a 2-step schedule") {
  NoiseSchedule s = build_linear_schedule(2, 0.1, 0.2);
  SamplerCoeffs ddpm = ddpm_coeffs(s);
  SamplerCoeffs ddim1 = ddim_coeffs(s, 1.0);
  Rng rng(3);
  const int t = 2;
  const double xt = 0.7, eps = -0.3;
  Tensor xt_t = constant({1}, (Array(1) << xt).finished());
  Tensor eps_t = constant({1}, (Array(1) << eps).finished());
  const int n = 20000;
  double m1 = 0, v1 = 0, m2 = 0, v2 = 0;
  for (int i = 0; i < n; ++i) {
    Tensor z = constant({1}, rng.normal_array(1));
    const double a = sample_step(xt_t, eps_t, t, ddpm, z).data[0];
    const double b = sample_step(xt_t, eps_t, t, ddim1, z).data[0];
    m1 += a / n;
    m2 += b / n;
    v1 += a * a / n;
    v2 += b * b / n;
  }
  v1 -= m1 * m1;
  v2 -= m2 * m2;
  CHECK(m1 == doctest::Approx(m2).epsilon(0.02));
  CHECK(v1 == doctest::Approx(v2).epsilon(0.02));
}

TEST_CASE("sample_step basics") {
  SamplerCoeffs co;
  co.a = (Eigen::ArrayXd(1) << 2.0).finished();
  co.b = (Eigen::ArrayXd(1) << 1.0).finished();
  co.c = (Eigen::ArrayXd(1) << 0.0).finished();
  Tensor x = constant({1}, (Array(1) << 1.0).finished());
  Tensor e = constant({1}, (Array(1) << 3.0).finished());
  CHECK(sample_step(x, e, 1, co, Tensor{}).data[0] == 5.0);

  // gradient wrt x_t equals a_t when eps_hat is detached
  Tape tape;
  Tensor xl = tape.leaf({1}, (Array(1) << 1.0).finished());
  Tensor out = sample_step(xl, stop_gradient(e), 1, co, Tensor{});
  tape.backward(sum(out));
  CHECK(tape.grad(xl)[0] == doctest::Approx(2.0));
}

TEST_CASE("predict_x0 inverts forward_diffuse") {
  NoiseSchedule s = build_linear_schedule(5, 0.05, 0.3);
  Rng rng(11);
  Tensor x0 = constant({4}, rng.normal_array(4));
  Tensor eps = constant({4}, rng.normal_array(4));
  for (int t = 1; t <= 5; ++t) {
    Tensor xt = forward_diffuse(x0, t, eps, s);
    Tensor rec = predict_x0(xt, eps, t, s);
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(rec.data[i] - x0.data[i]) <= 1e-12);
  }
  // hand value: abar = 0.72
  NoiseSchedule s2 = build_linear_schedule(2, 0.1, 0.2);
  Tensor xt = constant({1}, (Array(1) << std::sqrt(0.72)).finished());
  Tensor z = constant({1}, Array::Zero(1));
  CHECK(predict_x0(xt, z, 2, s2).data[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(predict_x0(xt, z, 3, s2), ValueError);
}

TEST_CASE("predict_x0 gradient flows through both inputs") {
  NoiseSchedule s = build_linear_schedule(4, 0.05, 0.3);
  Rng rng(21);
  Array epsv = rng.normal_array(3);
  TensorFn fn = [epsv, &s](Tape&, const Tensor& xt) {
    Tensor eps = constant({3}, epsv);
    return mean(square(predict_x0(xt, eps, 3, s)));
  };
  CHECK(finite_diff_check(fn, constant({3}, rng.normal_array(3))) < 1e-5);
}

TEST_CASE("detached chain gradient law: product of a_s coefficients") {
  // x_{t-1} = a_t x_t + b_t sg(eps); dL/dx_t = prod_{s<=t} a_s * dL/dx_0.
  Rng rng(55);
  const int T = 50;
  Array a = rng.uniform_array(T, 0.9, 1.2);
  Tape tape;
  Tensor x = tape.leaf({1}, (Array(1) << 0.37).finished());
  Tensor cur = x;
  for (int t = T; t >= 1; --t) {
    Tensor eps = stop_gradient(mul(cur, 0.7));  // denoiser output, detached
    cur = add(mul(cur, a[t - 1]), mul(eps, -0.1));
  }
  tape.backward(sum(cur));
  double prod = 1.0;
  for (int s = 1; s <= T; ++s) prod *= a[s - 1];
  const double got = tape.grad(x)[0];
  CHECK(std::abs(got - prod) / std::abs(prod) < 1e-10);
}
