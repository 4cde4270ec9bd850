#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "mistore/error.hpp"
#include "mistore/fracdiff.hpp"
#include "mistore/statespace.hpp"
#include "oracles.hpp"

using namespace mistore;

namespace {

ArfiModel pole_model(double rho, double f, double d, double sigma2 = 1.0) {
  const std::vector<Pole> poles{{rho, f}};
  const auto poly = poles_to_ar(poles);
  const auto b = poly.coefficients();
  return ArfiModel({b.begin(), b.end()}, d, sigma2);
}

std::vector<double> lag_vector(const ArfiModel& model, int q) {
  const auto poly = arfi_to_ar(model, q);
  const auto b = poly.coefficients();
  return {b.begin(), b.end()};
}

double rel_residual_dlyap(const Matrix& a, const Matrix& q, const Matrix& p) {
  return (p - a * p * a.transpose() - q).norm() / q.norm();
}

}  // namespace

TEST_CASE("ar_to_ss companion form") {
  const auto ss1 = ar_to_ss(ArPolynomial(std::vector<double>{0.5}), 1.0);
  CHECK(ss1.dim() == 1);
  CHECK(ss1.transition(0, 0) == 0.5);
  CHECK(ss1.observation(0) == 0.5);
  CHECK(ss1.gain(0) == 1.0);

  const std::vector<Pole> poles{{0.8, 0.1}};
  const auto poly = poles_to_ar(poles);
  const auto ss2 = ar_to_ss(poly, 1.0);
  REQUIRE(ss2.dim() == 2);
  CHECK(ss2.transition(0, 0) == doctest::Approx(1.2944272).epsilon(1e-7));
  CHECK(ss2.transition(0, 1) == doctest::Approx(-0.64));
  CHECK(ss2.transition(1, 0) == 1.0);
  CHECK(ss2.transition(1, 1) == 0.0);
  CHECK(ss2.observation(1) == doctest::Approx(-0.64));
  CHECK(ss2.gain(0) == 1.0);
  CHECK(ss2.gain(1) == 0.0);

  const auto ss0 = ar_to_ss(ArPolynomial(), 2.0);
  CHECK(ss0.dim() == 0);
  CHECK(process_variance(ss0) == 2.0);

  CHECK_THROWS_AS(ar_to_ss(ArPolynomial(std::vector<double>{1.2}), 1.0), Error);
}

TEST_CASE("solve_dlyap") {
  const Matrix q = Matrix::Identity(3, 3) * 2.0;
  CHECK((solve_dlyap(Matrix::Zero(3, 3), q) - q).norm() == 0.0);

  Matrix a(1, 1), q1(1, 1);
  a << 0.5;
  q1 << 1.0;
  CHECK(solve_dlyap(a, q1)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 5; ++trial) {
    Matrix r(10, 10);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = n01(rng);
    const Matrix stable = r * (0.95 / spectral_radius(r));
    SolverReport rep;
    const Matrix p = solve_dlyap(stable, Matrix::Identity(10, 10), {}, &rep);
    CHECK(rel_residual_dlyap(stable, Matrix::Identity(10, 10), p) < 1e-10);
    CHECK(rep.residual < 1e-10);
    CHECK((p - p.transpose()).norm() < 1e-10 * p.norm());
  }

  Matrix unstable(1, 1);
  unstable << 1.0;
  CHECK_THROWS_AS(solve_dlyap(unstable, q1), Error);
}

TEST_CASE("process variance and storage closed forms") {
  CHECK(process_variance(ar_to_ss(ArPolynomial(std::vector<double>{0.0}), 1.0)) == doctest::Approx(1.0));
  const auto ar1 = ar_to_ss(ArPolynomial(std::vector<double>{0.5}), 1.0);
  CHECK(std::abs(process_variance(ar1) - 4.0 / 3.0) < 1e-12);

  CHECK(storage(1.0, 1.0) == 0.0);
  CHECK(std::abs(storage(4.0 / 3.0, 1.0) - 0.1438410362258904) < 1e-12);
  for (double s2 : {0.1, 3.0, 250.0}) {
    for (double s : {0.0, 0.3, 2.0}) {
      CHECK(storage(2 * s2, 2 * s2 * std::exp(-2 * s)) == doctest::Approx(s).epsilon(1e-12));
    }
  }
  const auto dec = storage_decomposition(4.0 / 3.0, 1.0);
  CHECK(dec.entropy - dec.conditional_entropy == doctest::Approx(dec.storage).epsilon(1e-14));
  CHECK(dec.conditional_entropy == doctest::Approx(0.5 * std::log(2 * oracle::kPi * std::exp(1.0))));
  CHECK_THROWS_AS(storage(1.0, 0.0), Error);
}

TEST_CASE("design_fir_lowpass") {
  const auto id = design_fir_lowpass(48, 0.5);
  REQUIRE(id.taps().size() == 1);
  CHECK(id.taps()[0] == 1.0);

  for (int tau : {2, 3, 4, 6, 7, 10, 24}) {
    const double fc = 1.0 / (2 * tau);
    const auto f = design_fir_lowpass(48, fc);
    CHECK(f.taps().size() <= 49);
    CHECK(f.taps().front() != 0.0);
    CHECK(f.taps().back() != 0.0);
    CHECK(f.dc_gain() == doctest::Approx(1.0).epsilon(1e-14));
    auto ref = oracle::hamming_sinc(48, fc);
    std::size_t lead = 0;
    while (std::abs(ref[lead]) < 1e-15) ++lead;
    for (std::size_t k = 0; k < f.taps().size(); ++k) CHECK(std::abs(f.taps()[k] - ref[k + lead]) < 1e-15);
  }
  // tau = 2 puts exact sinc zeros at the ends
  CHECK(design_fir_lowpass(48, 0.25).taps().size() == 47);

  const auto f3 = design_fir_lowpass(2, 0.25);
  REQUIRE(f3.taps().size() == 3);
  CHECK(f3.taps()[0] == doctest::Approx(f3.taps()[2]));
  CHECK(f3.dc_gain() == doctest::Approx(1.0));

  CHECK_THROWS_AS(design_fir_lowpass(47, 0.25), Error);
  CHECK_THROWS_AS(design_fir_lowpass(48, 0.0), Error);
}

TEST_CASE("apply_fir_to_ss") {
  const auto base = ar_to_ss(poles_to_ar(std::vector<Pole>{{0.8, 0.1}}), 1.0);
  const auto same = apply_fir_to_ss(base, FirFilter::identity());
  CHECK(same.dim() == base.dim());
  CHECK(process_variance(same) == doctest::Approx(process_variance(base)).epsilon(1e-14));
  CHECK(same.sigma2_e == base.sigma2_e);

  const auto wn = ar_to_ss(ArPolynomial(std::vector<double>{0.0}), 1.0);
  const auto ma = apply_fir_to_ss(wn, FirFilter::from_taps({0.25, 0.5, 0.25}, 0.25));
  CHECK(process_variance(ma) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(ma.sigma2_e == doctest::Approx(0.0625));
}

TEST_CASE("downsample_ss: AR(1) at tau 2 by hand") {
  const auto ar1 = ar_to_ss(ArPolynomial(std::vector<double>{0.5}), 1.0);
  const auto g = downsample_ss(ar1, 2);
  CHECK(g.transition(0, 0) == doctest::Approx(0.25));
  CHECK(g.state_noise(0, 0) == doctest::Approx(1.25));
  CHECK(g.cross_cov(0) == doctest::Approx(0.5));
  CHECK(g.obs_noise == 1.0);
  CHECK(g.observation(0) == 0.5);

  const auto g1 = downsample_ss(ar1, 1);
  CHECK(g1.state_noise(0, 0) == 1.0);
  CHECK(g1.cross_cov(0) == 1.0);
}

TEST_CASE("downsample_ss matches the direct Sigma_W recursion") {
  const auto base = ar_to_ss(arfi_to_ar(pole_model(0.8, 0.1, 0.4), 20), 1.0);
  const auto filt = apply_fir_to_ss(base, design_fir_lowpass(48, 1.0 / 14));
  for (int tau : {1, 2, 7, 13}) {
    const auto g = downsample_ss(filt, tau);
    const Matrix kk = filt.sigma2_e * filt.gain * filt.gain.transpose();
    Matrix w = kk, bpow = Matrix::Identity(filt.dim(), filt.dim());
    for (int j = 2; j <= tau; ++j) w = filt.transition * w * filt.transition.transpose() + kk;
    for (int j = 0; j < tau; ++j) bpow = bpow * filt.transition;
    CHECK((g.state_noise - w).norm() <= 1e-12 * w.norm());
    CHECK((g.transition - bpow).norm() <= 1e-12 * (1 + bpow.norm()));
    Matrix bm1 = Matrix::Identity(filt.dim(), filt.dim());
    for (int j = 0; j < tau - 1; ++j) bm1 = bm1 * filt.transition;
    const Vector s = bm1 * filt.gain * filt.sigma2_e;
    CHECK((g.cross_cov - s).norm() <= 1e-12 * (1 + s.norm()));
  }
}

TEST_CASE("DARE: scalar closed form for AR(1) at tau 2") {
  const auto ar1 = ar_to_ss(ArPolynomial(std::vector<double>{0.5}), 1.0);
  const auto g = downsample_ss(ar1, 2);
  // P = b^2 P + W - (b P c + S)^2 / (c^2 P + V), cleared of the denominator
  const double b = 0.25, c = 0.5, w = 1.25, s = 0.5, v = 1.0;
  // (1-b^2) P (c^2 P + V) - W (c^2 P + V) + (b c P + S)^2 = 0
  const double A = (1 - b * b) * c * c + b * b * c * c;
  const double B = (1 - b * b) * v - w * c * c + 2 * b * c * s;
  const double C = -w * v + s * s;
  const double p_closed = (-B + std::sqrt(B * B - 4 * A * C)) / (2 * A);

  for (auto method : {DareMethod::Doubling, DareMethod::FixedPoint}) {
    SolverReport rep;
    DareOptions opt;
    opt.method = method;
    const Matrix p = solve_dare(g, opt, &rep);
    CHECK(p(0, 0) == doctest::Approx(p_closed).epsilon(1e-12));
    CHECK(rep.residual < 1e-12);
  }
  const auto inn = to_innovations_form(g);
  CHECK(inn.sigma2_e == doctest::Approx(c * c * p_closed + v).epsilon(1e-12));
  // x[2n] = 0.25 x[2n-2] + e[2n] + 0.5 e[2n-1] is AR(1) with innovation variance 1.25
  CHECK(inn.sigma2_e == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(process_variance(inn) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("tau 1 round trip recovers the innovations model") {
  const auto base = ar_to_ss(arfi_to_ar(pole_model(0.8, 0.1, 0.4), 50), 1.7);
  const auto inn = to_innovations_form(downsample_ss(base, 1));
  CHECK(std::abs(inn.sigma2_e - 1.7) < 1e-9);
  CHECK((inn.gain - base.gain).norm() < 1e-9);

  const auto wn = to_innovations_form(downsample_ss(ar_to_ss(ArPolynomial(std::vector<double>{0.0}), 1.0), 1));
  CHECK(std::abs(wn.sigma2_e - 1.0) < 1e-12);
}

TEST_CASE("DARE: doubling and fixed point agree; gain conventions share sigma2_e") {
  const auto base = ar_to_ss(arfi_to_ar(pole_model(0.8, 0.1, 0.4), 50), 1.0);
  const auto filt = apply_fir_to_ss(base, design_fir_lowpass(48, 1.0 / 10));
  const auto g = downsample_ss(filt, 5);
  SolverReport r1, r2;
  DareOptions fp;
  fp.method = DareMethod::FixedPoint;
  const Matrix p1 = solve_dare(g, {}, &r1);
  const Matrix p2 = solve_dare(g, fp, &r2);
  CHECK(r1.residual < 1e-9);
  CHECK(r2.residual < 1e-9);
  CHECK((p1 - p2).norm() <= 1e-7 * p1.norm());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p1 + p1.transpose()));
  CHECK(es.eigenvalues().minCoeff() >= -1e-10 * p1.norm());

  InnovationsOptions lit;
  lit.gain = GainConvention::LiteralSigmaV;
  const auto a = to_innovations_form(g);
  const auto b = to_innovations_form(g, lit);
  CHECK(a.sigma2_e == doctest::Approx(b.sigma2_e).epsilon(1e-12));
}

TEST_CASE("one-step prediction with the rescaled innovations model") {
  const auto model = pole_model(0.8, 0.1, 0.0);
  const auto b = lag_vector(model, 0);
  const int tau = 5;
  const auto fir = design_fir_lowpass(48, 1.0 / (2 * tau));
  const auto x = oracle::simulate_ar(b, 1 << 20, 21);
  const std::vector<double> taps(fir.taps().begin(), fir.taps().end());
  const auto y = oracle::every(oracle::fir_valid(x, taps), tau);

  const auto base = ar_to_ss(ArPolynomial(b), 1.0);
  const auto inn = to_innovations_form(downsample_ss(apply_fir_to_ss(base, fir), tau));
  Vector z = Vector::Zero(inn.dim());
  double sse = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < y.size(); ++n) {
    const double e = y[n] - inn.observation.dot(z);
    if (n >= 1000) {
      sse += e * e;
      ++count;
    }
    z = inn.transition * z + inn.gain * e;
  }
  CHECK(sse / count == doctest::Approx(inn.sigma2_e).epsilon(0.03));
  CHECK(oracle::variance(y) == doctest::Approx(process_variance(inn)).epsilon(0.02));
}

TEST_CASE("Monte Carlo variances through the rescaling chain") {
  const auto b = lag_vector(pole_model(0.8, 0.1, 0.0), 0);
  const auto base = ar_to_ss(ArPolynomial(b), 1.0);
  const auto x = oracle::simulate_ar(b, 1 << 20, 4);
  CHECK(oracle::variance(x) == doctest::Approx(process_variance(base)).epsilon(0.01));

  const auto fir = design_fir_lowpass(48, 0.25);
  const std::vector<double> taps(fir.taps().begin(), fir.taps().end());
  const auto y = oracle::fir_valid(x, taps);
  CHECK(oracle::variance(y) == doctest::Approx(process_variance(apply_fir_to_ss(base, fir))).epsilon(0.01));

  const auto fir10 = design_fir_lowpass(48, 0.05);
  const std::vector<double> taps10(fir10.taps().begin(), fir10.taps().end());
  const auto y10 = oracle::every(oracle::fir_valid(x, taps10), 10);
  const auto inn = to_innovations_form(downsample_ss(apply_fir_to_ss(base, fir10), 10));
  CHECK(oracle::variance(y10) == doctest::Approx(process_variance(inn)).epsilon(0.02));
}

TEST_CASE("multiscale storage matches the spectral oracle") {
  struct Case {
    double rho, f, d;
    int q;
  };
  for (const auto& c : {Case{0.8, 0.1, 0.0, 50}, Case{0.8, 0.1, 0.4, 50}, Case{0.5, 0.3, 0.05, 20},
                        Case{0.9, 0.1, 0.7, 50}}) {
    const auto model = pole_model(c.rho, c.f, c.d);
    const auto b = lag_vector(model, c.q);
    const std::vector<int> taus{1, 2, 3, 5, 10};
    const auto prof = multiscale_storage(model, c.q, 48, taus);
    for (std::size_t i = 0; i < taus.size(); ++i) {
      const auto h = taus[i] == 1 ? std::vector<double>{1.0} : oracle::hamming_sinc(48, 0.5 / taus[i]);
      const double ref = oracle::spectral_storage(b, h, taus[i]);
      CHECK(prof.entries[i].storage == doctest::Approx(ref).epsilon(1e-7));
    }
  }
}

TEST_CASE("white noise: exact zero at tau 1 and beyond the filter order") {
  const auto prof = multiscale_storage(ArfiModel::white_noise(), 50, 48, std::vector<int>{1, 49, 50, 60});
  for (const auto& e : prof.entries) CHECK(std::abs(e.storage) < 1e-12);
}

TEST_CASE("profile invariants") {
  const auto taus = tau_range(30);
  for (double d : {0.0, 0.4, 0.7}) {
    const auto model = pole_model(0.8, 0.1, d);
    const auto prof = multiscale_storage(model, 50, 48, taus);
    CHECK(prof.max_residual() < 1e-9);
    for (const auto& e : prof.entries) {
      CHECK(e.storage >= -1e-12);
      CHECK(e.sigma2_x >= e.sigma2_e);
      CHECK(std::abs(e.storage - 0.5 * std::log(e.sigma2_x / e.sigma2_e)) < 1e-12);
      CHECK(e.f_tau == 0.5 / e.tau);
    }

    for (double c : {1e-3, 0.37, 25.0}) {
      const auto scaled = multiscale_storage(model.with_sigma2(c), 50, 48, taus);
      for (std::size_t i = 0; i < taus.size(); ++i) {
        CHECK(std::abs(scaled.entries[i].storage - prof.entries[i].storage) < 1e-10);
      }
    }

    // tau 1 equals the plain AR computation
    const auto poly = arfi_to_ar(model, 50).trimmed();
    const double s1 = storage(process_variance(ar_to_ss(poly, 1.0)), 1.0);
    CHECK(prof.entries[0].storage == s1);
  }
}

TEST_CASE("filter gain does not change storage") {
  const auto model = pole_model(0.8, 0.1, 0.4);
  const auto base = ar_to_ss(arfi_to_ar(model, 50).trimmed(), 1.0);
  for (int tau : {2, 5, 9, 20}) {
    const auto fir = design_fir_lowpass(48, 0.5 / tau);
    const auto ref = storage_at_scale(base, fir, tau);
    for (double c : {-3.0, 0.01, 7.5}) {
      std::vector<double> taps(fir.taps().begin(), fir.taps().end());
      for (auto& t : taps) t *= c;
      const auto e = storage_at_scale(base, FirFilter::from_taps(taps, fir.cutoff()), tau);
      CHECK(std::abs(e.storage - ref.storage) < 1e-10);
    }
  }
}

TEST_CASE("d = 0 equals q = 0") {
  const auto model = pole_model(0.8, 0.1, 0.0);
  const auto taus = tau_range(50);
  const auto a = multiscale_storage(model, 50, 48, taus);
  const auto b = multiscale_storage(model, 0, 48, taus);
  StorageOptions keep;
  keep.trim_zero_lags = false;
  const auto c = multiscale_storage(model, 50, 48, std::vector<int>{1, 2, 7, 19}, keep);
  for (std::size_t i = 0; i < taus.size(); ++i) CHECK(std::abs(a.entries[i].storage - b.entries[i].storage) < 1e-9);
  const std::vector<int> sub{1, 2, 7, 19};
  for (std::size_t i = 0; i < sub.size(); ++i) {
    CHECK(std::abs(c.entries[i].storage - a.entries[static_cast<std::size_t>(sub[i] - 1)].storage) < 1e-9);
  }
}

TEST_CASE("d = 0 profile decays toward zero") {
  const auto prof = multiscale_storage(pole_model(0.8, 0.1, 0.0), 50, 48, tau_range(50));
  for (std::size_t i = 1; i < prof.entries.size(); ++i) {
    CHECK(prof.entries[i].storage <= prof.entries[i - 1].storage + 0.01);
  }
  CHECK(prof.entries.back().storage < 1e-3);
  CHECK(prof.entries.front().storage > 0.7);
}

TEST_CASE("per-scale evaluation is order independent") {
  const auto model = pole_model(0.8, 0.1, 0.7);
  const std::vector<int> taus{13, 2, 40, 1, 7};
  const auto all = multiscale_storage(model, 50, 48, taus);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const auto one = multiscale_storage(model, 50, 48, std::vector<int>{taus[i]});
    CHECK(one.entries[0].storage == all.entries[i].storage);
    CHECK(all.entries[i].tau == taus[i]);
  }
}

TEST_CASE("multiscale_storage rejects bad scales") {
  CHECK_THROWS_AS(multiscale_storage(ArfiModel::white_noise(), 50, 48, std::vector<int>{0}), Error);
  CHECK_THROWS_AS(multiscale_storage(ArfiModel::white_noise(), 50, 48, std::vector<int>{}), Error);
  CHECK_THROWS_AS(multiscale_storage(ArfiModel::white_noise(), 50, 47, std::vector<int>{2}), Error);
}
