#include "attnspec/bulk.hpp"
#include "attnspec/errors.hpp"
#include "attnspec/model.hpp"
#include "attnspec/spike.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace attnspec;

namespace {

struct Draw {
  double delta, gamma, kappa, beta;
};

std::vector<Draw> supercritical_draws(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dg(0.1, 2.0), k(0.1, 1.0), f(1.2, 5.0);
  std::vector<Draw> out;
  while (static_cast<int>(out.size()) < n) {
    Draw d{dg(rng), dg(rng), k(rng), 0.0};
    const double floor = d.kappa * (1 + std::sqrt(d.delta)) * (1 + std::sqrt(d.delta));
    d.beta = std::max(edge_stieltjes(BulkParams{d.delta, d.gamma, d.kappa}).beta_crit, floor) * f(rng);
    out.push_back(d);
  }
  return out;
}

}  // namespace

TEST_SUITE("spike") {
  TEST_CASE("classical limit at vanishing delta") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> g(0.1, 3.0), f(1.1, 6.0), k(0.2, 2.0);
    for (int i = 0; i < 50; ++i) {
      const double gamma = g(rng), kappa = k(rng);
      const double ell = (1 + std::sqrt(gamma)) * f(rng);
      const auto ref = oracle::paul(ell, gamma);
      const double beta = kappa * ell;
      const auto lam = sample_spike(beta, 1e-10, gamma, kappa);
      REQUIRE(lam.has_value());
      CHECK(*lam == doctest::Approx(kappa * ref.lambda).epsilon(1e-7));
      const Overlap ov = sample_overlap(beta, kappa * ref.lambda, 1e-10, gamma, kappa);
      CHECK(std::abs(ov.value - ref.overlap) <= 1e-8);
    }
  }

  TEST_CASE("overlap equals the log-derivative of the outlier") {
    for (const Draw& d : supercritical_draws(50, 2)) {
      const double h = 1e-5 * d.beta;
      const double lp = *sample_spike(d.beta + h, d.delta, d.gamma, d.kappa);
      const double lm = *sample_spike(d.beta - h, d.delta, d.gamma, d.kappa);
      const double lam = *sample_spike(d.beta, d.delta, d.gamma, d.kappa);
      const double fd = d.beta / lam * (lp - lm) / (2 * h);
      const double ov = sample_overlap(d.beta, lam, d.delta, d.gamma, d.kappa).value;
      CHECK(std::abs(fd - ov) <= 1e-5 * std::abs(ov));
    }
  }

  TEST_CASE("outlier solves the companion equation") {
    for (const Draw& d : supercritical_draws(50, 2)) {
      const BulkParams p{d.delta, d.gamma, d.kappa};
      const double lam = *sample_spike(d.beta, d.delta, d.gamma, d.kappa);
      CHECK(lam > bulk_edge(p).right);
      CHECK(std::abs(stieltjes(p, lam).m_companion.real() + 1.0 / d.beta) < 1e-8);
    }
  }

  TEST_CASE("no outlier at or below the critical spike") {
    const BulkParams p{0.625, 0.5, 0.2};
    const double bc = edge_stieltjes(p).beta_crit;
    const double floor = 0.2 * (1 + std::sqrt(0.625)) * (1 + std::sqrt(0.625));
    if (bc * 0.99 > floor) CHECK_FALSE(sample_spike(bc * 0.99, 0.625, 0.5, 0.2).has_value());
    CHECK_FALSE(sample_spike(bc, 0.625, 0.5, 0.2).has_value());
    CHECK(sample_spike(bc * 1.01, 0.625, 0.5, 0.2).has_value());
    CHECK_THROWS_AS(sample_spike(floor * 0.9, 0.625, 0.5, 0.2), ValidationError);
  }

  TEST_CASE("population spike") {
    const auto below = population_spike(0.5, 0.625, 1.0);
    CHECK_FALSE(below.beta_out.has_value());
    CHECK(below.pop_overlap == 0.0);
    const auto above = population_spike(5.0, 0.625, 0.5);
    REQUIRE(above.beta_out.has_value());
    CHECK(*above.beta_out == doctest::Approx(0.5 * 5.0 * (5.0 - 0.625 + 1.0) / (5.0 - 0.625)));
    CHECK(above.pop_overlap == doctest::Approx(1 - 0.625 / ((5 - 0.625) * (5 - 0.625))));
  }

  TEST_CASE("alignment switches on at the sample threshold") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> dg(0.1, 2.0), a(0.05, 3.0), k(0.05, 1.0);
    for (int i = 0; i < 20; ++i) {
      PoolScalars s;
      s.alpha = a(rng);
      s.kappa = k(rng);
      s.snr = s.alpha / s.kappa;
      const double delta = dg(rng), gamma = dg(rng);
      const Thresholds t = thresholds(s, delta, gamma);
      CHECK(t.mu_samp > t.mu_pop);
      for (double f : {0.5, 1 - 1e-3}) {
        s.rho = s.snr * std::pow(t.mu_samp * f, 2);
        CHECK(spike_report(s, delta, gamma).total_alignment == 0.0);
      }
      for (double f : {1 + 1e-3, 2.0}) {
        s.rho = s.snr * std::pow(t.mu_samp * f, 2);
        const SpikeReport r = spike_report(s, delta, gamma);
        CHECK(r.total_alignment > 0.0);
        CHECK(r.total_alignment <= 1.0);
        CHECK(r.regime == Regime::Supercritical);
      }
    }
  }

  TEST_CASE("known values on the prefix model") {
    const auto R = CorrelationModel::prefix(3, 10);
    const SpikeReport mean = spike_report(pool_scalars(mean_weights(10), R, 2.5), 0.625, 0.5);
    const SpikeReport cau = spike_report(pool_scalars(causal_weights(10), R, 2.5), 0.625, 0.5);
    REQUIRE(mean.lambda_out.has_value());
    REQUIRE(cau.lambda_out.has_value());
    CHECK(*mean.lambda_out == doctest::Approx(1.16569).epsilon(1e-5));
    CHECK(*cau.lambda_out == doctest::Approx(3.52989).epsilon(1e-5));
    CHECK(cau.total_alignment > mean.total_alignment);
  }

  TEST_CASE("regimes and json") {
    PoolScalars s;
    s.alpha = 1.0;
    s.kappa = 1.0;
    s.snr = 1.0;
    s.rho = 0.1;
    CHECK(spike_report(s, 0.5, 0.5).regime == Regime::SubcriticalPop);
    const Thresholds t = thresholds(s, 0.5, 0.5);
    s.rho = 0.5 * (t.rho_pop + t.rho_samp);
    const SpikeReport mid = spike_report(s, 0.5, 0.5);
    CHECK(mid.regime == Regime::SubcriticalSample);
    CHECK(mid.beta_out.has_value());
    CHECK_FALSE(mid.lambda_out.has_value());
    const auto j = to_json(mid);
    for (const char* key : {"rho", "beta_out", "pop_overlap", "beta_crit", "lambda_out", "sample_overlap",
                            "total_alignment", "mu_pop", "mu_samp", "regime"})
      CHECK(j.contains(key));
    CHECK(j["lambda_out"].is_null());
    CHECK(j["regime"] == "subcritical_sample");
  }

  TEST_CASE("thresholds scale as 1/sqrt(snr)") {
    PoolScalars s;
    s.alpha = 2.0;
    s.kappa = 0.5;
    const double m1 = thresholds(s, 0.6, 0.4).mu_samp;
    s.alpha = 8.0;
    CHECK(thresholds(s, 0.6, 0.4).mu_samp == doctest::Approx(m1 / 2));
  }
}
