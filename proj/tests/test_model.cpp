#include "attnspec/errors.hpp"
#include "attnspec/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace attnspec;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

Mat random_psd(int T, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat G(T, T + 2);
  for (int i = 0; i < G.rows(); ++i)
    for (int j = 0; j < G.cols(); ++j) G(i, j) = normal(rng);
  Mat R = G * G.transpose() / (T + 2);
  return 0.5 * (R + R.transpose());
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("causal weights for T = 3") {
    const Vec w = causal_weights(3).w;
    CHECK(w(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(w(1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(w(2) == 0.0);
  }

  TEST_CASE("causal weights match the row-averaging oracle") {
    for (int T = 1; T <= 64; ++T) {
      const Vec w = causal_weights(T).w;
      const auto ref = oracle::row_average_causal(T);
      for (int t = 0; t < T; ++t) CHECK(std::abs(w(t) - static_cast<double>(ref[t])) <= 1e-12);
      CHECK(std::abs(w.sum() - 1.0) <= 1e-12);
      for (int t = 1; t < T; ++t) CHECK(w(t) <= w(t - 1));
    }
  }

  TEST_CASE("causal closed-form scalars agree with the weight vector") {
    for (int T = 1; T <= 64; ++T)
      for (int L = 1; L <= T; ++L) {
        const auto R = CorrelationModel::prefix(L, T);
        const PoolScalars v = pool_scalars(causal_weights(T), R, 0.0);
        const PoolScalars c = causal_scalars_closed_form(T, L);
        CHECK(rel(c.kappa, v.kappa) <= 1e-12);
        CHECK(rel(c.alpha, v.alpha) <= 1e-12);
      }
  }

  TEST_CASE("causal beats mean for short prefixes, ties at L = 1, loses near L = T") {
    for (int T = 2; T <= 64; ++T)
      for (int L = 1; L < T; ++L) {
        const auto R = CorrelationModel::prefix(L, T);
        const double sc = pool_scalars(causal_weights(T), R, 0.0).snr;
        const double sm = pool_scalars(mean_weights(T), R, 0.0).snr;
        if (L == 1)
          CHECK(std::abs(sc - sm) <= 1e-12);
        else if (2 * L <= T)
          CHECK(sc > sm);
        else if (L == T - 1 && T >= 3)
          CHECK(sc < sm);
      }
  }

  TEST_CASE("mean pooling snr on the prefix model") {
    for (int T = 1; T <= 30; ++T)
      for (int L = 1; L <= T; ++L) {
        const double snr = pool_scalars(mean_weights(T), CorrelationModel::prefix(L, T), 0.0).snr;
        CHECK(rel(snr, (L * L + T - L) / static_cast<double>(T)) <= 1e-13);
      }
  }

  TEST_CASE("harmonic numbers") {
    CHECK(harmonic(0) == 0.0);
    CHECK(harmonic(1) == 1.0);
    CHECK(harmonic(4) == doctest::Approx(25.0 / 12.0).epsilon(1e-15));
    CHECK_THROWS_AS(harmonic(-1), ValidationError);
  }

  TEST_CASE("optimal weights reach lambda_max") {
    std::vector<CorrelationModel> models = {CorrelationModel::prefix(3, 10), CorrelationModel::prefix(1, 5),
                                            CorrelationModel::spiked(10.0, Vec::Ones(4))};
    Vec u = Vec::Zero(20);
    u.head(5) << 1, 1, -1, 1, -1;
    models.push_back(CorrelationModel::spiked(10.0, u));
    std::mt19937_64 rng(7);
    for (int k = 0; k < 50; ++k) models.push_back(CorrelationModel::custom(random_psd(2 + k % 9, rng)));
    std::uniform_real_distribution<double> unif;
    for (const auto& R : models) {
      const PoolWeights w = optimal_weights(R);
      CHECK(std::abs(w.w.sum() - 1.0) <= 1e-12);
      const double best = pool_scalars(w, R, 0.0).snr;
      CHECK(rel(best, lambda_max(R)) <= 1e-10);
      for (int i = 0; i < 200; ++i) {
        Vec s(R.T());
        for (int t = 0; t < R.T(); ++t) s(t) = -std::log(unif(rng) + 1e-300);
        s /= s.sum();
        CHECK(pool_scalars(PoolWeights::custom(s), R, 0.0).snr <= best * (1 + 1e-12));
      }
    }
  }

  TEST_CASE("optimal weights are unattainable when 1 is orthogonal to the top eigenspace") {
    Mat R(2, 2);
    R << 1, -1, -1, 1;
    try {
      optimal_weights(CorrelationModel::custom(R));
      FAIL("expected UnattainableError");
    } catch (const UnattainableError& e) {
      CHECK(e.supremum() == doctest::Approx(2.0));
    }
  }

  TEST_CASE("prefix and spiked matrices") {
    const Mat& P = CorrelationModel::prefix(2, 4).matrix();
    CHECK(P(0, 1) == 1.0);
    CHECK(P(2, 3) == 0.0);
    CHECK(P(3, 3) == 1.0);
    CHECK(CorrelationModel::prefix(2, 4).sign_realizable());
    const auto S = CorrelationModel::spiked(3.0, Vec::Ones(3));
    CHECK(S.matrix()(0, 0) == doctest::Approx(2.0));
    CHECK_FALSE(S.sign_realizable());
    CHECK(lambda_max(S) == doctest::Approx(4.0));
  }

  TEST_CASE("input validation") {
    CHECK_THROWS_AS(CorrelationModel::prefix(0, 3), ValidationError);
    CHECK_THROWS_AS(CorrelationModel::prefix(4, 3), ValidationError);
    CHECK_THROWS_AS(CorrelationModel::spiked(1.0, Vec::Zero(3)), ValidationError);
    Mat A(2, 2);
    A << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(CorrelationModel::custom(A), ValidationError);
    A << 1, 2, 2, 1;
    CHECK_THROWS_AS(CorrelationModel::custom(A), ValidationError);
    Vec w(3);
    w << 0.5, 0.5, 0.5;
    CHECK_THROWS_AS(PoolWeights::custom(w), ValidationError);
    CHECK_THROWS_AS(ModelDims::finite(10, 7, 10, 2, 1.0), ValidationError);
    CHECK_THROWS_AS(ModelDims::finite(10, 8, 10, 2, -1.0), ValidationError);
  }

  TEST_CASE("finite dims give the aspect ratios") {
    const auto m = ModelDims::finite(500, 800, 1000, 10, 2.5);
    CHECK(m.delta == doctest::Approx(0.625));
    CHECK(m.gamma == doctest::Approx(0.5));
  }

  TEST_CASE("csv round trip") {
    for (const auto& R : {CorrelationModel::prefix(3, 6), CorrelationModel::spiked(2.0, Vec::Ones(4))}) {
      std::stringstream ss;
      write_correlation_csv(ss, R);
      const auto back = read_correlation_csv(ss);
      CHECK(back.kind() == R.kind());
      CHECK((back.matrix() - R.matrix()).cwiseAbs().maxCoeff() <= 1e-14);
    }
    std::stringstream ss;
    write_weights_csv(ss, causal_weights(7));
    const auto w = read_weights_csv(ss);
    CHECK(w.label == WeightLabel::Causal);
    CHECK((w.w - causal_weights(7).w).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("pool scalars") {
    const auto R = CorrelationModel::prefix(3, 10);
    const PoolScalars s = pool_scalars(mean_weights(10), R, 2.0);
    CHECK(s.kappa == doctest::Approx(0.1));
    CHECK(s.alpha == doctest::Approx(0.16));
    CHECK(s.rho == doctest::Approx(1.6 * 4.0));
  }
}
