#include "attnspec/errors.hpp"
#include "attnspec/experiments.hpp"
#include "attnspec/spike.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace attnspec;
using nlohmann::json;

namespace {

std::string csv(const ResultTable& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

std::vector<std::size_t> rows_where(const ResultTable& t, const std::string& col, const std::string& value) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    if (t.text(i, col) == value) out.push_back(i);
  return out;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("registry and parameter checking") {
    CHECK(experiment_names().size() == 7);
    for (const auto& n : experiment_names()) CHECK_NOTHROW(ExperimentSpec::make(n));
    CHECK_THROWS_AS(ExperimentSpec::make("nonexistent"), ValidationError);
    try {
      ExperimentSpec::make("bulk", json{{"dd", 3}});
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("'dd'") != std::string::npos);
    }
    CHECK_THROWS_AS(ExperimentSpec::make("bulk", json{{"d", "big"}}), ValidationError);
    CHECK_THROWS_AS(ExperimentSpec::make("bulk", json{{"d", 2.5}}), ValidationError);
    CHECK(ExperimentSpec::make("bulk", json{{"mu_norm", 3}}).params["mu_norm"] == 3);
  }

  TEST_CASE("helpers") {
    const auto g = linspace(0.0, 5.0, 41);
    CHECK(g.size() == 41);
    CHECK(g[8] == doctest::Approx(1.0));
    const auto [slope, icpt] = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(slope == doctest::Approx(2.0));
    CHECK(icpt == doctest::Approx(1.0));
    const MeanSe s = mean_se({1.0, 2.0, 3.0});
    CHECK(s.mean == doctest::Approx(2.0));
    CHECK(s.se == doctest::Approx(1.0 / std::sqrt(3.0)));
  }

  TEST_CASE("histogram and theory mass") {
    std::vector<double> x;
    for (int i = 0; i < 1000; ++i) x.push_back((i + 0.5) / 1000.0);
    const Histogram h = fd_histogram(x, 0.0, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < h.bins(); ++i) total += h.fraction(i);
    CHECK(total == doctest::Approx(1.0));
    CHECK(l1_between(h, rebin(x, h)) == 0.0);

    for (auto [d, g] : std::vector<std::pair<double, double>>{{0.625, 0.5}, {2.0, 0.5}}) {
      const BulkParams p{d, g, 1.0};
      Histogram grid;
      grid.lo = -0.01;
      grid.width = 0.02;
      grid.counts.assign(static_cast<std::size_t>(bulk_edge(p).right * 1.2 / 0.02) + 2, 0.0);
      const auto mass = theory_bin_mass(p, grid);
      double s = 0.0;
      for (double m : mass) s += m;
      CHECK(s == doctest::Approx(1.0).epsilon(5e-3));
      CHECK(mass[0] >= atom_mass(p));
    }
  }

  TEST_CASE("thresholds table") {
    auto spec = ExperimentSpec::make("thresholds");
    const ResultTable t = run_experiment(spec);
    CHECK(t.rows.size() == 30);
    for (std::size_t i : rows_where(t, "strategy", "optimal")) {
      CHECK(t.number(i, "snr") == doctest::Approx(t.number(i, "lambda_max")));
    }
    // Causal lowers the threshold for short prefixes and raises it for long ones.
    const auto mean = rows_where(t, "strategy", "mean");
    const auto cau = rows_where(t, "strategy", "causal");
    for (int L = 2; 2 * L <= 10; ++L) CHECK(t.number(cau[L - 1], "mu_samp") < t.number(mean[L - 1], "mu_samp"));
    CHECK(t.number(cau[9], "mu_samp") > t.number(mean[9], "mu_samp"));
  }

  TEST_CASE("snr table") {
    const ResultTable t = run_experiment(ExperimentSpec::make("snr"));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double L = t.number(i, "L"), T = t.number(i, "T");
      if (t.text(i, "strategy") == "mean") CHECK(t.number(i, "snr") == doctest::Approx((L * L + T - L) / T));
      if (L == 1) CHECK(t.number(i, "snr") == doctest::Approx(1.0));
      CHECK(t.number(i, "snr") <= t.number(i, "lambda_max") * (1 + 1e-12));
    }
  }

  TEST_CASE("phase diagram is zero below the boundary") {
    const ResultTable t =
        run_experiment(ExperimentSpec::make("phase_diagram", json{{"delta_points", 12}, {"mu_points", 25}}));
    CHECK(t.rows.size() == 3 * 12 * 25);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      const double mu = t.number(i, "mu"), ms = t.number(i, "mu_samp");
      if (mu < ms) CHECK(t.number(i, "alignment") == 0.0);
      if (mu > ms * 1.001) CHECK(t.number(i, "alignment") > 0.0);
    }
    CHECK_THROWS_AS(run_experiment(ExperimentSpec::make("phase_diagram", json{{"theory_only", false}})),
                    ValidationError);
  }

  TEST_CASE("theory columns do not depend on the trial count") {
    const json base = {{"d", 60}, {"V", 96}, {"N", 120}, {"mu_points", 6}};
    json a = base, b = base;
    a["trials"] = 1;
    b["trials"] = 3;
    const ResultTable ta = run_experiment(ExperimentSpec::make("align", a));
    const ResultTable tb = run_experiment(ExperimentSpec::make("align", b));
    REQUIRE(ta.rows.size() == tb.rows.size());
    for (std::size_t i = 0; i < ta.rows.size(); ++i)
      CHECK(ta.rows[i][ta.column("theory_alignment")] == tb.rows[i][tb.column("theory_alignment")]);
  }

  TEST_CASE("runs regenerate bit-identically and write their files") {
    const auto dir = std::filesystem::temp_directory_path() / "attnspec_exp_test";
    std::filesystem::remove_all(dir);
    auto spec = ExperimentSpec::make("bulk", json{{"d", 60}, {"V", 96}, {"N", 120}, {"trials", 2}, {"seed", 5}});
    spec.out_dir = dir.string();
    const std::string first = csv(run_experiment(spec));
    spec.threads = 2;
    const std::string second = csv(run_experiment(spec));
    CHECK(first == second);
    CHECK(std::filesystem::exists(dir / "bulk" / "table.csv"));
    std::ifstream is(dir / "bulk" / "manifest.json");
    const json m = json::parse(is);
    CHECK(m["spec"]["params"]["seed"] == 5);
    CHECK(m.contains("version"));
    CHECK(m.contains("wall_time_s"));
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("bulk theory-only omits Monte Carlo columns") {
    const ResultTable t = run_experiment(ExperimentSpec::make("bulk", json{{"theory_only", true}}));
    CHECK_THROWS_AS(t.column("empirical_density"), ValidationError);
    CHECK(t.metadata["summary"]["causal"]["lambda_out"].get<double>() == doctest::Approx(3.52989).epsilon(1e-5));
    CHECK(t.metadata["summary"]["mean"]["lambda_out"].get<double>() == doctest::Approx(1.16569).epsilon(1e-5));
  }

  TEST_CASE("alignment at zero signal is near zero") {
    const ResultTable t =
        run_experiment(ExperimentSpec::make("align", json{{"d", 80}, {"V", 128}, {"N", 160}, {"mu_points", 3},
                                                          {"trials", 3}}));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
      if (t.number(i, "mu") == 0.0) {
        CHECK(t.number(i, "theory_alignment") == 0.0);
        CHECK(t.number(i, "mc_alignment_mean") < 0.2);
      }
    CHECK(t.metadata["transition_order"] == json({"optimal", "causal", "mean"}));
  }

  TEST_CASE("classification table shape") {
    const ResultTable t = run_experiment(ExperimentSpec::make(
        "classify", json{{"d", 30}, {"V", 40}, {"N", 100}, {"mu_points", 3}, {"trials", 2}, {"restarts", 1},
                         {"iters", 20}}));
    CHECK(t.rows.size() == 12);
    CHECK(t.metadata["paired_differences"].size() == 9);
  }

  TEST_CASE("attention concentration reports a slope") {
    const ResultTable t = run_experiment(
        ExperimentSpec::make("attn_concentration", json{{"d", {50, 100, 200}}, {"N", 20}, {"trials", 2}}));
    CHECK(t.rows.size() == 3);
    CHECK(t.metadata.contains("slope"));
    CHECK(t.metadata["slope"].get<double>() < 0.0);
  }
}
