#include "attnspec/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <iterator>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = attnspec::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("attnspec_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("edge prints the edges and candidate roots") {
    const Result r = run({"edge", "--delta", "0.625", "--gamma", "0.5", "--kappa", "0.218290"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("edge_right 1.0283", 0) == 0);
    CHECK(r.out.find("\nx3 ") != std::string::npos);
  }

  TEST_CASE("causal weights for T = 3") {
    const Result r = run({"causal-weights", "--T", "3"});
    CHECK(r.code == 0);
    std::istringstream is(r.out);
    double a, b, c;
    is >> a >> b >> c;
    CHECK(a == doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    CHECK(b == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(c == 0.0);
  }

  TEST_CASE("exit status 2 on configuration errors") {
    CHECK(run({"edge", "--delta", "-1", "--gamma", "0.5"}).code == 2);
    CHECK(run({"edge", "--gamma", "0.5"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"experiment", "nope"}).code == 2);
    const auto dir = scratch("cfg");
    std::ofstream(dir / "bad.json") << R"({"delta": 0.5, "gamma": 0.5, "colour": 1})";
    const Result r = run({"edge", "--config", (dir / "bad.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("'colour'") != std::string::npos);
    const Result e = run({"experiment", "bulk", "--set", "dims=3"});
    CHECK(e.code == 2);
    CHECK(e.err.find("'dims'") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("config file with flag precedence") {
    const auto dir = scratch("prec");
    std::ofstream(dir / "c.json") << R"({"delta": 0.625, "gamma": 0.9, "kappa": 0.218290})";
    const Result a = run({"edge", "--config", (dir / "c.json").string(), "--gamma", "0.5"});
    const Result b = run({"edge", "--delta", "0.625", "--gamma", "0.5", "--kappa", "0.218290"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    fs::remove_all(dir);
  }

  TEST_CASE("spike and thresholds print scalars") {
    const Result s = run({"spike", "--delta", "0.625", "--gamma", "0.5", "--weights", "mean", "--mu", "2.5"});
    CHECK(s.code == 0);
    CHECK(s.out.find("\"lambda_out\": 1.1656") != std::string::npos);
    const Result t = run({"thresholds", "--delta", "0.625", "--gamma", "0.5", "--alpha", "1", "--kappa", "0.5"});
    CHECK(t.code == 0);
    CHECK(t.out.find("mu_samp ") != std::string::npos);
  }

  TEST_CASE("optimal weights of a spiked model") {
    const Result r = run({"optimal-weights", "--T", "6", "--theta", "4", "--spike-support", "2"});
    CHECK(r.code == 0);
    std::istringstream is(r.out);
    std::vector<double> w((std::istream_iterator<double>(is)), std::istream_iterator<double>());
    REQUIRE(w.size() == 6);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[5] == doctest::Approx(0.0));
  }

  TEST_CASE("experiment output is byte-identical on rerun") {
    const auto dir = scratch("exp");
    const std::vector<std::string> args = {"experiment", "bulk", "--seed", "42", "--set", "d=50", "--set", "V=80",
                                           "--set", "N=100", "--trials", "2", "--out", dir.string()};
    REQUIRE(run(args).code == 0);
    const std::string first = slurp(dir / "bulk" / "table.csv");
    REQUIRE(run(args).code == 0);
    CHECK(first == slurp(dir / "bulk" / "table.csv"));
    CHECK(slurp(dir / "bulk" / "manifest.json").find("\"seed\": 42") != std::string::npos);
    fs::remove_all(dir);
  }

  TEST_CASE("simulate, classify and attention subcommands") {
    const auto dir = scratch("sim");
    const Result s = run({"simulate", "--d", "60", "--V", "80", "--N", "100", "--out", dir.string()});
    CHECK(s.code == 0);
    CHECK(s.out.rfind("lambda1 ", 0) == 0);
    CHECK(fs::exists(dir / "simulate" / "eigenvalues.csv"));
    const Result c = run({"classify", "--d", "30", "--V", "40", "--N", "100", "--strategy", "mean"});
    CHECK(c.code == 0);
    CHECK(c.out.find("test_accuracy ") != std::string::npos);
    const Result a = run({"attn-concentration", "--d", "50", "--N", "20", "--trials", "2"});
    CHECK(a.code == 0);
    CHECK(a.out.rfind("deviation_mean ", 0) == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("help exits cleanly") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"spike", "--help"}).code == 0);
  }
}
