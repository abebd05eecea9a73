#include "attnspec/cli.hpp"

#include "attnspec/bulk.hpp"
#include "attnspec/errors.hpp"
#include "attnspec/experiments.hpp"
#include "attnspec/model.hpp"
#include "attnspec/sim.hpp"
#include "attnspec/spike.hpp"
#include "attnspec/table.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace attnspec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("config: cannot open '" + path + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ValidationError("config: '" + path + "' is not valid JSON: " + e.what());
  }
}

std::string scalar_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

/// Feeds keys of a JSON file into the options of `sub` that were not given on the
/// command line. Keys use the long flag name, with '_' accepted for '-'.
void apply_config(CLI::App* sub, const std::string& path) {
  const json cfg = load_json(path);
  if (!cfg.is_object()) throw ValidationError("config: top level must be an object");
  for (const auto& [key, value] : cfg.items()) {
    std::string flag = key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    CLI::Option* opt = flag == "config" ? nullptr : sub->get_option_no_throw("--" + flag);
    if (opt == nullptr) throw ValidationError("config: unknown key '" + key + "' for " + sub->get_name());
    if (opt->count() > 0) continue;
    if (value.is_array())
      for (const auto& v : value) opt->add_result(scalar_string(v));
    else
      opt->add_result(scalar_string(value));
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ValidationError("config: key '" + key + "': " + e.what());
    }
  }
}

std::string default_out() {
  const char* env = std::getenv("ATTNSPEC_OUT");
  return env != nullptr && *env != '\0' ? env : "./out";
}

void print(std::ostream& out, const std::string& key, double value) { out << key << ' ' << format_double(value) << '\n'; }

// Pooled scalars from either a named strategy on a correlation model or explicit (alpha, kappa).
struct PoolArgs {
  std::string weights = "causal";
  int T = 10;
  int L = 3;
  double theta = 0.0;
  int spike_support = 5;
  std::optional<double> alpha, kappa;
  double mu = 0.0;

  void add(CLI::App* sub) {
    sub->add_option("--weights", weights, "Pooling strategy: mean, causal or optimal")->capture_default_str();
    sub->add_option("--T", T, "Sequence length")->capture_default_str();
    sub->add_option("--L", L, "Length of the fully correlated prefix block")->capture_default_str();
    sub->add_option("--theta", theta, "Spike strength of a spiked positional correlation (0: prefix model)")
        ->capture_default_str();
    sub->add_option("--spike-support", spike_support, "Spike direction is uniform on this many leading positions")
        ->capture_default_str();
    sub->add_option("--alpha", alpha, "Signal scalar w^T R w (overrides --weights, needs --kappa)");
    sub->add_option("--kappa", kappa, "Noise scalar ||w||^2 (overrides --weights, needs --alpha)");
    sub->add_option("--mu", mu, "Signal norm ||mu||")->capture_default_str();
  }

  CorrelationModel model() const {
    if (theta > 0.0) {
      if (spike_support < 1 || spike_support > T) throw ValidationError("spike-support: must lie in [1, T]");
      Vec u = Vec::Zero(T);
      u.head(spike_support).setOnes();
      return CorrelationModel::spiked(theta, u);
    }
    if (L < 1 || L > T) throw ValidationError("L: must lie in [1, T]");
    return CorrelationModel::prefix(L, T);
  }

  PoolScalars scalars() const {
    if (alpha.has_value() != kappa.has_value()) throw ValidationError("alpha: --alpha and --kappa go together");
    if (alpha) {
      if (!(*kappa > 0.0)) throw ValidationError("kappa: must be > 0");
      if (!(*alpha >= 0.0)) throw ValidationError("alpha: must be >= 0");
      if (!(mu >= 0.0)) throw ValidationError("mu: must be >= 0");
      PoolScalars s;
      s.alpha = *alpha;
      s.kappa = *kappa;
      s.snr = *alpha / *kappa;
      s.rho = s.snr * mu * mu;
      return s;
    }
    const CorrelationModel R = model();
    const Strategy s = strategy_from_string(weights);
    const PoolWeights w = s == Strategy::Mean     ? mean_weights(T)
                          : s == Strategy::Causal ? causal_weights(T)
                          : s == Strategy::Optimal
                              ? optimal_weights(R)
                              : throw ValidationError("weights: 'learned' needs data; use classify");
    return pool_scalars(w, R, mu);
  }
};

struct SimArgs {
  int d = 500, V = 800, N = 1000, T = 10, L = 3;
  double mu = 2.5;
  std::string weights = "mean";
  double tau = 1.0;
  std::string noise = "gaussian";
  std::string xi_mode = "binary";
  std::string table_noise = "centered";
  std::uint64_t seed = 0;
  int trial = 0;

  void add(CLI::App* sub) {
    sub->add_option("--d", d, "Embedding dimension")->capture_default_str();
    sub->add_option("--V", V, "Vocabulary size (even)")->capture_default_str();
    sub->add_option("--N", N, "Number of sequences")->capture_default_str();
    sub->add_option("--T", T, "Sequence length")->capture_default_str();
    sub->add_option("--L", L, "Prefix length of the positional correlation")->capture_default_str();
    sub->add_option("--mu", mu, "Signal norm ||mu||")->capture_default_str();
    sub->add_option("--tau", tau, "Attention temperature (scores scaled by tau/d)")->capture_default_str();
    sub->add_option("--noise", noise, "Token noise law: gaussian or rademacher")->capture_default_str();
    sub->add_option("--xi-mode", xi_mode, "Latent signs: binary or gaussian_factor")->capture_default_str();
    sub->add_option("--table-noise", table_noise, "Noise table: centered (class means removed) or iid")
        ->capture_default_str();
    sub->add_option("--seed", seed, "Master seed; fixes every random draw")->capture_default_str();
    sub->add_option("--trial", trial, "Trial index (selects independent substreams)")->capture_default_str();
  }

  SimConfig config(const std::string& pooling) const {
    SimConfig c;
    c.dims = ModelDims::finite(d, V, N, T, mu);
    if (L < 1 || L > T) throw ValidationError("L: must lie in [1, T]");
    c.R = CorrelationModel::prefix(L, T);
    if (pooling == "attention")
      c.pooling = Pooling::empirical(T, tau);
    else if (pooling == "mean")
      c.pooling = Pooling::fixed(mean_weights(T));
    else if (pooling == "causal")
      c.pooling = Pooling::fixed(causal_weights(T));
    else if (pooling == "optimal")
      c.pooling = Pooling::fixed(optimal_weights(c.R));
    else
      throw ValidationError("weights: expected mean, causal, optimal or attention, got '" + pooling + "'");
    c.noise = noise_kind_from_string(noise);
    c.xi_mode = xi_mode_from_string(xi_mode);
    c.table_noise = table_noise_from_string(table_noise);
    c.seed = seed;
    c.validate();
    return c;
  }
};

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral analysis of pooled token embeddings: bulk law, outliers, thresholds and simulations."};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(version()));

  std::string out_dir = default_out();
  int threads = 0;
  app.add_option("--out", out_dir, "Output directory (default ./out or $ATTNSPEC_OUT)");
  app.add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();

  std::map<CLI::App*, std::string> config_path;
  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path[sub], "JSON file with the same keys as the flags; flags win");
    return sub;
  };

  // density
  BulkParams bp;
  std::optional<double> eta;
  int points = 2048;
  auto* density_cmd = with_config(app.add_subcommand("density", "Limiting eigenvalue density of the pooled covariance"));
  std::vector<std::pair<CLI::App*, CLI::Option*>> required;
  auto add_bulk = [&](CLI::App* sub) {
    required.emplace_back(sub, sub->add_option("--delta", bp.delta, "Aspect ratio d/V (required)"));
    required.emplace_back(sub, sub->add_option("--gamma", bp.gamma, "Aspect ratio d/N (required)"));
    sub->add_option("--kappa", bp.kappa, "Noise scale ||w||^2")->capture_default_str();
  };
  add_bulk(density_cmd);
  density_cmd->add_option("--eta", eta, "Imaginary offset (default 1e-6 max(1, right edge))");
  density_cmd->add_option("--points", points, "Grid points on [0, 1.15 right edge]")->capture_default_str();

  auto* edge_cmd = with_config(app.add_subcommand("edge", "Right and left support edges with the candidate roots"));
  add_bulk(edge_cmd);

  // spike / thresholds
  PoolArgs pool;
  double delta = 0.0, gamma = 0.0;
  auto add_pool = [&](CLI::App* sub) {
    required.emplace_back(sub, sub->add_option("--delta", delta, "Aspect ratio d/V (required)"));
    required.emplace_back(sub, sub->add_option("--gamma", gamma, "Aspect ratio d/N (required)"));
    pool.add(sub);
  };
  auto* spike_cmd = with_config(app.add_subcommand("spike", "Outlier eigenvalue, overlaps and regime (JSON)"));
  add_pool(spike_cmd);
  auto* thr_cmd = with_config(app.add_subcommand("thresholds", "Population and sample detection thresholds"));
  add_pool(thr_cmd);

  // weights
  int wT = 10, wL = 3, w_support = 5;
  double w_theta = 0.0;
  std::string r_path;
  auto* opt_cmd = with_config(app.add_subcommand("optimal-weights", "SNR-maximizing pooling weights"));
  opt_cmd->add_option("--T", wT, "Sequence length")->capture_default_str();
  opt_cmd->add_option("--L", wL, "Prefix length")->capture_default_str();
  opt_cmd->add_option("--theta", w_theta, "Spike strength (0: prefix model)")->capture_default_str();
  opt_cmd->add_option("--spike-support", w_support, "Leading positions carrying the spike")->capture_default_str();
  opt_cmd->add_option("--R", r_path, "Correlation matrix CSV (overrides the model flags)");
  auto* cau_cmd = with_config(app.add_subcommand("causal-weights", "Limit weights of causal uniform attention"));
  cau_cmd->add_option("--T", wT, "Sequence length")->capture_default_str();

  // simulate
  SimArgs sim;
  bool dump = false;
  auto* sim_cmd = with_config(app.add_subcommand("simulate", "One Monte Carlo draw and its spectrum"));
  sim.add(sim_cmd);
  sim_cmd->add_option("--weights", sim.weights, "Pooling: mean, causal, optimal or attention")->capture_default_str();
  sim_cmd->add_flag("--dump", dump, "Also write E, xi, tokens, C and y as CSV");

  SimArgs att;
  att.d = 800;
  att.V = 0;
  att.N = 200;
  att.mu = 1.0;
  int att_trials = 5;
  auto* att_cmd = with_config(
      app.add_subcommand("attn-concentration", "Deviation of empirical causal attention from its limit weights"));
  att.add(att_cmd);
  att_cmd->add_option("--trials", att_trials, "Independent draws")->capture_default_str();

  SimArgs cls;
  cls.d = 300;
  cls.V = 500;
  cls.N = 800;
  cls.mu = 2.0;
  std::string strategy = "causal";
  ClassifyOptions copt;
  auto* cls_cmd = with_config(app.add_subcommand("classify", "Ridge classification on pooled representations"));
  cls.add(cls_cmd);
  cls_cmd->add_option("--strategy", strategy, "mean, causal, optimal or learned")->capture_default_str();
  cls_cmd->add_option("--lambda", copt.lambda, "Ridge penalty")->capture_default_str();
  cls_cmd->add_option("--split", copt.split, "Training fraction")->capture_default_str();
  cls_cmd->add_option("--restarts", copt.restarts, "Random restarts for learned weights")->capture_default_str();
  cls_cmd->add_option("--iters", copt.iters, "Optimizer iterations for learned weights")->capture_default_str();

  // experiment
  std::string exp_name;
  std::optional<std::uint64_t> exp_seed;
  std::optional<int> exp_trials;
  bool exp_theory = false;
  std::vector<std::string> sets;
  std::string exp_config;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a figure sweep and write table.csv and manifest.json");
  exp_cmd->add_option("name", exp_name, "bulk, align, thresholds, snr, phase_diagram, classify or attn_concentration")
      ->required();
  exp_cmd->add_option("--config", exp_config, "JSON object of experiment parameters; flags win");
  exp_cmd->add_option("--seed", exp_seed, "Master seed");
  exp_cmd->add_option("--trials", exp_trials, "Monte Carlo trials");
  exp_cmd->add_flag("--theory-only", exp_theory, "Skip Monte Carlo columns");
  exp_cmd->add_option("--set", sets, "Parameter override key=value (value parsed as JSON when possible)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto& [sub, path] : config_path)
      if (sub->parsed() && !path.empty()) apply_config(sub, path);
    // Required keys may come from the config file, so they are checked after it is applied.
    for (const auto& [sub, opt] : required)
      if (sub->parsed() && opt->count() == 0)
        throw ValidationError("missing required key '" + opt->get_name(false, true).substr(2) + "'");

    if (density_cmd->parsed()) {
      bp.validate();
      const auto grid = default_grid(bp, points);
      const BulkLaw law = density(bp, grid, eta.value_or(default_eta(bp)));
      const fs::path path = fs::path(out_dir) / "density.csv";
      fs::create_directories(path.parent_path());
      std::ofstream os(path);
      if (!os) throw ValidationError("cannot write " + path.string());
      write_density_csv(os, law);
      print(out, "edge_right", law.edge_right);
      print(out, "atom_mass", law.atom_mass);
    } else if (edge_cmd->parsed()) {
      const BulkEdge e = bulk_edge(bp);
      print(out, "edge_right", e.right);
      print(out, "edge_left", e.left);
      for (int k = 0; k < 3; ++k) print(out, "x" + std::to_string(k + 1), e.roots[k]);
    } else if (spike_cmd->parsed()) {
      out << to_json(spike_report(pool.scalars(), delta, gamma)).dump(2) << '\n';
    } else if (thr_cmd->parsed()) {
      const Thresholds t = thresholds(pool.scalars(), delta, gamma);
      print(out, "mu_pop", t.mu_pop);
      print(out, "mu_samp", t.mu_samp);
      print(out, "rho_pop", t.rho_pop);
      print(out, "rho_samp", t.rho_samp);
      print(out, "beta_crit", t.beta_crit);
    } else if (opt_cmd->parsed()) {
      std::optional<CorrelationModel> R;
      if (!r_path.empty()) {
        std::ifstream is(r_path);
        if (!is) throw ValidationError("R: cannot open '" + r_path + "'");
        R = read_correlation_csv(is);
      } else {
        PoolArgs a;
        a.T = wT;
        a.L = wL;
        a.theta = w_theta;
        a.spike_support = w_support;
        R = a.model();
      }
      const PoolWeights w = optimal_weights(*R);
      for (Eigen::Index i = 0; i < w.w.size(); ++i) out << format_double(w.w(i)) << '\n';
    } else if (cau_cmd->parsed()) {
      if (wT < 1) throw ValidationError("T: must be >= 1");
      const PoolWeights w = causal_weights(wT);
      for (Eigen::Index i = 0; i < w.w.size(); ++i) out << format_double(w.w(i)) << '\n';
    } else if (sim_cmd->parsed()) {
      SimConfig c = sim.config(sim.weights);
      c.threads = threads;
      const Dataset data = generate(c, sim.trial);
      const EmpiricalSpectrum spec = empirical_spectrum(data, Vec::Unit(data.d(), 0));
      const PoolScalars sc = pool_scalars(c.pooling.weights, c.R, c.dims.mu_norm);
      const SpikeReport rep = spike_report(sc, c.dims.delta, c.dims.gamma);
      const double edge = bulk_edge(BulkParams{c.dims.delta, c.dims.gamma, sc.kappa}).right;
      const fs::path dir = fs::path(out_dir) / "simulate";
      fs::create_directories(dir);
      {
        std::ofstream os(dir / "eigenvalues.csv");
        os << "lambda\n";
        for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) os << format_double(spec.eigenvalues(i)) << '\n';
      }
      write_json(dir / "manifest.json",
                 {{"config", c.to_json()}, {"trial", sim.trial}, {"version", version()},
                  {"theory", to_json(rep)}, {"edge_right", edge}});
      if (dump) dump_dataset(data, c, sim.trial, (dir / "dataset").string());
      print(out, "lambda1", spec.eigenvalues(0));
      print(out, "alignment", spec.top_vector_alignment);
      print(out, "edge_right", edge);
      out << "lambda_out " << (rep.lambda_out ? format_double(*rep.lambda_out) : "none") << '\n';
      out << "outlier " << (is_outlier(spec.eigenvalues(0), edge, data.d()) ? "true" : "false") << '\n';
    } else if (att_cmd->parsed()) {
      if (att.V == 0) att.V = 2 * att.d;
      if (att_trials < 1) throw ValidationError("trials: must be >= 1");
      const SimConfig c = att.config("mean");
      std::vector<double> dev(att_trials);
      parallel_for(dev.size(), threads,
                   [&](std::size_t t) { dev[t] = empirical_causal_attention(generate(c, static_cast<int>(t)), att.tau).deviation; });
      const MeanSe s = mean_se(dev);
      print(out, "deviation_mean", s.mean);
      print(out, "deviation_se", s.se);
      out << "trials " << s.n << '\n';
    } else if (cls_cmd->parsed()) {
      const SimConfig c = cls.config("mean");
      const Accuracy a = classify(c, cls.trial, strategy_from_string(strategy), copt);
      print(out, "train_accuracy", a.train);
      print(out, "test_accuracy", a.test);
    } else if (exp_cmd->parsed()) {
      json overrides = exp_config.empty() ? json::object() : load_json(exp_config);
      if (!overrides.is_object()) throw ValidationError("config: top level must be an object");
      for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("set: expected key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        json parsed = json::parse(value, nullptr, false);
        overrides[key] = parsed.is_discarded() ? json(value) : parsed;
      }
      if (exp_seed) overrides["seed"] = *exp_seed;
      if (exp_trials) overrides["trials"] = *exp_trials;
      if (exp_theory) overrides["theory_only"] = true;
      ExperimentSpec spec = ExperimentSpec::make(exp_name, overrides);
      spec.threads = threads;
      spec.out_dir = out_dir;
      const ResultTable t = run_experiment(spec);
      out << "rows " << t.rows.size() << '\n';
      out << "table " << (fs::path(out_dir) / exp_name / "table.csv").string() << '\n';
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConsistencyError& e) {
    err << "internal consistency failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace attnspec::cli
