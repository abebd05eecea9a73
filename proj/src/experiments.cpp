#include "attnspec/experiments.hpp"

#include "attnspec/errors.hpp"
#include "attnspec/linalg.hpp"
#include "attnspec/spike.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>

namespace attnspec {

using nlohmann::json;

namespace {

// Parameter access. Types were checked against the defaults in ExperimentSpec::make.

int get_int(const json& p, const char* key) { return p.at(key).get<int>(); }
double get_double(const json& p, const char* key) { return p.at(key).get<double>(); }
std::string get_string(const json& p, const char* key) { return p.at(key).get<std::string>(); }
bool get_bool(const json& p, const char* key) { return p.at(key).get<bool>(); }
std::uint64_t get_seed(const json& p) { return p.at("seed").get<std::uint64_t>(); }

std::vector<double> get_doubles(const json& p, const char* key) {
  std::vector<double> out;
  for (const auto& v : p.at(key)) {
    if (!v.is_number()) throw ValidationError(std::string(key) + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<int> get_ints(const json& p, const char* key) {
  std::vector<int> out;
  for (const auto& v : p.at(key)) {
    if (!v.is_number_integer()) throw ValidationError(std::string(key) + ": expected an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

std::vector<Strategy> get_strategies(const json& p, bool allow_learned) {
  std::vector<Strategy> out;
  for (const auto& v : p.at("strategies")) {
    if (!v.is_string()) throw ValidationError("strategies: expected an array of names");
    const Strategy s = strategy_from_string(v.get<std::string>());
    if (s == Strategy::Learned && !allow_learned)
      throw ValidationError("strategies: 'learned' is only available in classify");
    out.push_back(s);
  }
  if (out.empty()) throw ValidationError("strategies: must not be empty");
  return out;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ValidationError(key + ": " + what);
}

int require_trials(const json& p) {
  const int trials = get_int(p, "trials");
  require(trials >= 1, "trials", "must be >= 1");
  return trials;
}

std::vector<double> mu_grid(const json& p) {
  const double lo = get_double(p, "mu_min"), hi = get_double(p, "mu_max");
  const int n = get_int(p, "mu_points");
  require(n >= 1, "mu_points", "must be >= 1");
  require(lo >= 0.0 && hi >= lo, "mu_min", "need 0 <= mu_min <= mu_max");
  require(n == 1 || hi > lo, "mu_max", "grid must be ascending");
  return linspace(lo, hi, n);
}

PoolWeights weights_for(Strategy s, const CorrelationModel& R) {
  switch (s) {
    case Strategy::Mean: return mean_weights(R.T());
    case Strategy::Causal: return causal_weights(R.T());
    case Strategy::Optimal: return optimal_weights(R);
    case Strategy::Learned: break;
  }
  throw ValidationError("strategy 'learned' has no fixed weights");
}

CorrelationModel spiked_model(const json& p, int T) {
  const int support = get_int(p, "spike_support");
  require(support >= 1 && support <= T, "spike_support", "must lie in [1, T]");
  const auto signs = get_doubles(p, "spike_signs");
  require(signs.empty() || static_cast<int>(signs.size()) == support, "spike_signs",
          "needs one entry per supported position (or none for all +1)");
  Vec u = Vec::Zero(T);
  for (int t = 0; t < support; ++t) u(t) = signs.empty() ? 1.0 : signs[t];
  require(u.norm() > 0.0, "spike_signs", "must not be all zero");
  return CorrelationModel::spiked(get_double(p, "theta"), u);
}

json opt_number(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::map<std::string, json>& registry() {
  static const std::map<std::string, json> defaults = {
      {"bulk",
       {{"d", 500}, {"V", 800}, {"N", 1000}, {"T", 10}, {"L", 3}, {"mu_norm", 2.5},
        {"strategies", {"mean", "causal"}}, {"trials", 5}, {"seed", 0}, {"noise", "gaussian"},
        {"table_noise", "centered"}, {"theory_only", false}, {"grid_points", 2048}}},
      {"align",
       {{"model", "prefix"}, {"d", 500}, {"V", 800}, {"N", 1000}, {"T", 0}, {"L", 3}, {"theta", 10.0},
        {"spike_support", 5}, {"spike_signs", {1, 1, -1, 1, -1}}, {"xi_mode", "auto"},
        {"mu_min", 0.0}, {"mu_max", 5.0}, {"mu_points", 41}, {"strategies", {"mean", "causal", "optimal"}},
        {"trials", 20}, {"seed", 0}, {"noise", "gaussian"}, {"table_noise", "centered"}, {"theory_only", false}}},
      {"thresholds",
       {{"T", 10}, {"delta", 0.625}, {"gamma", 0.5}, {"strategies", {"mean", "causal", "optimal"}}}},
      {"snr", {{"L", {1, 2, 3, 5}}, {"T_max", 50}, {"strategies", {"mean", "causal"}}}},
      {"phase_diagram",
       {{"gamma", 0.5}, {"T", 20}, {"theta", 10.0}, {"spike_support", 5}, {"spike_signs", json::array()},
        {"delta_min", 0.05}, {"delta_max", 2.0}, {"delta_points", 60}, {"mu_min", 0.0}, {"mu_max", 5.0},
        {"mu_points", 60}, {"strategies", {"mean", "causal", "optimal"}}, {"theory_only", true}}},
      {"classify",
       {{"d", 300}, {"V", 500}, {"N", 800}, {"T", 10}, {"L", 3}, {"lambda", 1.0}, {"split", 0.8},
        {"restarts", 5}, {"iters", 200}, {"mu_min", 0.0}, {"mu_max", 5.0}, {"mu_points", 41},
        {"strategies", {"mean", "causal", "optimal", "learned"}}, {"trials", 20}, {"seed", 0},
        {"noise", "gaussian"}, {"table_noise", "centered"}}},
      {"attn_concentration",
       {{"d", {200, 400, 800, 1600, 3200}}, {"V_per_d", 2}, {"N", 200}, {"T", 10}, {"L", 3}, {"tau", 1.0},
        {"mu_norm", 1.0}, {"trials", 5}, {"seed", 0}, {"noise", "gaussian"}, {"table_noise", "centered"}}},
  };
  return defaults;
}

bool same_kind(const json& def, const json& v) {
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  return true;
}

std::string kind_name(const json& def) {
  if (def.is_boolean()) return "a boolean";
  if (def.is_string()) return "a string";
  if (def.is_array()) return "an array";
  if (def.is_number_integer()) return "an integer";
  return "a number";
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"bulk",     "align",    "thresholds",        "snr",
                                                 "phase_diagram", "classify", "attn_concentration"};
  return names;
}

json experiment_defaults(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) throw ValidationError("experiment: unknown name '" + name + "'");
  return it->second;
}

ExperimentSpec ExperimentSpec::make(const std::string& name, const json& overrides) {
  ExperimentSpec spec;
  spec.name = name;
  spec.params = experiment_defaults(name);
  if (!overrides.is_null() && !overrides.is_object()) throw ValidationError("experiment: config must be an object");
  if (overrides.is_object())
    for (const auto& [key, value] : overrides.items()) {
      if (!spec.params.contains(key)) throw ValidationError("unknown key '" + key + "' for experiment " + name);
      const json& def = spec.params[key];
      if (!same_kind(def, value)) throw ValidationError("key '" + key + "' must be " + kind_name(def));
      if (key == "seed" && !value.is_number_unsigned() && value.get<long long>() < 0) throw ValidationError("key 'seed' must be nonnegative");
      spec.params[key] = value;
    }
  return spec;
}

ResultTable run_experiment(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  static const std::map<std::string, std::function<ResultTable(const ExperimentSpec&)>> runners = {
      {"bulk", run_bulk},
      {"align", run_alignment},
      {"thresholds", run_thresholds},
      {"snr", run_snr},
      {"phase_diagram", run_phase_diagram},
      {"classify", run_classification},
      {"attn_concentration", run_attn_concentration},
  };
  const auto it = runners.find(spec.name);
  if (it == runners.end()) throw ValidationError("experiment: unknown name '" + spec.name + "'");
  ResultTable table = it->second(spec);
  table.metadata["spec"] = {{"name", spec.name}, {"params", spec.params}};
  if (spec.params.contains("seed")) table.metadata["seed"] = spec.params["seed"];
  if (!spec.out_dir.empty())
    table.write((std::filesystem::path(spec.out_dir) / spec.name).string(), elapsed_s(t0));
  return table;
}

// ---------------------------------------------------------------------------
// Histograms

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i) out[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return out;
}

Histogram fd_histogram(const std::vector<double>& sample, double lo, double hi) {
  if (sample.size() < 2) throw ValidationError("histogram: need at least two points");
  if (!(hi > lo)) throw ValidationError("histogram: empty range");
  std::vector<double> s = sample;
  std::sort(s.begin(), s.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - static_cast<double>(i);
    return i + 1 < s.size() ? s[i] * (1.0 - f) + s[i + 1] * f : s[i];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double width = 2.0 * iqr / std::cbrt(static_cast<double>(s.size()));
  if (!(width > 0.0)) width = (hi - lo) / 10.0;
  const auto bins = static_cast<std::size_t>(std::max(1.0, std::ceil((hi - lo) / width)));
  Histogram h;
  h.lo = lo;
  h.width = (hi - lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0.0);
  return rebin(sample, h);
}

Histogram rebin(const std::vector<double>& sample, const Histogram& like) {
  Histogram h = like;
  std::fill(h.counts.begin(), h.counts.end(), 0.0);
  h.total = static_cast<double>(sample.size());
  const double hi = h.lo + h.width * static_cast<double>(h.bins());
  for (double x : sample) {
    if (x < h.lo || x > hi) continue;
    auto i = static_cast<std::size_t>((x - h.lo) / h.width);
    if (i >= h.bins()) i = h.bins() - 1;
    h.counts[i] += 1.0;
  }
  return h;
}

std::vector<double> theory_bin_mass(const BulkParams& p, const Histogram& h) {
  constexpr int kSub = 16;
  const double eta = default_eta(p);
  const double atom = atom_mass(p);
  std::vector<double> grid;
  grid.reserve(h.bins() * kSub);
  for (std::size_t i = 0; i < h.bins(); ++i)
    for (int k = 0; k < kSub; ++k) grid.push_back(h.lo + h.width * (static_cast<double>(i) + (k + 0.5) / kSub));
  const BulkLaw law = density(p, grid, eta);
  std::vector<double> mass(h.bins(), 0.0);
  for (std::size_t i = 0; i < h.bins(); ++i) {
    double s = 0.0;
    for (int k = 0; k < kSub; ++k) {
      const std::size_t j = i * kSub + k;
      if (!law.valid[j]) continue;
      const double x = grid[j];
      // The atom shows up as a Lorentzian of width eta; it is added back as a point mass.
      const double lorentz = atom * eta / (std::numbers::pi * (x * x + eta * eta));
      s += std::max(0.0, law.density[j] - lorentz);
    }
    mass[i] = s * h.width / kSub;
  }
  if (atom > 0.0 && h.lo <= 0.0 && 0.0 < h.lo + h.width * static_cast<double>(h.bins()))
    mass[static_cast<std::size_t>((0.0 - h.lo) / h.width)] += atom;
  return mass;
}

double l1_to_theory(const Histogram& h, const std::vector<double>& mass) {
  if (mass.size() != h.bins()) throw ValidationError("histogram: bin count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) s += std::abs(h.fraction(i) - mass[i]);
  return s;
}

double l1_between(const Histogram& a, const Histogram& b) {
  if (a.bins() != b.bins()) throw ValidationError("histogram: bin count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.bins(); ++i) s += std::abs(a.fraction(i) - b.fraction(i));
  return s;
}

MeanSe mean_se(const std::vector<double>& x) {
  MeanSe r;
  r.n = static_cast<int>(x.size());
  if (x.empty()) return r;
  for (double v : x) r.mean += v;
  r.mean /= r.n;
  if (r.n > 1) {
    double ss = 0.0;
    for (double v : x) ss += (v - r.mean) * (v - r.mean);
    r.se = std::sqrt(ss / (r.n - 1) / r.n);
  }
  return r;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("fit: need two or more paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0)) throw ValidationError("fit: x values are all equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// ---------------------------------------------------------------------------
// Runners

ResultTable run_bulk(const ExperimentSpec& spec) {
  const json& p = spec.params;
  const int T = get_int(p, "T"), L = get_int(p, "L");
  require(L >= 1 && L <= T, "L", "must lie in [1, T]");
  const ModelDims dims = ModelDims::finite(get_int(p, "d"), get_int(p, "V"), get_int(p, "N"), T, get_double(p, "mu_norm"));
  const CorrelationModel R = CorrelationModel::prefix(L, T);
  const auto strategies = get_strategies(p, false);
  const bool theory_only = get_bool(p, "theory_only");
  const int trials = require_trials(p);
  const int grid_points = get_int(p, "grid_points");
  require(grid_points >= 2, "grid_points", "must be >= 2");

  SimConfig cfg;
  cfg.dims = dims;
  cfg.R = R;
  cfg.noise = noise_kind_from_string(get_string(p, "noise"));
  cfg.table_noise = table_noise_from_string(get_string(p, "table_noise"));
  cfg.seed = get_seed(p);
  cfg.trials = trials;
  cfg.threads = spec.threads;

  ResultTable table;
  if (theory_only)
    table.columns = {"strategy", "x", "theory_density", "mp_density", "edge_right", "lambda_out"};
  else
    table.columns = {"strategy",  "x",          "bin_lo",     "bin_hi",       "empirical_density",
                     "empirical_density_se",    "trials",     "theory_density", "mp_density",
                     "edge_right", "lambda_out", "lambda1_mean", "lambda1_se"};
  json summary = json::object();

  for (Strategy s : strategies) {
    const PoolWeights w = weights_for(s, R);
    const PoolScalars sc = pool_scalars(w, R, dims.mu_norm);
    const BulkParams bp{dims.delta, dims.gamma, sc.kappa};
    const BulkParams mp{0.0, dims.gamma, sc.kappa};
    const SpikeReport rep = spike_report(sc, dims.delta, dims.gamma);
    const double edge = bulk_edge(bp).right;
    json info = {{"alpha", sc.alpha},           {"kappa", sc.kappa},
                 {"snr", sc.snr},               {"edge_right", edge},
                 {"edge_right_mp", bulk_edge(mp).right}, {"lambda_out", opt_number(rep.lambda_out)},
                 {"beta_crit", rep.beta_crit}};
    const std::string name(to_string(s));

    if (theory_only) {
      const double eta = default_eta(bp);
      const std::vector<double> grid = linspace(0.0, 1.15 * std::max(edge, rep.lambda_out.value_or(0.0)), grid_points);
      const BulkLaw a = density(bp, grid, eta);
      const BulkLaw b = density(mp, grid, eta);
      for (std::size_t i = 0; i < grid.size(); ++i)
        table.add_row({name, grid[i], a.valid[i] ? json(a.density[i]) : json(nullptr),
                       b.valid[i] ? json(b.density[i]) : json(nullptr), edge, opt_number(rep.lambda_out)});
      summary[name] = info;
      continue;
    }

    cfg.pooling = Pooling::fixed(w);
    std::vector<Vec> evals(trials);
    parallel_for(trials, spec.threads, [&](std::size_t t) {
      const Dataset data = generate(cfg, static_cast<int>(t));
      evals[t] = empirical_spectrum(data, Vec::Unit(data.d(), 0)).eigenvalues;
    });
    std::vector<double> pooled, top;
    for (const Vec& e : evals) {
      pooled.insert(pooled.end(), e.data(), e.data() + e.size());
      top.push_back(e(0));
    }
    const double hi = 1.2 * std::max(*std::max_element(top.begin(), top.end()), edge);
    const Histogram h = fd_histogram(pooled, 0.0, hi);
    const auto mass = theory_bin_mass(bp, h);
    std::vector<double> centers(h.bins());
    for (std::size_t i = 0; i < h.bins(); ++i) centers[i] = h.center(i);
    const BulkLaw lmp = density(mp, centers, default_eta(mp));
    std::vector<Histogram> per_trial;
    for (const Vec& e : evals) per_trial.push_back(rebin(std::vector<double>(e.data(), e.data() + e.size()), h));
    const MeanSe l1 = mean_se(top);

    for (std::size_t i = 0; i < h.bins(); ++i) {
      std::vector<double> dens;
      for (const auto& ht : per_trial) dens.push_back(ht.fraction(i) / h.width);
      const MeanSe ed = mean_se(dens);
      table.add_row({name, centers[i], h.lo + h.width * i, h.lo + h.width * (i + 1), h.fraction(i) / h.width, ed.se,
                     trials, mass[i] / h.width, lmp.valid[i] ? json(lmp.density[i]) : json(nullptr), edge,
                     opt_number(rep.lambda_out), l1.mean, l1.se});
    }
    info["lambda1"] = top;
    info["lambda1_mean"] = l1.mean;
    info["lambda1_se"] = l1.se;
    info["trials"] = trials;
    info["bins"] = h.bins();
    info["bin_width"] = h.width;
    info["l1"] = l1_to_theory(h, mass);
    summary[name] = info;
  }
  table.metadata["summary"] = summary;
  table.metadata["delta"] = dims.delta;
  table.metadata["gamma"] = dims.gamma;
  return table;
}

ResultTable run_alignment(const ExperimentSpec& spec) {
  const json& p = spec.params;
  const std::string model = get_string(p, "model");
  require(model == "prefix" || model == "spiked", "model", "must be 'prefix' or 'spiked'");
  const bool spiked = model == "spiked";
  int T = get_int(p, "T");
  if (T == 0) T = spiked ? 20 : 10;
  require(T >= 1, "T", "must be >= 1 (0 selects the model default)");
  const CorrelationModel R = [&] {
    if (spiked) return spiked_model(p, T);
    const int L = get_int(p, "L");
    require(L >= 1 && L <= T, "L", "must lie in [1, T]");
    return CorrelationModel::prefix(L, T);
  }();
  std::string xi = get_string(p, "xi_mode");
  if (xi == "auto") xi = spiked ? "gaussian_factor" : "binary";
  const auto strategies = get_strategies(p, false);
  const auto grid = mu_grid(p);
  const bool theory_only = get_bool(p, "theory_only");
  const int trials = require_trials(p);

  SimConfig cfg;
  cfg.dims = ModelDims::finite(get_int(p, "d"), get_int(p, "V"), get_int(p, "N"), T, 0.0);
  cfg.R = R;
  cfg.pooling = Pooling::fixed(mean_weights(T));
  cfg.xi_mode = xi_mode_from_string(xi);
  cfg.noise = noise_kind_from_string(get_string(p, "noise"));
  cfg.table_noise = table_noise_from_string(get_string(p, "table_noise"));
  cfg.seed = get_seed(p);
  cfg.trials = trials;
  cfg.threads = spec.threads;
  cfg.validate();
  const double delta = cfg.dims.delta, gamma = cfg.dims.gamma;

  std::vector<PoolWeights> weights;
  for (Strategy s : strategies) weights.push_back(weights_for(s, R));

  // mc[trial][strategy][mu]
  std::vector<std::vector<std::vector<TopPair>>> mc;
  if (!theory_only) {
    mc.resize(trials);
    parallel_for(trials, spec.threads, [&](std::size_t t) {
      const Dataset data = generate(cfg, static_cast<int>(t));
      for (const auto& w : weights) mc[t].push_back(top_pair_mu_sweep(data, w.w, grid));
    });
  }

  ResultTable table;
  table.columns = {"mu", "strategy", "theory_alignment", "lambda_out_theory", "mu_samp"};
  if (!theory_only)
    for (const char* c : {"mc_alignment_mean", "mc_alignment_se", "lambda1_mean", "lambda1_se", "trials"})
      table.columns.emplace_back(c);

  json mu_samp = json::object();
  std::vector<std::pair<double, std::string>> order;
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    const std::string name(to_string(strategies[k]));
    const Thresholds th = thresholds(weights[k], R, delta, gamma);
    mu_samp[name] = th.mu_samp;
    order.emplace_back(th.mu_samp, name);
  }
  for (std::size_t m = 0; m < grid.size(); ++m)
    for (std::size_t k = 0; k < strategies.size(); ++k) {
      const std::string name(to_string(strategies[k]));
      const SpikeReport rep = spike_report(pool_scalars(weights[k], R, grid[m]), delta, gamma);
      std::vector<json> row = {grid[m], name, rep.total_alignment, opt_number(rep.lambda_out), rep.mu_samp};
      if (!theory_only) {
        std::vector<double> a, l;
        for (int t = 0; t < trials; ++t) {
          a.push_back(mc[t][k][m].alignment);
          l.push_back(mc[t][k][m].lambda1);
        }
        const MeanSe as = mean_se(a), ls = mean_se(l);
        row.insert(row.end(), {as.mean, as.se, ls.mean, ls.se, trials});
      }
      table.add_row(std::move(row));
    }
  std::sort(order.begin(), order.end());
  json names = json::array();
  for (const auto& o : order) names.push_back(o.second);
  table.metadata["mu_samp"] = mu_samp;
  table.metadata["transition_order"] = names;
  table.metadata["T"] = T;
  table.metadata["xi_mode"] = xi;
  table.metadata["delta"] = delta;
  table.metadata["gamma"] = gamma;
  table.metadata["lambda_max"] = lambda_max(R);
  return table;
}

ResultTable run_thresholds(const ExperimentSpec& spec) {
  const json& p = spec.params;
  const int T = get_int(p, "T");
  require(T >= 1, "T", "must be >= 1");
  const double delta = get_double(p, "delta"), gamma = get_double(p, "gamma");
  BulkParams{delta, gamma, 1.0}.validate();
  const auto strategies = get_strategies(p, false);
  ResultTable table;
  table.columns = {"L", "strategy", "alpha", "kappa", "snr", "mu_pop", "mu_samp", "lambda_max"};
  for (int L = 1; L <= T; ++L) {
    const CorrelationModel R = CorrelationModel::prefix(L, T);
    for (Strategy s : strategies) {
      const PoolWeights w = weights_for(s, R);
      const PoolScalars sc = pool_scalars(w, R, 1.0);
      const Thresholds th = thresholds(sc, delta, gamma);
      table.add_row({L, std::string(to_string(s)), sc.alpha, sc.kappa, sc.snr, th.mu_pop, th.mu_samp, lambda_max(R)});
    }
  }
  return table;
}

ResultTable run_snr(const ExperimentSpec& spec) {
  const json& p = spec.params;
  const auto Ls = get_ints(p, "L");
  const int T_max = get_int(p, "T_max");
  const auto strategies = get_strategies(p, false);
  require(!Ls.empty(), "L", "must not be empty");
  ResultTable table;
  table.columns = {"L", "T", "strategy", "alpha", "kappa", "snr", "lambda_max"};
  for (int L : Ls) {
    require(L >= 1 && L <= T_max, "L", "entries must lie in [1, T_max]");
    for (int T = L; T <= T_max; ++T) {
      const CorrelationModel R = CorrelationModel::prefix(L, T);
      for (Strategy s : strategies) {
        const PoolScalars sc = pool_scalars(weights_for(s, R), R, 1.0);
        table.add_row({L, T, std::string(to_string(s)), sc.alpha, sc.kappa, sc.snr, lambda_max(R)});
      }
    }
  }
  return table;
}

ResultTable run_phase_diagram(const ExperimentSpec& spec) {
  const json& p = spec.params;
  require(get_bool(p, "theory_only"), "theory_only", "the phase diagram is computed from theory only");
  const double gamma = get_double(p, "gamma");
  const int T = get_int(p, "T");
  require(T >= 1, "T", "must be >= 1");
  const CorrelationModel R = spiked_model(p, T);
  const auto strategies = get_strategies(p, false);
  const double dlo = get_double(p, "delta_min"), dhi = get_double(p, "delta_max");
  const int dn = get_int(p, "delta_points");
  require(dn >= 1 && dlo > 0.0 && dhi >= dlo && (dn == 1 || dhi > dlo), "delta_min",
          "need 0 < delta_min < delta_max and delta_points >= 1");
  const auto deltas = linspace(dlo, dhi, dn);
  const auto mus = mu_grid(p);
  std::vector<PoolWeights> weights;
  for (Strategy s : strategies) weights.push_back(weights_for(s, R));

  // cells[delta][strategy] -> (mu_samp, alignments over mu)
  std::vector<std::vector<std::pair<double, std::vector<double>>>> cells(deltas.size());
  parallel_for(deltas.size(), spec.threads, [&](std::size_t i) {
    BulkParams{deltas[i], gamma, 1.0}.validate();
    for (const auto& w : weights) {
      std::vector<double> a;
      for (double mu : mus) a.push_back(spike_report(pool_scalars(w, R, mu), deltas[i], gamma).total_alignment);
      cells[i].emplace_back(thresholds(w, R, deltas[i], gamma).mu_samp, std::move(a));
    }
  });

  ResultTable table;
  table.columns = {"strategy", "delta", "mu", "alignment", "mu_samp"};
  for (std::size_t k = 0; k < strategies.size(); ++k)
    for (std::size_t i = 0; i < deltas.size(); ++i)
      for (std::size_t m = 0; m < mus.size(); ++m)
        table.add_row({std::string(to_string(strategies[k])), deltas[i], mus[m], cells[i][k].second[m],
                       cells[i][k].first});
  table.metadata["lambda_max"] = lambda_max(R);
  return table;
}

ResultTable run_classification(const ExperimentSpec& spec) {
  const json& p = spec.params;
  const int T = get_int(p, "T"), L = get_int(p, "L");
  require(L >= 1 && L <= T, "L", "must lie in [1, T]");
  const auto strategies = get_strategies(p, true);
  const auto grid = mu_grid(p);
  const int trials = require_trials(p);
  ClassifyOptions opt;
  opt.lambda = get_double(p, "lambda");
  opt.split = get_double(p, "split");
  opt.restarts = get_int(p, "restarts");
  opt.iters = get_int(p, "iters");
  require(opt.restarts >= 0, "restarts", "must be >= 0");
  require(opt.iters >= 1, "iters", "must be >= 1");

  SimConfig cfg;
  cfg.dims = ModelDims::finite(get_int(p, "d"), get_int(p, "V"), get_int(p, "N"), T, 0.0);
  cfg.R = CorrelationModel::prefix(L, T);
  cfg.pooling = Pooling::fixed(mean_weights(T));
  cfg.noise = noise_kind_from_string(get_string(p, "noise"));
  cfg.table_noise = table_noise_from_string(get_string(p, "table_noise"));
  cfg.seed = get_seed(p);
  cfg.trials = trials;
  cfg.threads = spec.threads;
  cfg.validate();

  std::vector<std::vector<std::vector<Accuracy>>> acc(trials);  // [trial][mu][strategy]
  parallel_for(trials, spec.threads,
               [&](std::size_t t) { acc[t] = classify_sweep(cfg, static_cast<int>(t), strategies, grid, opt); });

  ResultTable table;
  table.columns = {"mu", "strategy", "test_mean", "test_se", "train_mean", "train_se", "trials"};
  for (std::size_t m = 0; m < grid.size(); ++m)
    for (std::size_t k = 0; k < strategies.size(); ++k) {
      std::vector<double> te, tr;
      for (int t = 0; t < trials; ++t) {
        te.push_back(acc[t][m][k].test);
        tr.push_back(acc[t][m][k].train);
      }
      const MeanSe a = mean_se(te), b = mean_se(tr);
      table.add_row({grid[m], std::string(to_string(strategies[k])), a.mean, a.se, b.mean, b.se, trials});
    }

  // Paired per-trial differences between consecutive strategies in the listed order.
  json ordering = json::array();
  for (std::size_t m = 0; m < grid.size(); ++m)
    for (std::size_t k = 0; k + 1 < strategies.size(); ++k) {
      std::vector<double> diff;
      for (int t = 0; t < trials; ++t) diff.push_back(acc[t][m][k + 1].test - acc[t][m][k].test);
      const MeanSe ds = mean_se(diff);
      ordering.push_back({{"mu", grid[m]},
                          {"better", to_string(strategies[k + 1])},
                          {"worse", to_string(strategies[k])},
                          {"diff_mean", ds.mean},
                          {"diff_se", ds.se}});
    }
  table.metadata["paired_differences"] = ordering;
  return table;
}

ResultTable run_attn_concentration(const ExperimentSpec& spec) {
  const json& p = spec.params;
  const auto ds = get_ints(p, "d");
  require(!ds.empty(), "d", "must not be empty");
  for (std::size_t i = 0; i < ds.size(); ++i)
    require(ds[i] >= 1 && (i == 0 || ds[i] > ds[i - 1]), "d", "must be positive and ascending");
  const int T = get_int(p, "T"), L = get_int(p, "L");
  require(L >= 1 && L <= T, "L", "must lie in [1, T]");
  const int V_per_d = get_int(p, "V_per_d");
  require(V_per_d >= 1, "V_per_d", "must be >= 1");
  const double tau = get_double(p, "tau");
  require(tau >= 0.0, "tau", "must be >= 0");
  const int trials = require_trials(p);

  std::vector<SimConfig> cfgs;
  for (int d : ds) {
    SimConfig c;
    c.dims = ModelDims::finite(d, 2LL * ((static_cast<long long>(V_per_d) * d + 1) / 2), get_int(p, "N"), T,
                               get_double(p, "mu_norm"));
    c.R = CorrelationModel::prefix(L, T);
    c.pooling = Pooling::fixed(mean_weights(T));
    c.noise = noise_kind_from_string(get_string(p, "noise"));
    c.table_noise = table_noise_from_string(get_string(p, "table_noise"));
    c.seed = get_seed(p);
    c.trials = trials;
    c.validate();
    cfgs.push_back(c);
  }
  std::vector<double> dev(ds.size() * trials);
  parallel_for(dev.size(), spec.threads, [&](std::size_t j) {
    const std::size_t i = j / trials;
    const int t = static_cast<int>(j % trials);
    dev[j] = empirical_causal_attention(generate(cfgs[i], t), tau).deviation;
  });

  ResultTable table;
  table.columns = {"d", "deviation_mean", "deviation_se", "trials"};
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const MeanSe s = mean_se(std::vector<double>(dev.begin() + i * trials, dev.begin() + (i + 1) * trials));
    table.add_row({ds[i], s.mean, s.se, trials});
    lx.push_back(std::log(ds[i]));
    ly.push_back(std::log(s.mean));
  }
  if (ds.size() >= 2) {
    const auto [slope, intercept] = fit_line(lx, ly);
    table.metadata["slope"] = slope;
    table.metadata["intercept"] = intercept;
  }
  return table;
}

}  // namespace attnspec
