#pragma once

#include "attnspec/bulk.hpp"
#include "attnspec/sim.hpp"
#include "attnspec/table.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace attnspec {

/// A named experiment with its fully resolved parameters.
struct ExperimentSpec {
  std::string name;
  nlohmann::json params;  // defaults merged with overrides
  int threads = 1;
  std::string out_dir;    // empty: nothing written

  /// Merges overrides into the defaults of `name`. Unknown names, unknown keys and
  /// type mismatches throw ValidationError naming the key.
  static ExperimentSpec make(const std::string& name, const nlohmann::json& overrides = nlohmann::json::object());
};

const std::vector<std::string>& experiment_names();
nlohmann::json experiment_defaults(const std::string& name);

/// Runs the experiment and, when out_dir is set, writes <out_dir>/<name>/{table.csv,manifest.json}.
ResultTable run_experiment(const ExperimentSpec& spec);

ResultTable run_bulk(const ExperimentSpec& spec);
ResultTable run_alignment(const ExperimentSpec& spec);
ResultTable run_thresholds(const ExperimentSpec& spec);
ResultTable run_snr(const ExperimentSpec& spec);
ResultTable run_phase_diagram(const ExperimentSpec& spec);
ResultTable run_classification(const ExperimentSpec& spec);
ResultTable run_attn_concentration(const ExperimentSpec& spec);

// Histogram helpers shared with the acceptance checks.

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<double> counts;
  double total = 0.0;  // sample size, including points outside the bins

  std::size_t bins() const { return counts.size(); }
  double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * width; }
  double fraction(std::size_t i) const { return total > 0.0 ? counts[i] / total : 0.0; }
};

/// Freedman-Diaconis bin width on [lo, hi].
Histogram fd_histogram(const std::vector<double>& sample, double lo, double hi);
/// Same bins as `like`.
Histogram rebin(const std::vector<double>& sample, const Histogram& like);

/// Probability mass of the limiting law in each bin; the atom at 0 falls in the bin holding 0.
std::vector<double> theory_bin_mass(const BulkParams& p, const Histogram& h);

/// sum_i |fraction_i - mass_i|.
double l1_to_theory(const Histogram& h, const std::vector<double>& mass);
double l1_between(const Histogram& a, const Histogram& b);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

MeanSe mean_se(const std::vector<double>& x);

/// Least-squares slope and intercept of y on x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// n uniform points on [lo, hi].
std::vector<double> linspace(double lo, double hi, int n);

}  // namespace attnspec
