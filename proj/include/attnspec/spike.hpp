#pragma once

#include "attnspec/model.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string_view>

namespace attnspec {

struct PopulationSpike {
  std::optional<double> beta_out;
  double pop_overlap = 0.0;
};

/// BBP transition of Sigma = alpha mu mu^T + kappa Sigma_Z at rho = delta + sqrt(delta).
PopulationSpike population_spike(double rho, double delta, double kappa);

/// Outlier of S for a population spike beta > kappa (1 + sqrt(delta))^2; absent at or
/// below beta_crit. The root of the outlier quadratic is the one on the analytic branch
/// of the companion transform, m_companion(lambda) = -1/beta.
std::optional<double> sample_spike(double beta, double delta, double gamma, double kappa);

/// Coefficients (a, b, c) of the outlier quadratic a l^2 + b l + c.
std::array<double, 3> outlier_quadratic(double beta, double delta, double gamma, double kappa);

struct Overlap {
  double value = 0.0;
  bool clamped = false;
};

/// |u_S^T u_Sigma|^2 = 1 / (beta lambda m_companion'(lambda)).
Overlap sample_overlap(double beta, double lambda_out, double delta, double gamma, double kappa);

/// Product of sample and population overlaps; 0 when subcritical at either level.
double total_alignment(double rho, double delta, double gamma, double kappa);

struct Thresholds {
  double mu_pop = 0.0;
  double mu_samp = 0.0;
  double rho_pop = 0.0;   // delta + sqrt(delta)
  double rho_samp = 0.0;
  double beta_crit = 0.0;
};

Thresholds thresholds(const PoolScalars& s, double delta, double gamma);
Thresholds thresholds(const PoolWeights& w, const CorrelationModel& R, double delta, double gamma);

enum class Regime { SubcriticalPop, SubcriticalSample, Supercritical };

std::string_view to_string(Regime r);

struct SpikeReport {
  double rho = 0.0;
  std::optional<double> beta_out;
  double pop_overlap = 0.0;
  double beta_crit = 0.0;
  std::optional<double> lambda_out;
  double sample_overlap = 0.0;
  double total_alignment = 0.0;
  double mu_pop = 0.0;
  double mu_samp = 0.0;
  Regime regime = Regime::SubcriticalPop;
  bool clamped = false;
};

/// Full outlier/overlap/threshold picture for pooled scalars (alpha, kappa, rho).
SpikeReport spike_report(const PoolScalars& s, double delta, double gamma);

nlohmann::json to_json(const SpikeReport& r);

}  // namespace attnspec
