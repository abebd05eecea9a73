#include "attnspec/spike.hpp"

#include "attnspec/bulk.hpp"
#include "attnspec/errors.hpp"
#include "attnspec/poly.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

namespace attnspec {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

constexpr double kThresholdTol = 1e-8;
constexpr double kClampTol = 1e-9;

}  // namespace

PopulationSpike population_spike(double rho, double delta, double kappa) {
  if (!(rho >= 0.0)) throw ValidationError("population_spike: rho must be >= 0");
  if (!(delta > 0.0)) throw ValidationError("population_spike: delta must be > 0");
  if (!(kappa > 0.0)) throw ValidationError("population_spike: kappa must be > 0");
  PopulationSpike out;
  if (rho <= delta + std::sqrt(delta)) return out;
  const double gap = rho - delta;
  out.beta_out = kappa * rho * (gap + 1.0) / gap;
  out.pop_overlap = 1.0 - delta / (gap * gap);
  return out;
}

std::array<double, 3> outlier_quadratic(double beta, double delta, double gamma, double kappa) {
  const double b2 = beta * beta;
  return {delta * kappa, -b2 * gamma + beta * kappa * (gamma * (1.0 + delta) - 2.0 * delta),
          b2 * (beta * gamma + kappa * (1.0 - gamma) * (delta - gamma))};
}

std::optional<double> sample_spike(double beta, double delta, double gamma, double kappa) {
  const BulkParams p{delta, gamma, kappa};
  p.validate();
  const double floor = kappa * (1.0 + std::sqrt(delta)) * (1.0 + std::sqrt(delta));
  if (!(beta > floor))
    throw ValidationError("sample_spike: beta = " + fmt(beta) + " is not a population outlier (needs > " +
                          fmt(floor) + ")");
  const double beta_crit = edge_stieltjes(p).beta_crit;
  if (beta <= beta_crit * (1.0 + kThresholdTol)) return std::nullopt;

  const auto [a, b, c] = outlier_quadratic(beta, delta, gamma, kappa);
  if (a != 0.0 && b * b - 4.0 * a * c < 0.0)
    throw ConsistencyError("sample_spike: negative discriminant in the supercritical regime (a = " + fmt(a) +
                           ", b = " + fmt(b) + ", c = " + fmt(c) + ")");
  const auto roots = poly::quadratic(a, b, c);
  const double edge = bulk_edge(p).right;

  std::optional<double> best;
  std::vector<std::string> rejected;
  for (const auto& r : roots) {
    if (std::isnan(r.real())) continue;
    const double lam = r.real();
    if (!(lam > edge)) {
      rejected.push_back(fmt(lam) + " (inside the bulk)");
      continue;
    }
    const double mc = stieltjes(p, lam).m_companion.real();
    const double err = std::abs(mc + 1.0 / beta);
    if (err < 1e-8 * std::max(1.0, 1.0 / beta)) {
      if (!best || lam > *best) best = lam;
    } else {
      rejected.push_back(fmt(lam) + " (companion residual " + fmt(err) + ")");
    }
  }
  if (!best) {
    std::string msg = "sample_spike: no root of the outlier quadratic lies on the Stieltjes branch for beta = " +
                      fmt(beta) + ";";
    for (const auto& s : rejected) msg += " " + s;
    throw ConsistencyError(msg);
  }
  return best;
}

Overlap sample_overlap(double beta, double lambda_out, double delta, double gamma, double kappa) {
  const BulkParams p{delta, gamma, kappa};
  p.validate();
  const double lam = lambda_out;
  const double m = (1.0 - gamma) / (gamma * lam) - 1.0 / (gamma * beta);
  const double s = delta + gamma - 2.0 * delta * gamma;
  const double Fm = 3.0 * delta * gamma * kappa * lam * lam * m * m - 2.0 * kappa * lam * s * m -
                    (lam + kappa * (delta - 1.0) * (1.0 - gamma));
  const double Fl = 2.0 * delta * gamma * kappa * lam * m * m * m - kappa * s * m * m - m;
  if (std::abs(Fm) < 1e-12)
    throw ConsistencyError("sample_overlap: dF/dm vanishes at lambda = " + fmt(lam) +
                           " (evaluation at the bulk edge)");
  const double mp = -Fl / Fm;
  const double mcp = (1.0 - gamma) / (lam * lam) + gamma * mp;
  Overlap out;
  out.value = 1.0 / (beta * lam * mcp);
  if (out.value < 0.0 || out.value > 1.0) {
    const double excess = out.value < 0.0 ? -out.value : out.value - 1.0;
    if (excess > kClampTol)
      throw ConsistencyError("sample_overlap: value " + fmt(out.value) + " outside [0, 1]");
    out.value = std::clamp(out.value, 0.0, 1.0);
    out.clamped = true;
  }
  return out;
}

double total_alignment(double rho, double delta, double gamma, double kappa) {
  const auto pop = population_spike(rho, delta, kappa);
  if (!pop.beta_out) return 0.0;
  const auto lam = sample_spike(*pop.beta_out, delta, gamma, kappa);
  if (!lam) return 0.0;
  return sample_overlap(*pop.beta_out, *lam, delta, gamma, kappa).value * pop.pop_overlap;
}

Thresholds thresholds(const PoolScalars& s, double delta, double gamma) {
  if (!(s.alpha > 0.0)) throw ValidationError("thresholds: alpha must be > 0");
  if (!(delta > 0.0)) throw ValidationError("thresholds: delta must be > 0");
  const double kappa = s.kappa;
  Thresholds t;
  t.rho_pop = delta + std::sqrt(delta);
  t.mu_pop = std::sqrt(kappa * t.rho_pop / s.alpha);
  t.beta_crit = edge_stieltjes(BulkParams{delta, gamma, kappa}).beta_crit;

  const auto roots = poly::quadratic(kappa, kappa * (1.0 - delta) - t.beta_crit, t.beta_crit * delta);
  double best = -1.0;
  for (const auto& r : roots)
    if (!std::isnan(r.real()) && std::abs(r.imag()) <= 1e-12 * std::abs(r) && r.real() > best) best = r.real();
  if (!(best > t.rho_pop))
    throw ConsistencyError("thresholds: no root of the sample-threshold quadratic exceeds delta + sqrt(delta) (beta_crit = " +
                           fmt(t.beta_crit) + ")");
  t.rho_samp = best;
  t.mu_samp = std::sqrt(kappa * t.rho_samp / s.alpha);
  return t;
}

Thresholds thresholds(const PoolWeights& w, const CorrelationModel& R, double delta, double gamma) {
  return thresholds(pool_scalars(w, R, 0.0), delta, gamma);
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::SubcriticalPop: return "subcritical_pop";
    case Regime::SubcriticalSample: return "subcritical_sample";
    case Regime::Supercritical: return "supercritical";
  }
  return "subcritical_pop";
}

SpikeReport spike_report(const PoolScalars& s, double delta, double gamma) {
  SpikeReport r;
  r.rho = s.rho;
  const Thresholds t = thresholds(s, delta, gamma);
  r.mu_pop = t.mu_pop;
  r.mu_samp = t.mu_samp;
  r.beta_crit = t.beta_crit;
  const auto pop = population_spike(s.rho, delta, s.kappa);
  r.beta_out = pop.beta_out;
  r.pop_overlap = pop.pop_overlap;
  if (!pop.beta_out) {
    r.regime = Regime::SubcriticalPop;
    return r;
  }
  r.lambda_out = sample_spike(*pop.beta_out, delta, gamma, s.kappa);
  if (!r.lambda_out) {
    r.regime = Regime::SubcriticalSample;
    return r;
  }
  const Overlap ov = sample_overlap(*pop.beta_out, *r.lambda_out, delta, gamma, s.kappa);
  r.sample_overlap = ov.value;
  r.clamped = ov.clamped;
  r.total_alignment = r.sample_overlap * r.pop_overlap;
  r.regime = Regime::Supercritical;
  return r;
}

nlohmann::json to_json(const SpikeReport& r) {
  nlohmann::json j;
  j["rho"] = r.rho;
  j["beta_out"] = r.beta_out ? nlohmann::json(*r.beta_out) : nlohmann::json(nullptr);
  j["pop_overlap"] = r.pop_overlap;
  j["beta_crit"] = r.beta_crit;
  j["lambda_out"] = r.lambda_out ? nlohmann::json(*r.lambda_out) : nlohmann::json(nullptr);
  j["sample_overlap"] = r.sample_overlap;
  j["total_alignment"] = r.total_alignment;
  j["mu_pop"] = r.mu_pop;
  j["mu_samp"] = r.mu_samp;
  j["regime"] = std::string(to_string(r.regime));
  j["clamped"] = r.clamped;
  return j;
}

}  // namespace attnspec
