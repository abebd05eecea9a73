#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace attnspec {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Asymptotic-regime parameters. Finite instances carry (d, V, N); purely
// asymptotic ones only (delta, gamma, mu_norm, T).
struct ModelDims {
  std::optional<std::int64_t> d;
  std::optional<std::int64_t> V;
  std::optional<std::int64_t> N;
  int T = 1;
  double mu_norm = 0.0;
  double delta = 0.0;
  double gamma = 0.0;

  static ModelDims finite(std::int64_t d, std::int64_t V, std::int64_t N, int T, double mu_norm);
  static ModelDims asymptotic(double delta, double gamma, double mu_norm, int T);

  bool is_finite() const { return d.has_value(); }
};

enum class CorrelationKind { Prefix, Spiked, Custom };

std::string_view to_string(CorrelationKind kind);

/// Positional correlation matrix R together with the recipe that built it.
class CorrelationModel {
 public:
  /// block-diag(1_L 1_L^T, I_{T-L}).
  static CorrelationModel prefix(int L, int T);
  /// I_T + theta * u u^T; u is normalized internally and must be nonzero.
  static CorrelationModel spiked(double theta, const Vec& u);
  /// Symmetric PSD matrix, validated to 1e-12 symmetry and a -1e-10 eigenvalue floor.
  static CorrelationModel custom(const Mat& R);

  CorrelationKind kind() const { return kind_; }
  int T() const { return static_cast<int>(matrix_.rows()); }
  const Mat& matrix() const { return matrix_; }

  int prefix_length() const { return prefix_L_; }  // 0 unless kind == Prefix
  double spike_theta() const { return theta_; }
  const Vec& spike_direction() const { return u_; }

  /// True when R can be the second-moment matrix of a +-1 vector:
  /// unit diagonal and off-diagonal entries in [-1, 1].
  bool sign_realizable() const;

 private:
  CorrelationKind kind_ = CorrelationKind::Custom;
  Mat matrix_;
  int prefix_L_ = 0;
  double theta_ = 0.0;
  Vec u_;
};

/// The realized T x T matrix (already materialized at construction).
const Mat& correlation_matrix(const CorrelationModel& model);

enum class WeightLabel { Mean, Causal, Optimal, Custom };

std::string_view to_string(WeightLabel label);
WeightLabel weight_label_from_string(std::string_view s);

struct PoolWeights {
  Vec w;
  WeightLabel label = WeightLabel::Custom;

  /// Builds custom weights; throws unless sum(w) = 1 to 1e-12.
  static PoolWeights custom(const Vec& w);
  int T() const { return static_cast<int>(w.size()); }
};

struct PoolScalars {
  double alpha = 0.0;  // w^T R w
  double kappa = 0.0;  // ||w||^2
  double rho = 0.0;    // snr * mu_norm^2
  double snr = 0.0;    // alpha / kappa
};

PoolScalars pool_scalars(const PoolWeights& w, const CorrelationModel& R, double mu_norm);

PoolWeights mean_weights(int T);

/// Limit of parameter-free causal self-attention: row t >= 2 attends uniformly to
/// keys 1..t-1, row 1 to itself, and the rows are averaged.
PoolWeights causal_weights(int T);

/// Closed-form kappa and alpha of the causal weights on Prefix(L, T).
PoolScalars causal_scalars_closed_form(int T, int L, double mu_norm = 0.0);

/// Normalized top eigenvector of R, the maximizer of alpha/kappa under sum(w) = 1.
/// A degenerate top eigenspace is resolved by projecting 1 onto it.
/// Throws UnattainableError (carrying lambda_max) when 1 is orthogonal to it.
PoolWeights optimal_weights(const CorrelationModel& R);

double lambda_max(const CorrelationModel& R);

/// H_n = sum_{k<=n} 1/k with compensated summation; H_0 = 0.
double harmonic(int n);

// Plain-text round trip: "# T=<int> kind=<string>" then comma-separated rows.
void write_correlation_csv(std::ostream& os, const CorrelationModel& R);
CorrelationModel read_correlation_csv(std::istream& is);
void write_weights_csv(std::ostream& os, const PoolWeights& w);
PoolWeights read_weights_csv(std::istream& is);

}  // namespace attnspec
