#pragma once

#include "attnspec/linalg.hpp"
#include "attnspec/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attnspec {

enum class NoiseKind { Gaussian, Rademacher };
enum class XiMode { Binary, GaussianFactor };
/// Centered: each z_v has its class mean removed, so both class means of the
/// noise table are exactly zero. Iid: raw draws.
enum class TableNoise { Centered, Iid };

std::string_view to_string(NoiseKind k);
std::string_view to_string(XiMode m);
std::string_view to_string(TableNoise t);
NoiseKind noise_kind_from_string(std::string_view s);
XiMode xi_mode_from_string(std::string_view s);
TableNoise table_noise_from_string(std::string_view s);

struct Pooling {
  PoolWeights weights;
  bool empirical_causal = false;  // per-sequence softmax attention weights
  double tau = 1.0;

  static Pooling fixed(PoolWeights w);
  static Pooling empirical(int T, double tau);
};

struct SimConfig {
  ModelDims dims;
  CorrelationModel R;
  Pooling pooling;
  NoiseKind noise = NoiseKind::Gaussian;
  XiMode xi_mode = XiMode::Binary;
  TableNoise table_noise = TableNoise::Centered;
  std::uint64_t seed = 0;
  int trials = 1;
  int label_prefix = 0;  // 0: prefix length of R when R is a prefix model
  int threads = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

struct Dataset {
  Mat E;                   // d x V, column v = s_v mu + z_v
  Eigen::VectorXi signs;   // +1 on the first V/2 entries, -1 on the rest
  Mat xi;                  // N x T
  Eigen::MatrixXi tokens;  // N x T
  Mat C;                   // d x N pooled columns
  Vec y;                   // labels, empty when undefined
  Mat w_att;               // N x T, only for empirical attention pooling
  double mu_norm = 0.0;
  bool gaussian_factor = false;

  int d() const { return static_cast<int>(E.rows()); }
  int N() const { return static_cast<int>(xi.rows()); }
  int T() const { return static_cast<int>(xi.cols()); }

  /// X_t^(n): the embedded token, with the signal carried by xi in gaussian_factor mode.
  Vec token_embedding(int n, int t) const;
  /// Noise part sum_t w_t z_{x_{n,t}} of the pooled columns.
  Mat pool_noise(const Vec& w) const;
  /// a_n = sum_t w_t xi_{n,t}; the pooled column is pool_noise + mu a_n e_1.
  Vec signal_coefficients(const Vec& w) const;
  Mat pool(const Vec& w) const;
};

/// Deterministic in (config.seed, trial).
Dataset generate(const SimConfig& config, int trial);

/// y_n = sign(sum of the first L entries of xi_n), ties to +1.
Vec prefix_labels(const Mat& xi, int L);

struct EmpiricalSpectrum {
  Vec eigenvalues;  // descending
  double top_vector_alignment = 0.0;
  double top_gap = 0.0;
};

EmpiricalSpectrum empirical_spectrum(const Mat& C, const Vec& u);
EmpiricalSpectrum empirical_spectrum(const Dataset& data, const Vec& u);

/// Top eigenvalue and alignment with e_1 of S(mu) for every mu in the grid, reusing
/// the noise draw of `data` with pooling weights w.
std::vector<TopPair> top_pair_mu_sweep(const Dataset& data, const Vec& w, const std::vector<double>& mu_grid);

/// lambda1 > edge (1 + 5 d^(-2/3)).
bool is_outlier(double lambda1, double edge_right, int d);

/// Row-stochastic causal attention matrix of one sequence X (d x T).
Mat causal_attention_matrix(const Mat& X, double tau);

struct AttentionResult {
  Mat w_att;  // N x T
  double deviation = 0.0;
};

AttentionResult empirical_causal_attention(const Dataset& data, double tau);

enum class Strategy { Mean, Causal, Optimal, Learned };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct ClassifyOptions {
  double lambda = 1.0;
  double split = 0.8;
  int restarts = 5;
  int iters = 200;
};

struct Accuracy {
  double train = 0.0;
  double test = 0.0;
};

Vec softmax(const Vec& phi);

/// Training objective of the joint L2 problem with beta eliminated in closed form.
class JointL2 {
 public:
  JointL2(const Dataset& data, int n_train, double lambda);

  void set_mu(double mu);
  /// g(softmax(phi)); fills grad (w.r.t. phi) when non-null.
  double loss(const Vec& phi, Vec* grad = nullptr) const;
  Vec beta(const Vec& w) const;

 private:
  Mat gram(const Vec& w) const;

  int T_ = 0, d_ = 0, n_ = 0;
  double lambda_ = 0.0, mu_ = 0.0, yy_ = 0.0;
  std::vector<Mat> base_;      // G_ts at mu = 0, packed upper triangle
  std::vector<Vec> cross_;     // P_t a_s at mu = 0, all (t, s)
  Mat aa_;                     // a_t . a_s
  std::vector<Vec> h0_;        // P_t y
  Vec ay_;                     // a_t . y
  std::vector<Mat> blocks_;    // G_ts at the current mu
  std::vector<Vec> h_;
  std::size_t idx(int t, int s) const;
};

struct LearnResult {
  Vec w;
  double loss = 0.0;
};

LearnResult learn_weights(const JointL2& problem, int T, std::uint64_t seed, int trial, const ClassifyOptions& opt);

/// Accuracies indexed [mu][strategy], one dataset draw shared by all cells.
std::vector<std::vector<Accuracy>> classify_sweep(const SimConfig& config, int trial,
                                                  const std::vector<Strategy>& strategies,
                                                  const std::vector<double>& mu_grid, const ClassifyOptions& opt);

Accuracy classify(const SimConfig& config, int trial, Strategy strategy, const ClassifyOptions& opt);

/// Writes E, xi, tokens, C (and y) as CSV plus manifest.json into dir.
void dump_dataset(const Dataset& data, const SimConfig& config, int trial, const std::string& dir);

}  // namespace attnspec
