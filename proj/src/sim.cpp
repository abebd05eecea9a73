#include "attnspec/sim.hpp"

#include "attnspec/errors.hpp"
#include "attnspec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>

namespace attnspec {

namespace {

// Factor F with F F^T = A for a symmetric PSD A (negative eigenvalues clipped).
Mat psd_factor(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  const Vec root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

Mat copula_factor(const Mat& R) {
  const auto T = R.rows();
  Mat G(T, T);
  for (Eigen::Index i = 0; i < T; ++i)
    for (Eigen::Index j = 0; j < T; ++j) G(i, j) = std::clamp(std::sin(0.5 * std::numbers::pi * R(i, j)), -1.0, 1.0);
  Eigen::SelfAdjointEigenSolver<Mat> es(G);
  Mat P = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  const Vec dinv = P.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  P = dinv.asDiagonal() * P * dinv.asDiagonal();
  return psd_factor(P);
}

template <typename Matrix>
void write_matrix_csv(const std::filesystem::path& path, const Matrix& M) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot write " + path.string());
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? "," : "") << M(i, j);
    os << '\n';
  }
}

double accuracy(const Vec& scores, const Vec& y, int begin, int end) {
  if (end <= begin) return 0.0;
  int hits = 0;
  for (int n = begin; n < end; ++n) hits += ((scores(n) >= 0.0 ? 1.0 : -1.0) == y(n));
  return static_cast<double>(hits) / (end - begin);
}

PoolWeights strategy_weights(Strategy s, const CorrelationModel& R) {
  switch (s) {
    case Strategy::Mean: return mean_weights(R.T());
    case Strategy::Causal: return causal_weights(R.T());
    case Strategy::Optimal: return optimal_weights(R);
    case Strategy::Learned: break;
  }
  throw ValidationError("learned weights have no closed form");
}

// Ridge fit on the first n_train columns at every mu of the grid; the noise part of
// C is shared, so only the first row and column of the Gram matrix move with mu.
class RidgeSweep {
 public:
  RidgeSweep(const Dataset& data, const Vec& w, int n_train, double lambda)
      : C0_(data.pool_noise(w)), a_(data.signal_coefficients(w)), y_(data.y), n_train_(n_train), lambda_(lambda) {
    const auto Ct = C0_.leftCols(n_train);
    G0_ = Mat::Zero(C0_.rows(), C0_.rows());
    G0_.selfadjointView<Eigen::Lower>().rankUpdate(Ct);
    G0_ = G0_.selfadjointView<Eigen::Lower>();
    u_ = Ct * a_.head(n_train);
    aa_ = a_.head(n_train).squaredNorm();
    h0_ = Ct * y_.head(n_train);
    ay_ = a_.head(n_train).dot(y_.head(n_train));
  }

  Accuracy at(double mu) const {
    Mat G = G0_;
    G.col(0) += mu * u_;
    G.row(0) += mu * u_.transpose();
    G(0, 0) += mu * mu * aa_;
    G.diagonal().array() += lambda_ * n_train_;
    Vec h = h0_;
    h(0) += mu * ay_;
    const Vec beta = G.llt().solve(h);
    const Vec scores = C0_.transpose() * beta + (mu * beta(0)) * a_;
    return {accuracy(scores, y_, 0, n_train_), accuracy(scores, y_, n_train_, static_cast<int>(y_.size()))};
  }

 private:
  Mat C0_;
  Vec a_, y_;
  int n_train_;
  double lambda_;
  Mat G0_;
  Vec u_, h0_;
  double aa_ = 0.0, ay_ = 0.0;
};

}  // namespace

std::string_view to_string(NoiseKind k) { return k == NoiseKind::Gaussian ? "gaussian" : "rademacher"; }
std::string_view to_string(XiMode m) { return m == XiMode::Binary ? "binary" : "gaussian_factor"; }
std::string_view to_string(TableNoise t) { return t == TableNoise::Centered ? "centered" : "iid"; }

NoiseKind noise_kind_from_string(std::string_view s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "rademacher") return NoiseKind::Rademacher;
  throw ValidationError("noise_kind must be gaussian or rademacher, got '" + std::string(s) + "'");
}

XiMode xi_mode_from_string(std::string_view s) {
  if (s == "binary") return XiMode::Binary;
  if (s == "gaussian_factor") return XiMode::GaussianFactor;
  throw ValidationError("xi_mode must be binary or gaussian_factor, got '" + std::string(s) + "'");
}

TableNoise table_noise_from_string(std::string_view s) {
  if (s == "centered") return TableNoise::Centered;
  if (s == "iid") return TableNoise::Iid;
  throw ValidationError("table_noise must be centered or iid, got '" + std::string(s) + "'");
}

Pooling Pooling::fixed(PoolWeights w) {
  Pooling p;
  p.weights = std::move(w);
  return p;
}

Pooling Pooling::empirical(int T, double tau) {
  Pooling p;
  p.weights = causal_weights(T);
  p.empirical_causal = true;
  p.tau = tau;
  return p;
}

void SimConfig::validate() const {
  if (!dims.is_finite()) throw ValidationError("sim: dims must carry d, V and N");
  if (*dims.V % 2 != 0) throw ValidationError("sim: V must be even");
  if (R.T() != dims.T)
    throw ValidationError("sim: R has dimension " + std::to_string(R.T()) + " but T = " + std::to_string(dims.T));
  if (pooling.weights.T() != dims.T) throw ValidationError("sim: pooling weights must have length T");
  if (pooling.empirical_causal && !(pooling.tau >= 0.0)) throw ValidationError("sim: tau must be >= 0");
  if (trials < 1) throw ValidationError("sim: trials must be >= 1");
  if (label_prefix < 0 || label_prefix > dims.T) throw ValidationError("sim: label_prefix must be in [0, T]");
  if (xi_mode == XiMode::Binary && !R.sign_realizable())
    throw ValidationError(
        "sim: R is not the second-moment matrix of any +-1 vector (diagonal != 1 or |off-diagonal| > 1); "
        "use xi_mode = gaussian_factor");
}

nlohmann::json SimConfig::to_json() const {
  nlohmann::json j;
  j["d"] = *dims.d;
  j["V"] = *dims.V;
  j["N"] = *dims.N;
  j["T"] = dims.T;
  j["mu_norm"] = dims.mu_norm;
  j["delta"] = dims.delta;
  j["gamma"] = dims.gamma;
  nlohmann::json r;
  r["kind"] = std::string(attnspec::to_string(R.kind()));
  if (R.kind() == CorrelationKind::Prefix) r["L"] = R.prefix_length();
  if (R.kind() == CorrelationKind::Spiked) {
    r["theta"] = R.spike_theta();
    r["u"] = std::vector<double>(R.spike_direction().data(), R.spike_direction().data() + R.T());
  }
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < R.T(); ++i) {
    std::vector<double> row(R.T());
    for (int k = 0; k < R.T(); ++k) row[k] = R.matrix()(i, k);
    rows.push_back(row);
  }
  r["matrix"] = rows;
  j["R"] = r;
  nlohmann::json p;
  if (pooling.empirical_causal) {
    p["kind"] = "empirical_causal";
    p["tau"] = pooling.tau;
  } else {
    p["kind"] = std::string(attnspec::to_string(pooling.weights.label));
    p["w"] = std::vector<double>(pooling.weights.w.data(), pooling.weights.w.data() + pooling.weights.T());
  }
  j["pooling"] = p;
  j["noise_kind"] = std::string(attnspec::to_string(noise));
  j["xi_mode"] = std::string(attnspec::to_string(xi_mode));
  j["table_noise"] = std::string(attnspec::to_string(table_noise));
  j["seed"] = seed;
  j["trials"] = trials;
  j["label_prefix"] = label_prefix;
  j["threads"] = threads;
  return j;
}

Vec Dataset::token_embedding(int n, int t) const {
  const int x = tokens(n, t);
  Vec v = E.col(x);
  if (gaussian_factor) v(0) += mu_norm * (xi(n, t) - signs(x));
  return v;
}

Mat Dataset::pool_noise(const Vec& w) const {
  const int n_seq = N(), len = T();
  Mat C = Mat::Zero(d(), n_seq);
  for (int n = 0; n < n_seq; ++n) {
    double sign_mass = 0.0;
    for (int t = 0; t < len; ++t) {
      if (w(t) == 0.0) continue;
      const int x = tokens(n, t);
      C.col(n) += w(t) * E.col(x);
      sign_mass += w(t) * signs(x);
    }
    C(0, n) -= mu_norm * sign_mass;
  }
  return C;
}

Vec Dataset::signal_coefficients(const Vec& w) const { return xi * w; }

Mat Dataset::pool(const Vec& w) const {
  Mat C = pool_noise(w);
  C.row(0) += mu_norm * signal_coefficients(w).transpose();
  return C;
}

Vec prefix_labels(const Mat& xi, int L) {
  Vec y(xi.rows());
  for (Eigen::Index n = 0; n < xi.rows(); ++n) y(n) = xi.row(n).head(L).sum() >= 0.0 ? 1.0 : -1.0;
  return y;
}

Dataset generate(const SimConfig& config, int trial) {
  config.validate();
  const int d = static_cast<int>(*config.dims.d);
  const int V = static_cast<int>(*config.dims.V);
  const int N = static_cast<int>(*config.dims.N);
  const int T = config.dims.T;
  const double mu = config.dims.mu_norm;
  const int half = V / 2;

  Dataset data;
  data.mu_norm = mu;
  data.gaussian_factor = config.xi_mode == XiMode::GaussianFactor;
  data.signs.resize(V);
  data.signs.head(half).setConstant(1);
  data.signs.tail(V - half).setConstant(-1);

  auto noise_rng = substream(config.seed, trial, kNoise);
  data.E.resize(d, V);
  if (config.noise == NoiseKind::Gaussian) {
    std::normal_distribution<double> normal;
    for (int v = 0; v < V; ++v)
      for (int i = 0; i < d; ++i) data.E(i, v) = normal(noise_rng);
  } else {
    for (int v = 0; v < V; ++v)
      for (int i = 0; i < d; ++i) data.E(i, v) = (noise_rng() >> 63) ? 1.0 : -1.0;
  }
  if (config.table_noise == TableNoise::Centered) {
    const Vec pos = data.E.leftCols(half).rowwise().mean();
    const Vec neg = data.E.rightCols(V - half).rowwise().mean();
    data.E.leftCols(half).colwise() -= pos;
    data.E.rightCols(V - half).colwise() -= neg;
  }
  data.E.row(0) += mu * data.signs.cast<double>().transpose();

  auto sign_rng = substream(config.seed, trial, kSigns);
  data.xi.resize(N, T);
  const Mat& R = config.R.matrix();
  if (config.xi_mode == XiMode::Binary && config.R.kind() == CorrelationKind::Prefix) {
    const int L = config.R.prefix_length();
    for (int n = 0; n < N; ++n) {
      const double shared = (sign_rng() >> 63) ? 1.0 : -1.0;
      for (int t = 0; t < T; ++t) data.xi(n, t) = t < L ? shared : ((sign_rng() >> 63) ? 1.0 : -1.0);
    }
  } else {
    const Mat F = config.xi_mode == XiMode::Binary ? copula_factor(R) : psd_factor(R);
    std::normal_distribution<double> normal;
    Mat G(N, T);
    for (int n = 0; n < N; ++n)
      for (int t = 0; t < T; ++t) G(n, t) = normal(sign_rng);
    data.xi = G * F.transpose();
    if (config.xi_mode == XiMode::Binary) data.xi = data.xi.unaryExpr([](double g) { return g >= 0.0 ? 1.0 : -1.0; });
  }

  auto token_rng = substream(config.seed, trial, kTokens);
  data.tokens.resize(N, T);
  for (int n = 0; n < N; ++n)
    for (int t = 0; t < T; ++t) {
      if (data.gaussian_factor) {
        data.tokens(n, t) = static_cast<int>(std::uniform_int_distribution<int>(0, V - 1)(token_rng));
      } else {
        const int k = std::uniform_int_distribution<int>(0, half - 1)(token_rng);
        data.tokens(n, t) = data.xi(n, t) > 0.0 ? k : half + k;
      }
    }

  const int L = config.label_prefix > 0
                    ? config.label_prefix
                    : (config.R.kind() == CorrelationKind::Prefix ? config.R.prefix_length() : 0);
  if (L > 0) data.y = prefix_labels(data.xi, L);

  if (config.pooling.empirical_causal) {
    data.w_att = empirical_causal_attention(data, config.pooling.tau).w_att;
    data.C.resize(d, N);
    for (int n = 0; n < N; ++n) {
      data.C.col(n).setZero();
      for (int t = 0; t < T; ++t) data.C.col(n) += data.w_att(n, t) * data.token_embedding(n, t);
    }
  } else {
    data.C = data.pool(config.pooling.weights.w);
  }
  return data;
}

EmpiricalSpectrum empirical_spectrum(const Mat& C, const Vec& u) {
  const auto d = C.rows();
  Mat S = Mat::Zero(d, d);
  S.selfadjointView<Eigen::Lower>().rankUpdate(C, 1.0 / static_cast<double>(C.cols()));
  S = S.selfadjointView<Eigen::Lower>();
  EmpiricalSpectrum out;
  out.eigenvalues = eigenvalues_desc(S);
  out.top_gap = d > 1 ? out.eigenvalues(0) - out.eigenvalues(1) : 0.0;
  const Vec v = top_eigenvector(S, out.eigenvalues(0));
  const double c = v.dot(u) / u.norm();
  out.top_vector_alignment = std::min(1.0, c * c);
  return out;
}

EmpiricalSpectrum empirical_spectrum(const Dataset& data, const Vec& u) { return empirical_spectrum(data.C, u); }

std::vector<TopPair> top_pair_mu_sweep(const Dataset& data, const Vec& w, const std::vector<double>& mu_grid) {
  const Mat C0 = data.pool_noise(w);
  const Vec a = data.signal_coefficients(w);
  const int d = data.d();
  const double inv_n = 1.0 / data.N();
  const auto rest = C0.bottomRows(d - 1);
  Mat B = Mat::Zero(d - 1, d - 1);
  B.selfadjointView<Eigen::Lower>().rankUpdate(rest, inv_n);
  B = B.selfadjointView<Eigen::Lower>();
  const ArrowheadTop arrow(B);
  const Vec c = C0.row(0).transpose();
  const Vec p = arrow.rotate(inv_n * (rest * c));
  const Vec q = arrow.rotate(inv_n * (rest * a));
  std::vector<TopPair> out;
  out.reserve(mu_grid.size());
  for (double mu : mu_grid) out.push_back(arrow.solve_rotated(inv_n * (c + mu * a).squaredNorm(), p + mu * q));
  return out;
}

bool is_outlier(double lambda1, double edge_right, int d) {
  return lambda1 > edge_right * (1.0 + 5.0 * std::pow(static_cast<double>(d), -2.0 / 3.0));
}

Mat causal_attention_matrix(const Mat& X, double tau) {
  const auto T = X.cols();
  const double scale = tau / static_cast<double>(X.rows());
  const Mat G = scale * (X.transpose() * X);
  Mat A = Mat::Zero(T, T);
  A(0, 0) = 1.0;
  for (Eigen::Index t = 1; t < T; ++t) {
    const double top = G.row(t).head(t).maxCoeff();
    double total = 0.0;
    for (Eigen::Index s = 0; s < t; ++s) {
      A(t, s) = std::exp(G(t, s) - top);
      total += A(t, s);
    }
    A.row(t).head(t) /= total;
  }
  return A;
}

AttentionResult empirical_causal_attention(const Dataset& data, double tau) {
  if (!(tau >= 0.0)) throw ValidationError("attention: tau must be >= 0");
  const int N = data.N(), T = data.T(), d = data.d();
  const Vec w0 = causal_weights(T).w;
  AttentionResult out;
  out.w_att.resize(N, T);
  Mat X(d, T);
  double total = 0.0;
  for (int n = 0; n < N; ++n) {
    for (int t = 0; t < T; ++t) X.col(t) = data.token_embedding(n, t);
    const Mat A = causal_attention_matrix(X, tau);
    out.w_att.row(n) = A.colwise().sum() / static_cast<double>(T);
    total += (out.w_att.row(n).transpose() - w0).norm();
  }
  out.deviation = total / N;
  return out;
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Mean: return "mean";
    case Strategy::Causal: return "causal";
    case Strategy::Optimal: return "optimal";
    case Strategy::Learned: return "learned";
  }
  return "mean";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "mean") return Strategy::Mean;
  if (s == "causal") return Strategy::Causal;
  if (s == "optimal") return Strategy::Optimal;
  if (s == "learned") return Strategy::Learned;
  throw ValidationError("strategy must be one of mean, causal, optimal, learned; got '" + std::string(s) + "'");
}

Vec softmax(const Vec& phi) {
  const Vec e = (phi.array() - phi.maxCoeff()).exp();
  return e / e.sum();
}

std::size_t JointL2::idx(int t, int s) const {
  if (t > s) std::swap(t, s);
  return static_cast<std::size_t>(t) * T_ - static_cast<std::size_t>(t) * (t - 1) / 2 + (s - t);
}

JointL2::JointL2(const Dataset& data, int n_train, double lambda) : T_(data.T()), d_(data.d()), n_(n_train), lambda_(lambda) {
  if (data.y.size() == 0) throw ValidationError("joint L2: labels are undefined for this correlation model");
  if (n_train < 1 || n_train > data.N()) throw ValidationError("joint L2: bad training size");
  const Vec y = data.y.head(n_);
  yy_ = y.squaredNorm();
  std::vector<Mat> P(T_);
  std::vector<Vec> a(T_);
  for (int t = 0; t < T_; ++t) {
    Vec e = Vec::Zero(T_);
    e(t) = 1.0;
    P[t] = data.pool_noise(e).leftCols(n_);
    a[t] = data.xi.col(t).head(n_);
  }
  base_.resize(static_cast<std::size_t>(T_) * (T_ + 1) / 2);
  for (int t = 0; t < T_; ++t)
    for (int s = t; s < T_; ++s) base_[idx(t, s)] = P[t] * P[s].transpose();
  cross_.resize(static_cast<std::size_t>(T_) * T_);
  aa_.resize(T_, T_);
  h0_.resize(T_);
  ay_.resize(T_);
  for (int t = 0; t < T_; ++t) {
    for (int s = 0; s < T_; ++s) {
      cross_[static_cast<std::size_t>(t) * T_ + s] = P[t] * a[s];
      aa_(t, s) = a[t].dot(a[s]);
    }
    h0_[t] = P[t] * y;
    ay_(t) = a[t].dot(y);
  }
  set_mu(data.mu_norm);
}

void JointL2::set_mu(double mu) {
  mu_ = mu;
  blocks_ = base_;
  for (int t = 0; t < T_; ++t)
    for (int s = t; s < T_; ++s) {
      Mat& G = blocks_[idx(t, s)];
      G.col(0) += mu * cross_[static_cast<std::size_t>(t) * T_ + s];
      G.row(0) += mu * cross_[static_cast<std::size_t>(s) * T_ + t].transpose();
      G(0, 0) += mu * mu * aa_(t, s);
    }
  h_ = h0_;
  for (int t = 0; t < T_; ++t) h_[t](0) += mu * ay_(t);
}

Mat JointL2::gram(const Vec& w) const {
  Mat diag = Mat::Zero(d_, d_);
  Mat off = Mat::Zero(d_, d_);
  for (int t = 0; t < T_; ++t) {
    diag += (w(t) * w(t)) * blocks_[idx(t, t)];
    for (int s = t + 1; s < T_; ++s) off += (w(t) * w(s)) * blocks_[idx(t, s)];
  }
  return diag + off + off.transpose();
}

Vec JointL2::beta(const Vec& w) const {
  Mat M = gram(w);
  M.diagonal().array() += lambda_ * n_;
  Vec h = Vec::Zero(d_);
  for (int t = 0; t < T_; ++t) h += w(t) * h_[t];
  return M.llt().solve(h);
}

double JointL2::loss(const Vec& phi, Vec* grad) const {
  const Vec w = softmax(phi);
  Mat M = gram(w);
  Vec h = Vec::Zero(d_);
  for (int t = 0; t < T_; ++t) h += w(t) * h_[t];
  Mat A = M;
  A.diagonal().array() += lambda_ * n_;
  const Vec b = A.llt().solve(h);
  const double resid = yy_ - 2.0 * b.dot(h) + b.dot(M * b);
  const double g = resid / n_ + lambda_ * b.squaredNorm();
  if (grad) {
    Mat q(T_, T_);
    for (int t = 0; t < T_; ++t)
      for (int s = t; s < T_; ++s) q(t, s) = q(s, t) = b.dot(blocks_[idx(t, s)] * b);
    Vec gw(T_);
    for (int t = 0; t < T_; ++t) gw(t) = -2.0 / n_ * (b.dot(h_[t]) - q.row(t).dot(w));
    *grad = (w.array() * (gw.array() - gw.dot(w))).matrix();
  }
  return g;
}

LearnResult learn_weights(const JointL2& problem, int T, std::uint64_t seed, int trial, const ClassifyOptions& opt) {
  auto rng = substream(seed, trial, kRestarts);
  std::normal_distribution<double> normal;
  LearnResult best;
  best.loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r <= opt.restarts; ++r) {
    Vec phi = Vec::Zero(T);
    if (r > 0)
      for (int t = 0; t < T; ++t) phi(t) = normal(rng);
    Vec grad;
    double g = problem.loss(phi, &grad);
    // BFGS on the inverse Hessian with Armijo backtracking.
    Mat H = Mat::Identity(T, T);
    for (int it = 0; it < opt.iters; ++it) {
      if (grad.lpNorm<Eigen::Infinity>() <= 1e-7 * (1.0 + std::abs(g))) break;
      Vec dir = -H * grad;
      double slope = grad.dot(dir);
      if (!(slope < 0.0)) {
        H.setIdentity();
        dir = -grad;
        slope = -grad.squaredNorm();
      }
      double step = 1.0;
      Vec next_phi, next_grad;
      double next_g = g;
      bool moved = false;
      while (step > 1e-14) {
        next_phi = phi + step * dir;
        next_g = problem.loss(next_phi, &next_grad);
        if (next_g <= g + 1e-4 * step * slope) {
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
      const Vec s = next_phi - phi;
      const Vec yv = next_grad - grad;
      const double sy = s.dot(yv);
      const double drop = g - next_g;
      phi = next_phi;
      grad = next_grad;
      g = next_g;
      if (sy > 1e-12 * s.norm() * yv.norm()) {
        const double rho = 1.0 / sy;
        const Mat I = Mat::Identity(T, T);
        H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
      }
      if (drop <= 1e-8 * (1.0 + std::abs(g))) break;
    }
    if (g < best.loss) {
      best.loss = g;
      best.w = softmax(phi);
    }
  }
  return best;
}

std::vector<std::vector<Accuracy>> classify_sweep(const SimConfig& config, int trial,
                                                  const std::vector<Strategy>& strategies,
                                                  const std::vector<double>& mu_grid, const ClassifyOptions& opt) {
  if (!(opt.split > 0.0 && opt.split < 1.0)) throw ValidationError("classify: split must lie in (0, 1)");
  if (!(opt.lambda > 0.0)) throw ValidationError("classify: lambda must be > 0");
  const Dataset data = generate(config, trial);
  if (data.y.size() == 0)
    throw ValidationError("classify: labels need a prefix correlation model or label_prefix > 0");
  const int N = data.N();
  const int n_train = static_cast<int>(std::floor(opt.split * N));
  if (n_train < 1 || n_train >= N) throw ValidationError("classify: split leaves an empty train or test set");

  std::vector<std::vector<Accuracy>> out(mu_grid.size(), std::vector<Accuracy>(strategies.size()));
  for (std::size_t k = 0; k < strategies.size(); ++k) {
    if (strategies[k] == Strategy::Learned) {
      JointL2 problem(data, n_train, opt.lambda);
      for (std::size_t m = 0; m < mu_grid.size(); ++m) {
        problem.set_mu(mu_grid[m]);
        const LearnResult lr = learn_weights(problem, data.T(), config.seed, trial, opt);
        out[m][k] = RidgeSweep(data, lr.w, n_train, opt.lambda).at(mu_grid[m]);
      }
    } else {
      const RidgeSweep sweep(data, strategy_weights(strategies[k], config.R).w, n_train, opt.lambda);
      for (std::size_t m = 0; m < mu_grid.size(); ++m) out[m][k] = sweep.at(mu_grid[m]);
    }
  }
  return out;
}

Accuracy classify(const SimConfig& config, int trial, Strategy strategy, const ClassifyOptions& opt) {
  return classify_sweep(config, trial, {strategy}, {config.dims.mu_norm}, opt)[0][0];
}

void dump_dataset(const Dataset& data, const SimConfig& config, int trial, const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  fs::create_directories(root);
  write_matrix_csv(root / "E.csv", data.E);
  write_matrix_csv(root / "xi.csv", data.xi);
  write_matrix_csv(root / "tokens.csv", data.tokens);
  write_matrix_csv(root / "C.csv", data.C);
  if (data.y.size() > 0) write_matrix_csv(root / "y.csv", data.y);
  nlohmann::json m;
  m["config"] = config.to_json();
  m["trial"] = trial;
  std::ofstream os(root / "manifest.json");
  os << m.dump(2) << '\n';
}

}  // namespace attnspec
