#include "attnspec/model.hpp"

#include "attnspec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace attnspec {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdFloor = -1e-10;
constexpr double kSumTol = 1e-12;

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

void validate_symmetric_psd(const Mat& R) {
  if (R.rows() != R.cols() || R.rows() == 0)
    throw ValidationError("correlation matrix: must be square and nonempty");
  if (!R.allFinite()) throw ValidationError("correlation matrix: non-finite entry");
  const double asym = (R - R.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol)
    throw ValidationError("correlation matrix: symmetry check failed (max |R - R^T| = " + fmt(asym) +
                          ")");
  Eigen::SelfAdjointEigenSolver<Mat> es(R, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < kPsdFloor)
    throw ValidationError("correlation matrix: PSD check failed (min eigenvalue = " + fmt(lo) + ")");
}

// Neumaier-compensated sum of 1/k for k in [lo, hi].
double reciprocal_sum(int lo, int hi) {
  long double sum = 0.0L;
  long double comp = 0.0L;
  for (int k = hi; k >= lo; --k) {
    const long double term = 1.0L / static_cast<long double>(k);
    const long double t = sum + term;
    if (std::fabs(sum) >= std::fabs(term))
      comp += (sum - t) + term;
    else
      comp += (term - t) + sum;
    sum = t;
  }
  return static_cast<double>(sum + comp);
}

}  // namespace

ModelDims ModelDims::finite(std::int64_t d, std::int64_t V, std::int64_t N, int T, double mu_norm) {
  if (d <= 0 || V <= 0 || N <= 0) throw ValidationError("dims: d, V, N must be positive");
  if (V % 2 != 0) throw ValidationError("dims: V must be even (balanced signs)");
  if (T <= 0) throw ValidationError("dims: T must be positive");
  if (!(mu_norm >= 0.0)) throw ValidationError("dims: mu_norm must be nonnegative");
  ModelDims m;
  m.d = d;
  m.V = V;
  m.N = N;
  m.T = T;
  m.mu_norm = mu_norm;
  m.delta = static_cast<double>(d) / static_cast<double>(V);
  m.gamma = static_cast<double>(d) / static_cast<double>(N);
  return m;
}

ModelDims ModelDims::asymptotic(double delta, double gamma, double mu_norm, int T) {
  if (!(delta > 0.0) || !(gamma > 0.0)) throw ValidationError("dims: delta and gamma must be positive");
  if (T <= 0) throw ValidationError("dims: T must be positive");
  if (!(mu_norm >= 0.0)) throw ValidationError("dims: mu_norm must be nonnegative");
  ModelDims m;
  m.T = T;
  m.mu_norm = mu_norm;
  m.delta = delta;
  m.gamma = gamma;
  return m;
}

std::string_view to_string(CorrelationKind kind) {
  switch (kind) {
    case CorrelationKind::Prefix: return "prefix";
    case CorrelationKind::Spiked: return "spiked";
    case CorrelationKind::Custom: return "custom";
  }
  return "custom";
}

CorrelationModel CorrelationModel::prefix(int L, int T) {
  if (T < 1) throw ValidationError("prefix: T must be >= 1");
  if (L < 1 || L > T) throw ValidationError("prefix: L must satisfy 1 <= L <= T");
  CorrelationModel m;
  m.kind_ = CorrelationKind::Prefix;
  m.prefix_L_ = L;
  m.matrix_ = Mat::Identity(T, T);
  m.matrix_.topLeftCorner(L, L).setOnes();
  return m;
}

CorrelationModel CorrelationModel::spiked(double theta, const Vec& u) {
  if (!(theta > 0.0)) throw ValidationError("spiked: theta_R must be positive");
  const double n = u.norm();
  if (u.size() == 0 || !(n > 0.0) || !std::isfinite(n))
    throw ValidationError("spiked: u_R must be a nonzero finite vector");
  CorrelationModel m;
  m.kind_ = CorrelationKind::Spiked;
  m.theta_ = theta;
  m.u_ = u / n;
  const auto T = u.size();
  m.matrix_ = Mat::Identity(T, T) + theta * m.u_ * m.u_.transpose();
  return m;
}

CorrelationModel CorrelationModel::custom(const Mat& R) {
  validate_symmetric_psd(R);
  CorrelationModel m;
  m.kind_ = CorrelationKind::Custom;
  m.matrix_ = 0.5 * (R + R.transpose());
  return m;
}

bool CorrelationModel::sign_realizable() const {
  const auto T = matrix_.rows();
  for (Eigen::Index i = 0; i < T; ++i) {
    if (std::abs(matrix_(i, i) - 1.0) > 1e-12) return false;
    for (Eigen::Index j = 0; j < T; ++j)
      if (i != j && std::abs(matrix_(i, j)) > 1.0 + 1e-12) return false;
  }
  return true;
}

const Mat& correlation_matrix(const CorrelationModel& model) { return model.matrix(); }

std::string_view to_string(WeightLabel label) {
  switch (label) {
    case WeightLabel::Mean: return "mean";
    case WeightLabel::Causal: return "causal";
    case WeightLabel::Optimal: return "optimal";
    case WeightLabel::Custom: return "custom";
  }
  return "custom";
}

WeightLabel weight_label_from_string(std::string_view s) {
  if (s == "mean") return WeightLabel::Mean;
  if (s == "causal") return WeightLabel::Causal;
  if (s == "optimal") return WeightLabel::Optimal;
  if (s == "custom") return WeightLabel::Custom;
  throw ValidationError("unknown weight label '" + std::string(s) + "'");
}

PoolWeights PoolWeights::custom(const Vec& w) {
  if (w.size() == 0 || !w.allFinite()) throw ValidationError("weights: must be a nonempty finite vector");
  const double s = w.sum();
  if (std::abs(s - 1.0) > kSumTol)
    throw ValidationError("weights: entries must sum to 1 (got " + fmt(s) + ")");
  return PoolWeights{w, WeightLabel::Custom};
}

PoolScalars pool_scalars(const PoolWeights& w, const CorrelationModel& R, double mu_norm) {
  if (w.T() != R.T())
    throw ValidationError("pool_scalars: weight length " + std::to_string(w.T()) +
                          " does not match R dimension " + std::to_string(R.T()));
  PoolScalars s;
  s.alpha = w.w.dot(R.matrix() * w.w);
  s.kappa = w.w.squaredNorm();
  s.snr = s.alpha / s.kappa;
  s.rho = s.snr * mu_norm * mu_norm;
  return s;
}

PoolWeights mean_weights(int T) {
  if (T < 1) throw ValidationError("mean_weights: T must be >= 1");
  return PoolWeights{Vec::Constant(T, 1.0 / T), WeightLabel::Mean};
}

double harmonic(int n) {
  if (n < 0) throw ValidationError("harmonic: n must be nonnegative");
  return n == 0 ? 0.0 : reciprocal_sum(1, n);
}

PoolWeights causal_weights(int T) {
  if (T < 1) throw ValidationError("causal_weights: T must be >= 1");
  Vec w(T);
  const double Tinv = 1.0 / T;
  w(0) = (1.0 + harmonic(T - 1)) * Tinv;
  // H_{T-1} - H_{s-1} = sum_{k=s}^{T-1} 1/k, summed directly to avoid cancellation.
  for (int s = 2; s <= T; ++s) w(s - 1) = (s <= T - 1 ? reciprocal_sum(s, T - 1) : 0.0) * Tinv;
  return PoolWeights{w, WeightLabel::Causal};
}

PoolScalars causal_scalars_closed_form(int T, int L, double mu_norm) {
  if (T < 1) throw ValidationError("causal_scalars_closed_form: T must be >= 1");
  if (L < 1 || L > T) throw ValidationError("causal_scalars_closed_form: L must satisfy 1 <= L <= T");
  const double HT = harmonic(T - 1);
  const double delta = L <= T - 1 ? reciprocal_sum(L, T - 1) : 0.0;  // H_{T-1} - H_{L-1}
  const double T2 = static_cast<double>(T) * T;
  const double Ld = L;
  PoolScalars s;
  s.kappa = (2.0 * T - 1.0 + HT) / T2;
  s.alpha = (Ld * Ld + 2.0 * (T - L) + (2.0 * Ld * (Ld - 1.0) + 1.0) * delta +
             Ld * (Ld - 1.0) * delta * delta) /
            T2;
  s.snr = s.alpha / s.kappa;
  s.rho = s.snr * mu_norm * mu_norm;
  return s;
}

double lambda_max(const CorrelationModel& R) {
  Eigen::SelfAdjointEigenSolver<Mat> es(R.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

PoolWeights optimal_weights(const CorrelationModel& R) {
  const auto T = R.T();
  Eigen::SelfAdjointEigenSolver<Mat> es(R.matrix());
  const Vec& evals = es.eigenvalues();  // ascending
  const double lmax = evals(T - 1);
  const double tie = 1e-10 * std::max(1.0, std::abs(lmax));

  // Project 1 onto the top eigenspace; for a simple eigenvalue this is v (v^T 1).
  Vec proj = Vec::Zero(T);
  const Vec ones = Vec::Ones(T);
  for (int k = T - 1; k >= 0 && lmax - evals(k) <= tie; --k) {
    const auto v = es.eigenvectors().col(k);
    proj += v * v.dot(ones);
  }
  const double mass = proj.sum();
  if (!(std::abs(mass) > 1e-10 * std::sqrt(static_cast<double>(T))))
    throw UnattainableError("optimal_weights: 1 is orthogonal to the top eigenspace; supremum " +
                                fmt(lmax) + " is not attained",
                            lmax);
  return PoolWeights{proj / mass, WeightLabel::Optimal};
}

namespace {

std::vector<std::vector<double>> read_rows(std::istream& is, int& T, std::string& kind) {
  std::string header;
  if (!std::getline(is, header)) throw ValidationError("csv: missing header line");
  std::istringstream hs(header);
  std::string hash, tfield, kfield;
  hs >> hash >> tfield >> kfield;
  if (hash != "#" || tfield.rfind("T=", 0) != 0 || kfield.rfind("kind=", 0) != 0)
    throw ValidationError("csv: header must read '# T=<int> kind=<string>'");
  try {
    T = std::stoi(tfield.substr(2));
  } catch (const std::exception&) {
    throw ValidationError("csv: bad T in header");
  }
  if (T < 1) throw ValidationError("csv: T must be >= 1");
  kind = kfield.substr(5);

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ValidationError("csv: unparsable value '" + cell + "'");
      }
    }
    if (static_cast<int>(row.size()) != T)
      throw ValidationError("csv: row has " + std::to_string(row.size()) + " values, expected " +
                            std::to_string(T));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_row(std::ostream& os, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) os << (j ? "," : "") << fmt(row(j));
  os << '\n';
}

}  // namespace

void write_correlation_csv(std::ostream& os, const CorrelationModel& R) {
  os << "# T=" << R.T() << " kind=" << to_string(R.kind()) << '\n';
  for (int i = 0; i < R.T(); ++i) write_row(os, R.matrix().row(i));
}

CorrelationModel read_correlation_csv(std::istream& is) {
  int T = 0;
  std::string kind;
  auto rows = read_rows(is, T, kind);
  if (static_cast<int>(rows.size()) != T)
    throw ValidationError("csv: expected " + std::to_string(T) + " matrix rows, got " +
                          std::to_string(rows.size()));
  Mat R(T, T);
  for (int i = 0; i < T; ++i)
    for (int j = 0; j < T; ++j) R(i, j) = rows[i][j];

  if (kind == "custom") return CorrelationModel::custom(R);
  if (kind == "prefix") {
    int L = 1;
    while (L < T && R(0, L) == 1.0) ++L;
    auto m = CorrelationModel::prefix(L, T);
    if ((m.matrix() - R).cwiseAbs().maxCoeff() > kSymmetryTol)
      throw ValidationError("csv: matrix is not a prefix correlation matrix");
    return m;
  }
  if (kind == "spiked") {
    validate_symmetric_psd(R);
    Eigen::SelfAdjointEigenSolver<Mat> es(R - Mat::Identity(T, T));
    const double theta = es.eigenvalues()(T - 1);
    auto m = CorrelationModel::spiked(theta, es.eigenvectors().col(T - 1));
    if ((m.matrix() - R).cwiseAbs().maxCoeff() > 1e-10)
      throw ValidationError("csv: matrix is not of the form I + theta u u^T");
    return m;
  }
  throw ValidationError("csv: unknown correlation kind '" + kind + "'");
}

void write_weights_csv(std::ostream& os, const PoolWeights& w) {
  os << "# T=" << w.T() << " kind=" << to_string(w.label) << '\n';
  write_row(os, w.w.transpose());
}

PoolWeights read_weights_csv(std::istream& is) {
  int T = 0;
  std::string kind;
  auto rows = read_rows(is, T, kind);
  if (rows.size() != 1) throw ValidationError("csv: weights file must contain exactly one row");
  Vec w = Eigen::Map<const Vec>(rows[0].data(), T);
  auto pw = PoolWeights::custom(w);
  pw.label = weight_label_from_string(kind);
  return pw;
}

}  // namespace attnspec
