#include "attnspec/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace attnspec {

Vec eigenvalues_desc(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

Vec top_eigenvector(const Mat& S, double lambda1) {
  const auto d = S.rows();
  const double scale = std::max(1.0, std::abs(lambda1));
  Vec x = Vec::Ones(d) / std::sqrt(static_cast<double>(d));
  for (double eps = 1e-10;; eps *= 10.0) {
    Mat shifted = -S;
    shifted.diagonal().array() += lambda1 + eps * scale;
    Eigen::LLT<Mat> llt(shifted);
    if (llt.info() != Eigen::Success) {
      if (eps > 1e-2) break;
      continue;
    }
    for (int it = 0; it < 6; ++it) {
      x = llt.solve(x);
      x.normalize();
    }
    return x;
  }
  // Fall back to the full decomposition.
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  return es.eigenvectors().col(d - 1);
}

ArrowheadTop::ArrowheadTop(const Mat& B) {
  Eigen::SelfAdjointEigenSolver<Mat> es(B);
  evals_ = es.eigenvalues();
  evecs_ = es.eigenvectors();
}

Vec ArrowheadTop::rotate(const Vec& b) const { return evecs_.transpose() * b; }

TopPair ArrowheadTop::solve(double a, const Vec& b) const { return solve_rotated(a, rotate(b)); }

TopPair ArrowheadTop::solve_rotated(double a, const Vec& b) const {
  const auto n = evals_.size();
  const double bn = b.norm();
  TopPair out;
  if (n == 0) {
    out.lambda1 = a;
    out.alignment = 1.0;
    return out;
  }
  const double dmax = evals_(n - 1);
  const double tiny = 1e-300;
  // Components with negligible coupling do not move the secular root.
  const double negligible = 1e-14 * std::max(bn, tiny);
  double dtop = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(b(i)) > negligible) dtop = std::max(dtop, evals_(i));
  if (!std::isfinite(dtop)) {
    out.lambda1 = std::max(a, dmax);
    out.alignment = a >= dmax ? 1.0 : 0.0;
    return out;
  }
  // g(l) = a - l + sum b_i^2 / (l - d_i) decreases from +inf on (dtop, inf).
  auto g = [&](double l) {
    double s = a - l;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(b(i)) > negligible) s += b(i) * b(i) / (l - evals_(i));
    return s;
  };
  double lo = dtop, hi = std::max(a, dtop) + bn + std::abs(dtop) * 1e-15 + tiny;
  while (g(hi) > 0.0) hi += (hi - lo) + 1e-12;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double lam = 0.5 * (lo + hi);
  if (dmax > lam) {
    out.lambda1 = dmax;
    out.alignment = 0.0;
    return out;
  }
  double norm2 = 1.0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (std::abs(b(i)) > negligible) {
      const double r = b(i) / (lam - evals_(i));
      norm2 += r * r;
    }
  out.lambda1 = lam;
  out.alignment = 1.0 / norm2;
  return out;
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(resolve_threads(threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace attnspec
