#pragma once

#include "attnspec/model.hpp"

#include <cstddef>
#include <functional>

namespace attnspec {

/// Eigenvalues of a symmetric matrix, descending.
Vec eigenvalues_desc(const Mat& S);

/// Unit eigenvector for the top eigenvalue lambda1 by shifted inverse iteration.
Vec top_eigenvector(const Mat& S, double lambda1);

struct TopPair {
  double lambda1 = 0.0;
  double alignment = 0.0;  // (v1^T e_0)^2
};

/// S = [[a, b^T], [b, B]] with B fixed and (a, b) varying: B is diagonalized once,
/// after which each (a, b) costs O(d) via the secular equation of the arrowhead.
class ArrowheadTop {
 public:
  explicit ArrowheadTop(const Mat& B);
  TopPair solve(double a, const Vec& b) const;
  /// b expressed in the eigenbasis of B.
  Vec rotate(const Vec& b) const;
  TopPair solve_rotated(double a, const Vec& b_rot) const;

 private:
  Vec evals_;  // ascending
  Mat evecs_;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write results
/// into slot i, so output order never depends on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Worker count after resolving 0 to the hardware concurrency.
int resolve_threads(int threads);

}  // namespace attnspec
