#include "attnspec/poly.hpp"

#include <cmath>
#include <limits>

namespace attnspec::poly {

namespace {

const cplx kNaN{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};

cplx eval(cplx a, cplx b, cplx c, cplx d, cplx x) { return ((a * x + b) * x + c) * x + d; }

cplx cbrt_principal(cplx x) {
  if (x == cplx(0.0)) return 0.0;
  return std::polar(std::cbrt(std::abs(x)), std::arg(x) / 3.0);
}

}  // namespace

std::array<cplx, 2> quadratic(cplx a, cplx b, cplx c) {
  if (a == cplx(0.0)) {
    if (b == cplx(0.0)) return {kNaN, kNaN};
    return {-c / b, kNaN};
  }
  cplx s = std::sqrt(b * b - 4.0 * a * c);
  if ((std::conj(b) * s).real() < 0.0) s = -s;
  const cplx q = -0.5 * (b + s);
  if (q == cplx(0.0)) return {0.0, 0.0};
  return {q / a, c / q};
}

cplx polish_cubic(cplx a, cplx b, cplx c, cplx d, cplx x, int iters) {
  cplx fx = eval(a, b, c, d, x);
  for (int i = 0; i < iters; ++i) {
    const cplx dfx = (3.0 * a * x + 2.0 * b) * x + c;
    if (dfx == cplx(0.0)) break;
    const cplx next = x - fx / dfx;
    const cplx fn = eval(a, b, c, d, next);
    if (!(std::abs(fn) < std::abs(fx))) break;
    x = next;
    fx = fn;
  }
  return x;
}

std::array<cplx, 3> cubic(cplx a, cplx b, cplx c, cplx d) {
  if (a == cplx(0.0)) {
    auto q = quadratic(b, c, d);
    return {q[0], q[1], kNaN};
  }
  const cplx p2 = b / a, p1 = c / a, p0 = d / a;
  // Depressed form t^3 + P t + Q with x = t - p2/3.
  const cplx shift = p2 / 3.0;
  const cplx P = p1 - p2 * shift;
  const cplx Q = 2.0 * shift * shift * shift - shift * p1 + p0;
  const cplx disc = std::sqrt(0.25 * Q * Q + P * P * P / 27.0);
  cplx w = -0.5 * Q + disc;
  const cplx w2 = -0.5 * Q - disc;
  if (std::abs(w2) > std::abs(w)) w = w2;
  const cplx u = cbrt_principal(w);
  const cplx omega(-0.5, std::sqrt(3.0) / 2.0);

  cplx largest = kNaN;
  double best = -1.0;
  cplx uk = u;
  for (int k = 0; k < 3; ++k) {
    const cplx t = uk == cplx(0.0) ? cplx(0.0) : uk - P / (3.0 * uk);
    const cplx x = t - shift;
    if (std::abs(x) > best) {
      best = std::abs(x);
      largest = x;
    }
    uk *= omega;
  }
  const cplx r = polish_cubic(a, b, c, d, largest);
  // (x - r)(a x^2 + b1 x + c1), solved from the constant term upward.
  const cplx c1 = -d / r;
  const cplx b1 = (c1 - c) / r;
  auto q = quadratic(a, b1, c1);
  return {r, polish_cubic(a, b, c, d, q[0]), polish_cubic(a, b, c, d, q[1])};
}

}  // namespace attnspec::poly
