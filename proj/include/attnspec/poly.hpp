#pragma once

#include <array>
#include <complex>

namespace attnspec::poly {

using cplx = std::complex<double>;

/// Roots of a x^2 + b x + c in cancellation-free form. With a == 0 the
/// second slot is NaN.
std::array<cplx, 2> quadratic(cplx a, cplx b, cplx c);

/// Roots of a x^3 + b x^2 + c x + d (d != 0). The largest root comes from
/// Cardano, the other two from backward deflation; each is Newton-polished.
/// With a == 0 it falls back to the quadratic and the third slot is NaN.
std::array<cplx, 3> cubic(cplx a, cplx b, cplx c, cplx d);

/// Newton steps on the cubic, each accepted only if the residual shrinks.
cplx polish_cubic(cplx a, cplx b, cplx c, cplx d, cplx x, int iters = 4);

}  // namespace attnspec::poly
