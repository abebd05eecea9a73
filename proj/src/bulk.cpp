#include "attnspec/bulk.hpp"

#include "attnspec/errors.hpp"
#include "attnspec/poly.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace attnspec {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::string fmt(cplx x) { return "(" + fmt(x.real()) + "," + fmt(x.imag()) + ")"; }

struct Coeffs {
  cplx a, b, c, d;
};

Coeffs coeffs(const BulkParams& p, cplx z) {
  const double dl = p.delta, g = p.gamma, k = p.kappa;
  return {dl * g * k * z * z, -k * z * (dl + g - 2.0 * dl * g), -(z + k * (dl - 1.0) * (1.0 - g)), -1.0};
}

// Scale of the terms of P at (m, z), the yardstick for a relative residual.
double term_scale(const BulkParams& p, cplx m, cplx z) {
  const Coeffs c = coeffs(p, z);
  const double am = std::abs(m);
  return std::abs(c.a) * am * am * am + std::abs(c.b) * am * am + std::abs(c.c) * am + 1.0;
}

// Crude upper bound on the support, used to place the homotopy start.
double support_scale(const BulkParams& p) {
  return p.kappa * (1.0 + std::sqrt(p.delta)) * (1.0 + std::sqrt(p.delta)) * (1.0 + std::sqrt(p.gamma)) *
         (1.0 + std::sqrt(p.gamma));
}

struct Track {
  cplx m;
  bool ok = true;
};

// Nearest root to a prediction, with the ratio of nearest to runner-up distance.
double nearest_root(const std::array<cplx, 3>& roots, int count, cplx target, cplx& out) {
  double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
  for (int i = 0; i < count; ++i) {
    const double dist = std::abs(roots[i] - target);
    if (dist < d1) {
      d2 = d1;
      d1 = dist;
      out = roots[i];
    } else if (dist < d2) {
      d2 = dist;
    }
  }
  return d2 > 0.0 ? d1 / d2 : 1.0;
}

// Follows the Herglotz root from x + iH down to the target along the vertical line.
Track homotopy(const BulkParams& p, cplx z) {
  const int nroots = p.delta == 0.0 ? 2 : 3;
  const double x = z.real(), y_target = z.imag();
  const double scale = support_scale(p);
  double y = 10.0 * (std::abs(z) + scale + 1.0);
  cplx zc(x, y);

  Track t;
  t.ok = nearest_root(cubic_roots(p, zc), nroots, -1.0 / zc, t.m) < 0.25;

  const double y_floor = 1e-14 * std::max(1.0, scale);
  while (y > y_target) {
    double y_next = 0.5 * y;
    if (y_next < y_floor || y_next < y_target) y_next = y_target;
    const cplx slope = -cubic_dz(p, t.m, zc) / cubic_dm(p, t.m, zc);
    cplx next;
    double ratio = 1.0;
    for (int halvings = 0;; ++halvings) {
      const cplx zn(x, y_next);
      ratio = nearest_root(cubic_roots(p, zn), nroots, t.m + slope * (zn - zc), next);
      if (ratio < 0.25 || halvings >= 50) break;
      y_next = 0.5 * (y + y_next);
    }
    if (!(ratio < 0.9)) t.ok = false;
    t.m = next;
    y = y_next;
    zc = cplx(x, y);
  }
  return t;
}

void validate_real_point(const BulkParams& p, double x) {
  if (x == 0.0) throw ValidationError("stieltjes: z must be nonzero");
  if (x < 0.0) return;
  const BulkEdge e = bulk_edge(p);
  if (x > e.right || (e.left > 0.0 && x < e.left)) return;
  throw ValidationError("stieltjes: real z = " + fmt(x) + " lies inside the support [" + fmt(e.left) +
                        ", " + fmt(e.right) + "]");
}

}  // namespace

void BulkParams::validate() const {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ValidationError("bulk: delta must be >= 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("bulk: gamma must be > 0");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ValidationError("bulk: kappa must be > 0");
}

cplx cubic_value(const BulkParams& p, cplx m, cplx z) {
  const Coeffs c = coeffs(p, z);
  return ((c.a * m + c.b) * m + c.c) * m + c.d;
}

cplx cubic_dm(const BulkParams& p, cplx m, cplx z) {
  const Coeffs c = coeffs(p, z);
  return (3.0 * c.a * m + 2.0 * c.b) * m + c.c;
}

cplx cubic_dz(const BulkParams& p, cplx m, cplx z) {
  const double dl = p.delta, g = p.gamma, k = p.kappa;
  return 2.0 * dl * g * k * z * m * m * m - k * (dl + g - 2.0 * dl * g) * m * m - m;
}

std::array<cplx, 3> cubic_roots(const BulkParams& p, cplx z) {
  const Coeffs c = coeffs(p, z);
  return poly::cubic(c.a, c.b, c.c, c.d);
}

cplx companion(const BulkParams& p, cplx m, cplx z) { return -(1.0 - p.gamma) / z + p.gamma * m; }

StieltjesValue stieltjes(const BulkParams& p, cplx z) {
  p.validate();
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw ValidationError("stieltjes: z must be finite");
  if (z.imag() < 0.0) throw ValidationError("stieltjes: Im z must be >= 0");
  if (z.imag() == 0.0) validate_real_point(p, z.real());

  const auto roots = cubic_roots(p, z);
  const int nroots = p.delta == 0.0 ? 2 : 3;

  StieltjesValue out;
  out.z = z;
  bool chosen = false;
  if (z.imag() > 0.0) {
    int count = 0;
    for (int i = 0; i < nroots; ++i)
      if (roots[i].imag() > 0.0) {
        ++count;
        out.m = roots[i];
      }
    chosen = count == 1;
    out.branch_ok = chosen;
  }
  if (!chosen) {
    const Track t = homotopy(p, z);
    out.m = t.m;
    out.branch_ok = t.ok;
  }
  if (z.imag() == 0.0 && std::abs(out.m.imag()) <= 1e-10 * std::abs(out.m)) out.m = out.m.real();

  const double resid = std::abs(cubic_value(p, out.m, z));
  const double tol = 1e-10 * std::max(term_scale(p, out.m, z), std::max(1.0, std::pow(std::abs(z), 3)));
  if (z.imag() > 0.0 && !(out.m.imag() > 0.0)) out.branch_ok = false;
  if (!(resid <= tol)) out.branch_ok = false;
  if (!out.branch_ok) {
    std::string msg = "stieltjes: branch selection failed at z = " + fmt(z) + "; roots";
    for (int i = 0; i < nroots; ++i) msg += " " + fmt(roots[i]);
    msg += "; residual " + fmt(resid);
    throw ConsistencyError(msg);
  }
  out.m_companion = companion(p, out.m, z);
  const cplx dm = cubic_dm(p, out.m, z);
  if (dm != cplx(0.0)) out.m_prime = -cubic_dz(p, out.m, z) / dm;
  return out;
}

BulkEdge bulk_edge(const BulkParams& p) {
  p.validate();
  BulkEdge e;
  const double g = p.gamma;
  if (p.delta == 0.0) {
    const double lo = (1.0 - std::sqrt(g)) * (1.0 - std::sqrt(g));
    const double hi = (1.0 + std::sqrt(g)) * (1.0 + std::sqrt(g));
    e.roots = {0.0, lo, hi};
    e.right = p.kappa * hi;
    e.left = g < 1.0 ? p.kappa * lo : 0.0;
    return e;
  }
  const double dl = p.delta;
  const double q = dl * g;
  const double r0 = dl + g + dl * g;
  const double D0 = r0 * (r0 * r0 * r0 + 216.0 * q * q);
  const double r03 = r0 * r0 * r0;
  const double D1 = 2.0 * (r03 * r03 - 540.0 * q * q * r03 - 5832.0 * q * q * q * q);
  double arg = D1 / (2.0 * std::pow(D0, 1.5));
  if (!(std::abs(arg) <= 1.0 + 1e-9))
    throw ConsistencyError("bulk_edge: arccos argument " + fmt(arg) + " outside [-1, 1] for delta = " +
                           fmt(dl) + ", gamma = " + fmt(g));
  arg = std::clamp(arg, -1.0, 1.0);
  const double phi = std::acos(arg);
  std::array<double, 3> x{};
  for (int k = 0; k < 3; ++k)
    x[k] = -(r0 * r0 - 12.0 * q * r0 + 12.0 * q * q - 12.0 * q +
             2.0 * std::sqrt(D0) * std::cos((phi + 2.0 * std::numbers::pi * k) / 3.0)) /
           (12.0 * q);

  // Coefficients of the discriminant cubic with kappa = 1.
  const double d2 = dl * dl, g2 = g * g;
  const double A = 4.0 * q;
  const double B = d2 * g2 - 10.0 * d2 * g + d2 - 10.0 * dl * g2 - 10.0 * q + g2;
  const double C = -2.0 * (d2 * dl * g2 - 4.0 * d2 * dl * g + d2 * dl + d2 * g2 * g + 2.0 * d2 * g2 +
                           2.0 * d2 * g + d2 - 4.0 * dl * g2 * g + 2.0 * dl * g2 - 4.0 * q + g2 * g + g2);
  const double D = (dl - 1.0) * (dl - 1.0) * (g - 1.0) * (g - 1.0) * (dl - g) * (dl - g);

  if (q / (r0 * r0) < 1e-4) {
    // Two of the trigonometric roots cancel catastrophically here; keep the
    // dominant one and deflate.
    int big = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(x[k]) > std::abs(x[big])) big = k;
    const cplx r = poly::polish_cubic(A, B, C, D, x[big]);
    const cplx c1 = -D / r;
    const cplx b1 = (c1 - C) / r;
    const auto rest = poly::quadratic(A, b1, c1);
    x = {r.real(), rest[0].real(), rest[1].real()};
  }
  for (auto& xk : x) xk = poly::polish_cubic(A, B, C, D, xk).real();
  std::sort(x.begin(), x.end());
  e.roots = x;
  e.right = p.kappa * x[2];
  e.left = x[1] > 1e-9 * x[2] ? p.kappa * x[1] : 0.0;
  return e;
}

EdgeStieltjes edge_stieltjes(const BulkParams& p) {
  p.validate();
  if (p.delta == 0.0) {
    // Scaled MP: the double root at the edge is m = -1/(sqrt(g) (1 + sqrt(g)) kappa).
    const double sg = std::sqrt(p.gamma);
    const double lam = p.kappa * (1.0 + sg) * (1.0 + sg);
    EdgeStieltjes es;
    es.m_edge = -1.0 / (p.kappa * sg * (1.0 + sg));
    es.m_companion_edge = companion(p, es.m_edge, lam).real();
    es.beta_crit = -1.0 / es.m_companion_edge;
    return es;
  }
  const double lam = bulk_edge(p).right;
  const auto roots = cubic_roots(p, lam);
  int bi = 0, bj = 1;
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const double dist = std::abs(roots[i] - roots[j]);
      if (dist < gap) {
        gap = dist;
        bi = i;
        bj = j;
      }
    }
  const cplx mid = 0.5 * (roots[bi] + roots[bj]);
  const double rel = gap / std::max(std::abs(roots[bi]), std::abs(roots[bj]));
  if (!(rel <= 1e-4))
    throw ConsistencyError("edge_stieltjes: no double root at the edge " + fmt(lam) + "; roots " +
                           fmt(roots[0]) + " " + fmt(roots[1]) + " " + fmt(roots[2]));

  // Critical points of P(.; lambda_+) solve the quadratic dP/dm = 0.
  const Coeffs c = coeffs(p, lam);
  const auto crit = poly::quadratic(3.0 * c.a, 2.0 * c.b, c.c);
  cplx m = std::abs(crit[0] - mid) < std::abs(crit[1] - mid) ? crit[0] : crit[1];
  if (std::isnan(m.real())) m = mid;

  EdgeStieltjes es;
  es.m_edge = m.real();
  es.m_companion_edge = companion(p, es.m_edge, lam).real();
  es.beta_crit = -1.0 / es.m_companion_edge;
  return es;
}

double atom_mass(const BulkParams& p) {
  double mass = 0.0;
  if (p.delta > 1.0) mass = std::max(mass, 1.0 - 1.0 / p.delta);
  if (p.gamma > 1.0) mass = std::max(mass, 1.0 - 1.0 / p.gamma);
  return mass;
}

double default_eta(const BulkParams& p) { return 1e-6 * std::max(1.0, bulk_edge(p).right); }

std::vector<double> default_grid(const BulkParams& p, int n) {
  if (n < 2) throw ValidationError("density grid needs at least 2 points");
  const double hi = 1.15 * bulk_edge(p).right;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) grid[i] = hi * i / (n - 1);
  return grid;
}

BulkLaw density(const BulkParams& p, const std::vector<double>& grid, double eta) {
  p.validate();
  if (!(eta > 0.0)) throw ValidationError("density: eta must be > 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ValidationError("density: grid must be strictly ascending");

  BulkLaw law;
  law.params = p;
  law.eta = eta;
  law.grid = grid;
  const BulkEdge e = bulk_edge(p);
  law.edge_right = e.right;
  law.edge_left = e.left;
  law.edge_roots = e.roots;
  law.atom_mass = atom_mass(p);
  law.density.assign(grid.size(), 0.0);
  law.valid.assign(grid.size(), false);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      const auto s = stieltjes(p, cplx(grid[i], eta));
      law.density[i] = std::max(0.0, s.m.imag() / std::numbers::pi);
      law.valid[i] = true;
    } catch (const ConsistencyError&) {
    }
  }
  return law;
}

BulkLaw density(const BulkParams& p) { return density(p, default_grid(p), default_eta(p)); }

void write_density_csv(std::ostream& os, const BulkLaw& law) {
  os << "# delta=" << fmt(law.params.delta) << " gamma=" << fmt(law.params.gamma)
     << " kappa=" << fmt(law.params.kappa) << " eta=" << fmt(law.eta) << " edge_right=" << fmt(law.edge_right)
     << '\n';
  os << "x,rho\n";
  for (std::size_t i = 0; i < law.grid.size(); ++i) {
    os << fmt(law.grid[i]) << ',';
    if (law.valid[i])
      os << fmt(law.density[i]);
    else
      os << "nan";
    os << '\n';
  }
}

}  // namespace attnspec
