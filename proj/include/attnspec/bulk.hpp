#pragma once

#include <array>
#include <complex>
#include <iosfwd>
#include <optional>
#include <vector>

namespace attnspec {

using cplx = std::complex<double>;

/// Law kappa * (MP_delta [x] MP_gamma). delta == 0 degenerates to kappa * MP_gamma.
struct BulkParams {
  double delta = 0.0;
  double gamma = 0.0;
  double kappa = 1.0;

  void validate() const;
};

struct StieltjesValue {
  cplx z;
  cplx m;
  cplx m_companion;
  std::optional<cplx> m_prime;
  bool branch_ok = false;
};

struct BulkEdge {
  double right = 0.0;
  double left = 0.0;                 // 0 for a hard edge
  std::array<double, 3> roots{};     // candidate x_k in kappa = 1 units, ascending
};

struct BulkLaw {
  BulkParams params;
  double eta = 0.0;
  std::vector<double> grid;
  std::vector<double> density;
  std::vector<bool> valid;
  double edge_right = 0.0;
  double edge_left = 0.0;
  std::array<double, 3> edge_roots{};
  double atom_mass = 0.0;
};

struct EdgeStieltjes {
  double m_edge = 0.0;
  double m_companion_edge = 0.0;
  double beta_crit = 0.0;  // -1 / m_companion_edge
};

/// P(m; z) = dgk z^2 m^3 - k z (d+g-2dg) m^2 - (z + k(d-1)(1-g)) m - 1.
cplx cubic_value(const BulkParams& p, cplx m, cplx z);
cplx cubic_dm(const BulkParams& p, cplx m, cplx z);
cplx cubic_dz(const BulkParams& p, cplx m, cplx z);

/// All roots of P(.; z), Newton-polished. When delta == 0 the cubic term vanishes
/// and the third slot holds NaN.
std::array<cplx, 3> cubic_roots(const BulkParams& p, cplx z);

cplx companion(const BulkParams& p, cplx m, cplx z);

/// Stieltjes transform on the analytic branch. Real z must lie outside the support.
StieltjesValue stieltjes(const BulkParams& p, cplx z);

BulkEdge bulk_edge(const BulkParams& p);

EdgeStieltjes edge_stieltjes(const BulkParams& p);

/// Mass of the atom at 0: max(0, 1 - 1/delta, 1 - 1/gamma).
double atom_mass(const BulkParams& p);

double default_eta(const BulkParams& p);

/// n uniform points on [0, 1.15 * edge_right].
std::vector<double> default_grid(const BulkParams& p, int n = 2048);

BulkLaw density(const BulkParams& p, const std::vector<double>& grid, double eta);
BulkLaw density(const BulkParams& p);

/// Columns x,rho after a comment header with the parameters.
void write_density_csv(std::ostream& os, const BulkLaw& law);

}  // namespace attnspec
