#pragma once

#include <vector>

#include "pnft/riemann_theta.hpp"

namespace pnft {

// g+1 upper half-plane branch points; their conjugates are implied.
struct MainSpectrum {
  std::vector<cplx> points;
  double separation_floor = 0.05;

  int genus() const { return static_cast<int>(points.size()) - 1; }
  // Throws std::invalid_argument naming the violated condition.
  void validate() const;
};

// Spectrum reflected about the imaginary axis, lambda -> -conj(lambda).
MainSpectrum mirror(const MainSpectrum& s);

struct CutSegment {
  cplx top;
  cplx bottom;
};

// Cuts run vertically from each point to its conjugate. a_j circles cut j
// (j = 1..g) on the first sheet; b_j leaves cut 0, reaches cut j through the
// upper half plane on the first sheet and returns on the second.
struct HyperellipticCurve {
  MainSpectrum spectrum;  // sorted by real part, then imaginary part
  std::vector<CutSegment> cuts;
  std::vector<int> a_cycles;                   // cut index encircled
  std::vector<std::pair<int, int>> b_cycles;   // (from cut, to cut)

  int genus() const { return spectrum.genus(); }
  // Intersection numbers a_i . b_j derived from the cut diagram.
  RMatrix a_dot_b() const;
  // Intersection numbers a_i . a_j and b_i . b_j (both zero for a canonical basis).
  RMatrix a_dot_a() const;
  RMatrix b_dot_b() const;
};

// psi(z,t) = U exp(i(k0 z + Omega0 t)) theta(w + delta) / theta(w),
// w = (kvec z + Omega t) / (2 pi), solving i psi_z + psi_tt / 2 + |psi|^2 psi = 0.
struct FiniteGapParams {
  cplx U = 0.0;
  double Omega0 = 0.0;
  double k0 = 0.0;
  RVector Omega;
  RVector kvec;
  CVector delta;
  PeriodMatrix tau;
  int zeroed_index = -1;  // set by quasiperiodize

  int genus() const { return static_cast<int>(Omega.size()); }
};

struct QuadratureOptions {
  int nodes = 256;
  int series_terms = 80;
};

HyperellipticCurve build_curve(const MainSpectrum& spectrum);

FiniteGapParams compute_params(const HyperellipticCurve& curve,
                               const QuadratureOptions& opt = {});

double theta_tol();

cplx evaluate_solution(const FiniteGapParams& p, double z, double t);
std::vector<cplx> evaluate_solution(const FiniteGapParams& p, double z,
                                    const std::vector<double>& t);
// Samples at t0 + n * dt, n = 0..count-1.
std::vector<cplx> evaluate_solution(const FiniteGapParams& p, double z, double t0,
                                    double dt, int count);

struct ResidualGrid {
  double z0 = 0.0;
  double z_len = 1.0;
  int nz = 64;
  double t0 = 0.0;
  double t_len = 0.0;  // 0 selects one amplitude period when it is finite
  int nt = 64;
};

// Relative L2 residual of i psi_z + psi_tt / 2 + |psi|^2 psi over the grid.
double nlse_residual(const FiniteGapParams& p, const ResidualGrid& grid = {});

// Amplitude period 2 pi / |Omega_j| when at most one frequency is nonzero, else 0.
double amplitude_period(const FiniteGapParams& p);

// dt/dz of the amplitude pattern, -k_j / Omega_j for the nonzero frequency.
double envelope_velocity(const FiniteGapParams& p);

FiniteGapParams quasiperiodize(const FiniteGapParams& p);

// Parameters of conj(psi(-z, t)), whose spectrum is mirror(spectrum).
FiniteGapParams mirror_params(const FiniteGapParams& p);

// Parameters of a psi(a^2 z, a t); the spectrum scales by a.
FiniteGapParams scale_params(const FiniteGapParams& p, double a);

// Parameters of the Galilean boost that moves the spectrum by the real shift c.
FiniteGapParams galilean_shift(const FiniteGapParams& p, double c);

// Unimodular change of the cycle basis: w -> M w. Leaves psi unchanged.
FiniteGapParams change_basis(const FiniteGapParams& p, const Eigen::MatrixXi& m);

}  // namespace pnft
