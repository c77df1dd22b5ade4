#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace pnft {

using cplx = std::complex<double>;

// Transfer matrix of v_t = [[-i lam, q], [-conj q, i lam]] v over one period.
struct Monodromy {
  Eigen::Matrix2cd m;
  cplx lambda;
};

Monodromy monodromy(const std::vector<cplx>& q, double dt, cplx lambda);

// Half trace of the monodromy matrix.
cplx floquet_discriminant(const std::vector<cplx>& q, double dt, cplx lambda);

// Discriminant together with its exact lambda derivative.
void floquet_discriminant(const std::vector<cplx>& q, double dt, cplx lambda, cplx& delta,
                          cplx& d_delta);

struct SearchBox {
  double re_min = -2.0, re_max = 2.0;
  double im_min = 0.0, im_max = 3.0;
};

struct SpectrumEstimate {
  std::vector<cplx> points;        // Im > 0
  std::vector<double> residuals;   // |Delta -+ 1|
  bool shortfall = false;          // set by reduce_spectrum
};

struct RootSearchOptions {
  int nx = 60;
  int ny = 40;
  double tol = 1e-9;
  double band_edge = 1e-3;   // roots closer to the real axis are dropped
  double dedup = 1e-6;
  int max_newton = 60;
};

// Grid-seeded Newton search for Delta(lambda) = +-1 inside the box.
SpectrumEstimate find_main_spectrum(const std::vector<cplx>& q, double dt, const SearchBox& box,
                                    const RootSearchOptions& opt = {});

// Newton from the given seeds only; roots failing to converge are skipped.
SpectrumEstimate refine_main_spectrum(const std::vector<cplx>& q, double dt,
                                      const std::vector<cplx>& seeds,
                                      const RootSearchOptions& opt = {});

// Keeps the n points of largest imaginary part, descending, ties by real part.
SpectrumEstimate reduce_spectrum(const SpectrumEstimate& est, int n);

}  // namespace pnft
