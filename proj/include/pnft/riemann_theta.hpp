#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace pnft {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

// Raised when a theta denominator vanishes numerically.
class NearDivisorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Symmetric g x g matrix with positive definite imaginary part.
struct PeriodMatrix {
  CMatrix tau;

  PeriodMatrix() = default;
  explicit PeriodMatrix(CMatrix t) : tau(std::move(t)) {}

  int genus() const { return static_cast<int>(tau.rows()); }
  // Throws std::invalid_argument or std::domain_error on a broken invariant.
  void validate(double sym_tol = 1e-10) const;
};

// Radius R in the metric ||T n|| (Y = T^T T, Y = Im tau) beyond which the
// lattice tail is below tol.
double truncation_radius(const PeriodMatrix& tau, double tol);

// theta(u|tau) = sum_n exp(pi i n^T tau n + 2 pi i n^T u)
cplx theta(const CVector& u, const PeriodMatrix& tau, double tol = 1e-15);

// log(theta(u_num) / theta(u_den)) with the Gaussian prefactors cancelled.
cplx log_theta_ratio(const CVector& u_num, const CVector& u_den,
                     const PeriodMatrix& tau, double tol = 1e-15);

// Truncated lattice sum for a fixed Im u, reusable across many Re u.
// theta(x + i y) = exp(log_scale()) * sum(x).
class ThetaSeries {
 public:
  ThetaSeries(const PeriodMatrix& tau, const RVector& im_u, double tol);

  double log_scale() const { return log_scale_; }
  std::size_t size() const { return weights_.size(); }

  cplx sum(const RVector& x) const;
  // Value and first two derivatives in s of sum(x + s d) at s = 0.
  void jet(const RVector& x, const RVector& d, cplx& s0, cplx& s1, cplx& s2) const;

 private:
  int g_;
  double log_scale_;
  std::vector<cplx> weights_;
  std::vector<double> n_;  // size() rows of g integers, stored as doubles
};

}  // namespace pnft
