#include "pnft/riemann_theta.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace pnft {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_genus(const PeriodMatrix& tau) {
  if (tau.tau.rows() != tau.tau.cols() || tau.tau.rows() == 0)
    throw std::invalid_argument("period matrix must be square and nonempty");
}

// Upper-triangular T with Im tau = T^T T.
RMatrix cholesky_upper(const PeriodMatrix& tau) {
  RMatrix y = tau.tau.imag();
  y = (0.5 * (y + y.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(y, Eigen::EigenvaluesOnly);
  double lo = es.eigenvalues().minCoeff();
  if (!(lo > 0.0)) {
    std::ostringstream os;
    os << "Im tau is not positive definite: smallest eigenvalue " << lo;
    throw std::domain_error(os.str());
  }
  Eigen::LLT<RMatrix> llt(y);
  return llt.matrixU();
}

// All integer n with ||T (n - c)|| <= r, T upper triangular.
void enumerate(const RMatrix& t, const RVector& c, double r,
               const std::function<void(const Eigen::VectorXi&)>& visit) {
  const int g = static_cast<int>(t.rows());
  Eigen::VectorXi n(g);
  std::function<void(int, double)> rec = [&](int i, double acc) {
    double shift = 0.0;
    for (int j = i + 1; j < g; ++j) shift += t(i, j) * (n[j] - c[j]);
    double centre = c[i] - shift / t(i, i);
    double half = std::sqrt(std::max(0.0, r * r - acc)) / t(i, i);
    int lo = static_cast<int>(std::ceil(centre - half));
    int hi = static_cast<int>(std::floor(centre + half));
    for (int k = lo; k <= hi; ++k) {
      n[i] = k;
      double e = t(i, i) * (k - c[i]) + shift;
      double a = acc + e * e;
      if (a > r * r) continue;
      if (i == 0)
        visit(n);
      else
        rec(i - 1, a);
    }
  };
  rec(g - 1, 0.0);
}

// Upper incomplete gamma at half-integer or integer order s = g/2.
double upper_gamma_half(int g, double x) {
  double s, val;
  if (g % 2 == 1) {
    s = 0.5;
    val = std::sqrt(kPi) * std::erfc(std::sqrt(x));
  } else {
    s = 1.0;
    val = std::exp(-x);
  }
  while (s < 0.5 * g - 1e-12) {
    val = s * val + std::pow(x, s) * std::exp(-x);
    s += 1.0;
  }
  return val;
}

}  // namespace

void PeriodMatrix::validate(double sym_tol) const {
  check_genus(*this);
  double asym = (tau - tau.transpose()).cwiseAbs().maxCoeff();
  if (asym > sym_tol) {
    std::ostringstream os;
    os << "period matrix not symmetric: max |tau - tau^T| = " << asym;
    throw std::invalid_argument(os.str());
  }
  cholesky_upper(*this);
}

double truncation_radius(const PeriodMatrix& tau, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("tol must lie in (0, 1)");
  check_genus(tau);
  const int g = tau.genus();
  RMatrix t = cholesky_upper(tau) * std::sqrt(kPi);

  // Shortest nonzero vector of the lattice sqrt(pi) T Z^g.
  double rho = t.colwise().norm().minCoeff();
  enumerate(t, RVector::Zero(g), rho, [&](const Eigen::VectorXi& n) {
    if (n.isZero()) return;
    double len = (t * n.cast<double>()).norm();
    if (len < rho) rho = len;
  });

  auto bound = [&](double r) {
    double x = (r - 0.5 * rho) * (r - 0.5 * rho);
    return 0.5 * g * std::pow(2.0 / rho, g) * upper_gamma_half(g, x);
  };
  double lo = 0.5 * (std::sqrt(static_cast<double>(g)) + rho);
  if (bound(lo) <= tol) return lo / std::sqrt(kPi);
  double hi = lo + 1.0;
  while (bound(hi) > tol) hi += 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    (bound(mid) > tol ? lo : hi) = mid;
  }
  return hi / std::sqrt(kPi);
}

ThetaSeries::ThetaSeries(const PeriodMatrix& tau, const RVector& im_u, double tol) {
  check_genus(tau);
  g_ = tau.genus();
  if (im_u.size() != g_) throw std::invalid_argument("theta argument length differs from genus");
  RMatrix t = cholesky_upper(tau);
  RMatrix y = t.transpose() * t;
  RMatrix x = tau.tau.real();
  RVector c = -y.ldlt().solve(im_u);
  log_scale_ = kPi * c.dot(y * c);
  double r = truncation_radius(tau, tol);
  enumerate(t, c, r, [&](const Eigen::VectorXi& n) {
    RVector nd = n.cast<double>();
    RVector d = nd - c;
    double re = -kPi * d.dot(y * d);
    double im = kPi * nd.dot(x * nd);
    weights_.push_back(std::exp(cplx(re, im)));
    for (int k = 0; k < g_; ++k) n_.push_back(nd[k]);
  });
}

cplx ThetaSeries::sum(const RVector& x) const {
  cplx s = 0.0;
  for (std::size_t m = 0; m < weights_.size(); ++m) {
    double ph = 0.0;
    for (int k = 0; k < g_; ++k) ph += n_[m * g_ + k] * x[k];
    s += weights_[m] * std::polar(1.0, 2.0 * kPi * ph);
  }
  return s;
}

void ThetaSeries::jet(const RVector& x, const RVector& d, cplx& s0, cplx& s1,
                      cplx& s2) const {
  s0 = s1 = s2 = 0.0;
  for (std::size_t m = 0; m < weights_.size(); ++m) {
    double ph = 0.0, nd = 0.0;
    for (int k = 0; k < g_; ++k) {
      ph += n_[m * g_ + k] * x[k];
      nd += n_[m * g_ + k] * d[k];
    }
    cplx term = weights_[m] * std::polar(1.0, 2.0 * kPi * ph);
    cplx f = cplx(0.0, 2.0 * kPi * nd);
    s0 += term;
    s1 += f * term;
    s2 += f * f * term;
  }
}

cplx theta(const CVector& u, const PeriodMatrix& tau, double tol) {
  ThetaSeries ts(tau, u.imag(), tol);
  return std::exp(ts.log_scale()) * ts.sum(u.real());
}

cplx log_theta_ratio(const CVector& u_num, const CVector& u_den, const PeriodMatrix& tau,
                     double tol) {
  if (u_num.size() != u_den.size()) throw std::invalid_argument("argument lengths differ");
  ThetaSeries num(tau, u_num.imag(), tol);
  ThetaSeries den(tau, u_den.imag(), tol);
  cplx sn = num.sum(u_num.real());
  cplx sd = den.sum(u_den.real());
  if (std::abs(sd) < 1e-300) throw NearDivisorError("near theta divisor: denominator vanishes");
  return (num.log_scale() - den.log_scale()) + std::log(sn) - std::log(sd);
}

}  // namespace pnft
