#include "pnft/finite_gap.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <sstream>

#include "pnft/fft.hpp"
#include "quadrature.hpp"

namespace pnft {

namespace {

constexpr double kPi = 3.14159265358979323846;
const cplx kI(0.0, 1.0);

// Square root of (lam - e)(lam - conj e) with its cut on the vertical segment
// between e and conj e and asymptotic to lam - Re e.
cplx cut_root(cplx lam, cplx e) {
  cplx w = lam - e.real();
  cplx r = e.imag() / w;
  return w * std::sqrt(1.0 + r * r);
}

// First-sheet branch of the curve function, ~ lam^(g+1) at infinity.
cplx sheet_root(cplx lam, const std::vector<cplx>& es, int skip = -1) {
  cplx r = 1.0;
  for (int k = 0; k < static_cast<int>(es.size()); ++k)
    if (k != skip) r *= cut_root(lam, es[k]);
  return r;
}

cplx poly(const std::vector<cplx>& c, cplx lam) {
  cplx r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * lam + *it;
  return r;
}

struct Periods {
  int g = 0;
  CMatrix A;               // A(i, m): a_i period of lam^m dlam / mu
  CMatrix B;               // B(i, m): b_i period of lam^m dlam / mu
  std::vector<cplx> h;     // 1/mu = lam^-(g+1) sum h_n lam^-n
};

Periods loop_periods(const std::vector<cplx>& es, int nodes, int terms) {
  Periods P;
  const int g = static_cast<int>(es.size()) - 1;
  const int M = g + 3;
  P.g = g;
  P.A = CMatrix::Zero(g, M);
  P.B = CMatrix::Zero(g, M);

  // a-cycles: Gauss-Chebyshev on each cut absorbs the endpoint singularity.
  for (int j = 1; j <= g; ++j) {
    cplx e = es[j];
    for (int n = 1; n <= nodes; ++n) {
      double s = std::cos((2.0 * n - 1.0) * kPi / (2.0 * nodes));
      cplx lam(e.real(), e.imag() * s);
      cplx f = 1.0 / sheet_root(lam, es, j);
      cplx pw = 1.0;
      for (int m = 0; m < M; ++m) {
        P.A(j - 1, m) += f * pw;
        pw *= lam;
      }
    }
    P.A.row(j - 1) *= 2.0 * kI * kPi / static_cast<double>(nodes);
  }

  // b-cycles: twice the first-sheet integral from branch point 0 to branch
  // point j above all cuts. End legs use lam = E + d v^2.
  const detail::GaussRule& gl = detail::gauss_legendre(nodes);
  double top = 0.0;
  for (cplx e : es) top = std::max(top, e.imag());
  top = 1.5 * top + 0.5;
  auto accumulate = [&](int row, cplx lam, cplx weight) {
    cplx f = weight / sheet_root(lam, es);
    for (int m = 0; m < M; ++m) {
      P.B(row, m) += f;
      f *= lam;
    }
  };
  for (int j = 1; j <= g; ++j) {
    double hj = top + 0.3 * j;
    cplx e0 = es[0], ej = es[j];
    cplx c0(e0.real(), hj), cj(ej.real(), hj);
    for (int n = 0; n < nodes; ++n) {
      double v = 0.5 * (gl.x[n] + 1.0), wv = 0.5 * gl.w[n];
      cplx d0 = c0 - e0;
      accumulate(j - 1, e0 + d0 * v * v, wv * 2.0 * d0 * v);
      cplx mid = 0.5 * (c0 + cj) + 0.5 * (cj - c0) * gl.x[n];
      accumulate(j - 1, mid, 0.5 * (cj - c0) * gl.w[n]);
      cplx dj = cj - ej;
      accumulate(j - 1, ej + dj * v * v, -wv * 2.0 * dj * v);
    }
    P.B.row(j - 1) *= 2.0;
  }

  // prod (1 - E xi)^(-1/2) = exp(sum_m p_m xi^m / (2m)) over all 2g+2 points.
  std::vector<cplx> a(terms + 1, 0.0);
  for (int m = 1; m <= terms; ++m) {
    cplx pm = 0.0;
    for (cplx e : es) pm += std::pow(e, m) + std::pow(std::conj(e), m);
    a[m] = pm / (2.0 * m);
  }
  P.h.assign(terms + 1, 0.0);
  P.h[0] = 1.0;
  for (int n = 1; n <= terms; ++n) {
    cplx s = 0.0;
    for (int k = 1; k <= n; ++k) s += static_cast<double>(k) * a[k] * P.h[n - k];
    P.h[n] = s / static_cast<double>(n);
  }
  return P;
}

// Integral of c(lam) lam^-(g+1) sum h_n lam^-n over [lam_r, infinity) for the
// terms decaying at least like lam^-2.
cplx series_tail(const std::vector<cplx>& c, const std::vector<cplx>& h, int g, cplx lam_r) {
  cplx tot = 0.0;
  for (int m = 0; m < static_cast<int>(c.size()); ++m)
    for (int n = 0; n < static_cast<int>(h.size()); ++n) {
      int pw = m - g - 1 - n;
      if (pw <= -2) tot += c[m] * h[n] * std::pow(lam_r, pw + 1) / static_cast<double>(-(pw + 1));
    }
  return tot;
}

// Modulus of U from the mean-field identity for |psi(0,0)|^2.
double amplitude_modulus(const FiniteGapParams& p, double two_f1) {
  const int g = p.genus();
  if (g == 0) return std::sqrt(std::max(two_f1, 0.0));
  ThetaSeries den(p.tau, RVector::Zero(g), theta_tol());
  ThetaSeries num(p.tau, p.delta.imag(), theta_tol());
  cplx s0, s1, s2;
  den.jet(RVector::Zero(g), p.Omega / (2.0 * kPi), s0, s1, s2);
  cplx d2 = (s2 * s0 - s1 * s1) / (s0 * s0);
  double ratio = std::abs(s0) / (std::exp(num.log_scale()) * std::abs(num.sum(p.delta.real())));
  double a2 = (two_f1 + d2.real()) * ratio * ratio;
  if (!(a2 > 0.0)) throw std::runtime_error("nonpositive amplitude from the mean-field identity");
  return std::sqrt(a2);
}

bool is_periodic(const FiniteGapParams& p, int* index) {
  int count = 0;
  for (int j = 0; j < p.genus(); ++j)
    if (p.Omega[j] != 0.0) {
      ++count;
      if (index) *index = j;
    }
  return count <= 1;
}

class Evaluator {
 public:
  explicit Evaluator(const FiniteGapParams& p) : p_(p) {
    if (p.genus() == 0) return;
    num_.emplace(p.tau, p.delta.imag(), theta_tol());
    den_.emplace(p.tau, RVector::Zero(p.genus()), theta_tol());
    scale_ = std::exp(num_->log_scale() - den_->log_scale());
  }

  cplx operator()(double z, double t) const {
    cplx carrier = p_.U * std::exp(kI * (p_.k0 * z + p_.Omega0 * t));
    if (!den_) return carrier;
    RVector w = (p_.Omega * t + p_.kvec * z) / (2.0 * kPi);
    cplx sd = den_->sum(w);
    if (std::abs(sd) < 1e-300) throw NearDivisorError("near theta divisor in the solution denominator");
    return carrier * scale_ * num_->sum(w + p_.delta.real()) / sd;
  }

 private:
  const FiniteGapParams& p_;
  std::optional<ThetaSeries> num_, den_;
  double scale_ = 1.0;
};

}  // namespace

double theta_tol() { return 1e-15; }

void MainSpectrum::validate() const {
  if (points.empty()) throw std::invalid_argument("main spectrum is empty");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].imag() > 0.0))
      throw std::invalid_argument("main spectrum point not in the upper half plane");
    for (std::size_t j = 0; j < i; ++j) {
      double d = std::abs(points[i] - points[j]);
      if (d < separation_floor) {
        std::ostringstream os;
        os << "main spectrum points closer than the separation floor: " << d << " < "
           << separation_floor;
        throw std::invalid_argument(os.str());
      }
    }
  }
}

MainSpectrum mirror(const MainSpectrum& s) {
  MainSpectrum m = s;
  for (auto& p : m.points) p = -std::conj(p);
  return m;
}

HyperellipticCurve build_curve(const MainSpectrum& spectrum) {
  spectrum.validate();
  HyperellipticCurve c;
  c.spectrum = spectrum;
  auto& pts = c.spectrum.points;
  std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (pts[k].real() == pts[k - 1].real())
      throw std::invalid_argument(
          "vertical cuts overlap for points with equal real part; increase their separation");
  for (cplx e : pts) c.cuts.push_back({e, std::conj(e)});
  const int g = c.genus();
  for (int j = 1; j <= g; ++j) {
    c.a_cycles.push_back(j);
    c.b_cycles.emplace_back(0, j);
  }
  return c;
}

RMatrix HyperellipticCurve::a_dot_b() const {
  const int g = genus();
  RMatrix m = RMatrix::Zero(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      // b_j enters the disc around its end cut and leaves the one around its start cut.
      if (b_cycles[j].second == a_cycles[i]) m(i, j) += 1.0;
      if (b_cycles[j].first == a_cycles[i]) m(i, j) -= 1.0;
    }
  return m;
}

RMatrix HyperellipticCurve::a_dot_a() const {
  const int g = genus();
  RMatrix m = RMatrix::Zero(g, g);
  // Distinct cuts give disjoint circles.
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      if (i != j && a_cycles[i] == a_cycles[j]) m(i, j) = std::nan("");
  return m;
}

RMatrix HyperellipticCurve::b_dot_b() const {
  const int g = genus();
  RMatrix m = RMatrix::Zero(g, g);
  // Arcs over the cut line intersect when their endpoints interlace.
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      auto [s1, e1] = b_cycles[i];
      auto [s2, e2] = b_cycles[j];
      if (s1 < s2 && s2 < e1 && e1 < e2) m(i, j) = 1.0;
      if (s2 < s1 && s1 < e2 && e2 < e1) m(i, j) = -1.0;
    }
  return m;
}

FiniteGapParams compute_params(const HyperellipticCurve& curve, const QuadratureOptions& opt) {
  const std::vector<cplx>& es = curve.spectrum.points;
  const int g = curve.genus();
  Periods P = loop_periods(es, opt.nodes, opt.series_terms);
  const std::vector<cplx>& h = P.h;
  cplx p1 = 0.0;
  for (cplx e : es) p1 += 2.0 * e.real();

  FiniteGapParams out;
  // Normalized holomorphic differentials: rows of C are coefficient vectors.
  CMatrix Am = P.A.leftCols(g);
  CMatrix C;
  if (g > 0) {
    Eigen::JacobiSVD<CMatrix> svd(Am);
    double cond = svd.singularValues()(0) / svd.singularValues()(g - 1);
    if (!(cond < 1e12)) throw std::runtime_error("degenerate spectrum: singular normalization matrix");
    C = Am.transpose().inverse();
  }
  CMatrix tau(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) tau(i, j) = C.row(j).cwiseProduct(P.B.row(i).head(g)).sum();

  // Second-kind differentials with prescribed principal parts at infinity.
  std::vector<cplx> c1(g + 2, 0.0), c2(g + 3, 0.0);
  c1[g + 1] = 1.0;
  c1[g] = -p1 / 2.0;
  c2[g + 2] = 2.0;
  c2[g + 1] = -p1;
  c2[g] = p1 * p1 / 2.0 - 2.0 * h[2];
  if (g > 0) {
    auto lu = Am.partialPivLu();
    CVector r1 = -(P.A.col(g + 1) * c1[g + 1] + P.A.col(g) * c1[g]);
    CVector r2 = -(P.A.col(g + 2) * c2[g + 2] + P.A.col(g + 1) * c2[g + 1] + P.A.col(g) * c2[g]);
    CVector s1 = lu.solve(r1), s2 = lu.solve(r2);
    for (int m = 0; m < g; ++m) {
      c1[m] = s1[m];
      c2[m] = s2[m];
    }
  }
  CVector om(g), kv(g);
  for (int i = 0; i < g; ++i) {
    om[i] = 0.0;
    kv[i] = 0.0;
    for (int m = 0; m < g + 2; ++m) om[i] += P.B(i, m) * c1[m];
    for (int m = 0; m < g + 3; ++m) kv[i] += P.B(i, m) * c2[m];
  }

  // Abel-type integrals from branch point 0 up to infinity on the first sheet.
  const detail::GaussRule& gl = detail::gauss_legendre(opt.nodes);
  double rmax = 0.0;
  for (cplx e : es) rmax = std::max(rmax, std::abs(e));
  cplx b = es[0];
  double len = 3.0 * rmax + 1.0 + std::abs(b);
  cplx lam_r = b + kI * len;
  std::vector<std::vector<cplx>> crow(g, std::vector<cplx>(g));
  for (int j = 0; j < g; ++j)
    for (int m = 0; m < g; ++m) crow[j][m] = C(j, m);
  CVector delta = CVector::Zero(g);
  cplx e1 = 0.0, e2 = 0.0;
  for (int n = 0; n < opt.nodes; ++n) {
    double v = 0.5 * (gl.x[n] + 1.0), wv = 0.5 * gl.w[n];
    cplx lam = b + kI * len * v * v;
    cplx dl = kI * len * 2.0 * v * wv;
    cplx inv = 1.0 / sheet_root(lam, es);
    for (int j = 0; j < g; ++j) delta[j] += dl * poly(crow[j], lam) * inv;
    e1 += dl * (poly(c1, lam) * inv - 1.0);
    e2 += dl * (poly(c2, lam) * inv - 2.0 * lam);
  }
  for (int j = 0; j < g; ++j) delta[j] = 2.0 * (delta[j] + series_tail(crow[j], h, g, lam_r));
  e1 = 2.0 * (e1 + series_tail(c1, h, g, lam_r) - b);
  e2 = 2.0 * (e2 + series_tail(c2, h, g, lam_r) - b * b);
  cplx d2 = 0.0;
  for (int m = 0; m < g + 2; ++m)
    if (m - g + 1 >= 0) d2 += c1[m] * h[m - g + 1];
  double two_f1 = -2.0 * d2.real();

  // Convergence diagnostics: the frequencies must come out real.
  for (int i = 0; i < g; ++i) {
    double bad = std::max(std::abs(om[i].imag()) / (1.0 + std::abs(om[i])),
                          std::abs(kv[i].imag()) / (1.0 + std::abs(kv[i])));
    if (bad > 1e-6) {
      std::ostringstream os;
      os << "quadrature did not converge: imaginary frequency residual " << bad;
      throw std::runtime_error(os.str());
    }
  }
  // The b-cycle paths fix Re tau only modulo integers below the diagonal.
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < i; ++j) tau(i, j) += std::round((tau(j, i) - tau(i, j)).real());

  out.Omega = om.real();
  out.kvec = kv.real();
  out.delta = delta;
  out.tau = PeriodMatrix(tau);
  out.Omega0 = e1.real();
  out.k0 = e2.real();

  if (g == 2) {
    // One Euclid step: reduce the larger frequency by the smaller one.
    int s = std::abs(out.Omega[0]) <= std::abs(out.Omega[1]) ? 0 : 1;
    double ratio = out.Omega[1 - s] / out.Omega[s];
    int m = static_cast<int>(std::lround(ratio));
    Eigen::MatrixXi M = Eigen::MatrixXi::Identity(2, 2);
    M(1 - s, s) = -m;
    out = change_basis(out, M);
  }

  if (g > 0) {
    // Canonical representative of delta modulo the period lattice.
    RMatrix Y = out.tau.tau.imag();
    RVector nv = Y.ldlt().solve(RVector(out.delta.imag()));
    Eigen::VectorXd n = nv.array().round().matrix();
    out.delta -= out.tau.tau * n.cast<cplx>();
    out.Omega0 -= n.dot(out.Omega);
    out.k0 -= n.dot(out.kvec);
    for (int j = 0; j < g; ++j)
      out.delta[j] -= std::round(out.delta[j].real() - 1e-9);
    // Even integer shifts of the diagonal and integer shifts elsewhere leave theta
    // unchanged; map Re tau into (-1/2, 1/2] per period, biased against half-integer ties.
    CMatrix& t = out.tau.tau;
    for (int i = 0; i < g; ++i)
      for (int j = i; j < g; ++j) {
        double period = i == j ? 2.0 : 1.0;
        double shift = period * std::round(0.5 * (t(i, j) + t(j, i)).real() / period - 1e-9);
        t(i, j) -= shift;
        if (j != i) t(j, i) -= shift;
      }
  }
  out.U = amplitude_modulus(out, two_f1);

  double asym = g > 0 ? (out.tau.tau - out.tau.tau.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-6) {
    std::ostringstream os;
    os << "quadrature did not converge: period matrix asymmetry " << asym;
    throw std::runtime_error(os.str());
  }
  return out;
}

cplx evaluate_solution(const FiniteGapParams& p, double z, double t) {
  return Evaluator(p)(z, t);
}

std::vector<cplx> evaluate_solution(const FiniteGapParams& p, double z,
                                    const std::vector<double>& t) {
  Evaluator ev(p);
  std::vector<cplx> out(t.size());
  for (std::size_t n = 0; n < t.size(); ++n) out[n] = ev(z, t[n]);
  return out;
}

std::vector<cplx> evaluate_solution(const FiniteGapParams& p, double z, double t0, double dt,
                                    int count) {
  Evaluator ev(p);
  std::vector<cplx> out(count);
  for (int n = 0; n < count; ++n) out[n] = ev(z, t0 + n * dt);
  return out;
}

double amplitude_period(const FiniteGapParams& p) {
  int idx = -1;
  if (!is_periodic(p, &idx) || idx < 0) return 0.0;
  return 2.0 * kPi / std::abs(p.Omega[idx]);
}

double envelope_velocity(const FiniteGapParams& p) {
  int idx = -1;
  if (!is_periodic(p, &idx) || idx < 0) throw std::invalid_argument("envelope velocity needs a periodic amplitude");
  return -p.kvec[idx] / p.Omega[idx];
}

double nlse_residual(const FiniteGapParams& p, const ResidualGrid& grid) {
  Evaluator ev(p);
  int idx = -1;
  bool periodic = is_periodic(p, &idx);
  double period = idx >= 0 ? 2.0 * kPi / std::abs(p.Omega[idx]) : 2.0 * kPi;
  double wmax = std::max({1.0, std::abs(p.Omega0), p.genus() ? p.Omega.cwiseAbs().maxCoeff() : 0.0});
  double kmax = std::max({1.0, std::abs(p.k0), p.genus() ? p.kvec.cwiseAbs().maxCoeff() : 0.0});
  double t_len = grid.t_len > 0.0 ? grid.t_len : (periodic ? period : 8.0 * kPi / wmax);
  bool spectral = periodic;
  if (periodic && idx >= 0 && grid.t_len > 0.0) {
    double cycles = t_len / period;
    spectral = std::abs(cycles - std::round(cycles)) < 1e-12 * cycles && std::round(cycles) >= 1;
  }
  const int nt = grid.nt, nz = grid.nz;
  const double dt = t_len / nt;
  const double hz = 2e-3 / kmax;
  const double ht = 0.05 / wmax;
  static const double fd8[5] = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};

  double num = 0.0, den = 0.0;
  for (int iz = 0; iz < nz; ++iz) {
    double z = grid.z0 + grid.z_len * iz / nz;
    std::vector<cplx> psi(nt), psi_tt(nt), psi_z(nt);
    for (int it = 0; it < nt; ++it) {
      double t = grid.t0 + it * dt;
      psi[it] = ev(z, t);
      psi_z[it] = (-ev(z + 2 * hz, t) + 8.0 * ev(z + hz, t) - 8.0 * ev(z - hz, t) + ev(z - 2 * hz, t)) /
                  (12.0 * hz);
      if (!spectral) {
        cplx acc = fd8[0] * psi[it];
        for (int k = 1; k <= 4; ++k) acc += fd8[k] * (ev(z, t + k * ht) + ev(z, t - k * ht));
        psi_tt[it] = acc / (ht * ht);
      }
    }
    if (spectral) {
      // Remove the carrier, differentiate the periodic envelope, restore.
      std::vector<cplx> env(nt);
      for (int it = 0; it < nt; ++it)
        env[it] = psi[it] * std::exp(-kI * p.Omega0 * (grid.t0 + it * dt));
      auto d1 = fft::derivative(env, t_len, 1);
      auto d2 = fft::derivative(env, t_len, 2);
      for (int it = 0; it < nt; ++it) {
        cplx c = std::exp(kI * p.Omega0 * (grid.t0 + it * dt));
        psi_tt[it] = c * (d2[it] + 2.0 * kI * p.Omega0 * d1[it] - p.Omega0 * p.Omega0 * env[it]);
      }
    }
    for (int it = 0; it < nt; ++it) {
      cplx nl = std::norm(psi[it]) * psi[it];
      cplx r = kI * psi_z[it] + 0.5 * psi_tt[it] + nl;
      num += std::norm(r);
      den += std::norm(psi_z[it]) + 0.25 * std::norm(psi_tt[it]) + std::norm(nl);
    }
  }
  return std::sqrt(num / den);
}

FiniteGapParams quasiperiodize(const FiniteGapParams& p) {
  if (p.genus() != 2) throw std::invalid_argument("quasiperiodize requires genus 2");
  double a = std::abs(p.Omega[0]), b = std::abs(p.Omega[1]);
  if (std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(a, b)))
    throw std::invalid_argument("frequencies tie in magnitude; no smaller one to drop");
  FiniteGapParams q = p;
  q.zeroed_index = a < b ? 0 : 1;
  q.Omega[q.zeroed_index] = 0.0;
  return q;
}

FiniteGapParams mirror_params(const FiniteGapParams& p) {
  FiniteGapParams q = p;
  q.U = std::conj(p.U);
  q.Omega0 = -p.Omega0;
  q.Omega = -p.Omega;
  q.delta = -p.delta.conjugate();
  q.tau = PeriodMatrix(-p.tau.tau.conjugate());
  return q;
}

FiniteGapParams scale_params(const FiniteGapParams& p, double a) {
  FiniteGapParams q = p;
  q.U = a * p.U;
  q.Omega0 = a * p.Omega0;
  q.k0 = a * a * p.k0;
  q.Omega = a * p.Omega;
  q.kvec = a * a * p.kvec;
  return q;
}

FiniteGapParams galilean_shift(const FiniteGapParams& p, double c) {
  // psi(z, t - v z) exp(i (v t - v^2 z / 2)) with v = -2c.
  const double v = -2.0 * c;
  FiniteGapParams q = p;
  q.Omega0 = p.Omega0 + v;
  q.k0 = p.k0 - v * p.Omega0 - 0.5 * v * v;
  q.kvec = p.kvec - v * p.Omega;
  return q;
}

FiniteGapParams change_basis(const FiniteGapParams& p, const Eigen::MatrixXi& m) {
  RMatrix md = m.cast<double>();
  if (std::abs(std::abs(md.determinant()) - 1.0) > 1e-12)
    throw std::invalid_argument("basis change must be unimodular");
  FiniteGapParams q = p;
  q.Omega = md * p.Omega;
  q.kvec = md * p.kvec;
  q.delta = md.cast<cplx>() * p.delta;
  q.tau = PeriodMatrix(md.cast<cplx>() * p.tau.tau * md.transpose().cast<cplx>());
  return q;
}

}  // namespace pnft
