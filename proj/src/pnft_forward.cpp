#include "pnft/pnft_forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pnft {

namespace {

const cplx kI(0.0, 1.0);

// cos(sqrt x), sin(sqrt x)/sqrt x and the x-derivative of the latter.
inline void kernel(cplx x, cplx& c, cplx& s, cplx& ds) {
  if (std::abs(x) < 1e-3) {
    c = 1.0 + x * (-1.0 / 2 + x * (1.0 / 24 + x * (-1.0 / 720 + x * (1.0 / 40320))));
    s = 1.0 + x * (-1.0 / 6 + x * (1.0 / 120 + x * (-1.0 / 5040 + x * (1.0 / 362880))));
    ds = -1.0 / 6 + x * (1.0 / 60 + x * (-1.0 / 1680 + x * (1.0 / 90720)));
    return;
  }
  cplx r = std::sqrt(x);
  c = std::cos(r);
  s = std::sin(r) / r;
  ds = (c - s) / (2.0 * x);
}

struct Mat2 {
  cplx a, b, c, d;
};

inline Mat2 mul(const Mat2& x, const Mat2& y) {
  return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
          x.c * y.b + x.d * y.d};
}

inline Mat2 add(const Mat2& x, const Mat2& y) {
  return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
}

// One-sample factor for piecewise-constant q and, optionally, its lambda derivative.
inline Mat2 step(cplx q, double dt, cplx lam, Mat2* dstep) {
  cplx x = (lam * lam + std::norm(q)) * (dt * dt);
  cplx c, s, ds;
  kernel(x, c, s, ds);
  cplx h = dt * s;
  Mat2 m{c - kI * lam * h, h * q, -h * std::conj(q), c + kI * lam * h};
  if (dstep) {
    cplx dx = 2.0 * lam * dt * dt;
    cplx dc = -0.5 * s * dx;
    cplx dh = dt * ds * dx;
    *dstep = {dc - kI * (h + lam * dh), dh * q, -dh * std::conj(q), dc + kI * (h + lam * dh)};
  }
  return m;
}

void check_input(const std::vector<cplx>& q, double dt) {
  if (q.empty()) throw std::invalid_argument("monodromy needs at least one sample");
  if (!(dt > 0.0)) throw std::invalid_argument("sample spacing must be positive");
}

double period_of(const std::vector<cplx>& q, double dt) {
  return std::max(1.0, dt * static_cast<double>(q.size()));
}

// At a double point Delta' vanishes too; Newton on Delta' (derivative by
// central differences of the exact Delta') recovers it to full accuracy.
void polish_double_point(const std::vector<cplx>& q, double dt, cplx& lam, double& res,
                         double target, const RootSearchOptions& opt) {
  cplx x = lam;
  const double h = 1e-6;
  for (int it = 0; it < 20; ++it) {
    cplx d, dd, dp, ddp, dm, ddm;
    floquet_discriminant(q, dt, x, d, dd);
    floquet_discriminant(q, dt, x + h, dp, ddp);
    floquet_discriminant(q, dt, x - h, dm, ddm);
    cplx d2 = (ddp - ddm) / (2.0 * h);
    if (std::abs(d2) == 0.0) break;
    cplx stepv = dd / d2;
    x -= stepv;
    if (std::abs(stepv) < 1e-14 * (1.0 + std::abs(x))) break;
  }
  cplx d, dd;
  floquet_discriminant(q, dt, x, d, dd);
  double r = std::abs(d - target);
  if (r <= std::max(res, opt.tol) && std::abs(x - lam) < 1e-2) {
    lam = x;
    res = r;
  }
}

// Newton on Delta = s (s = +-1 nearest the current value).
bool newton(const std::vector<cplx>& q, double dt, cplx& lam, double& res, const SearchBox* box,
            const RootSearchOptions& opt, double max_step) {
  for (int it = 0; it < opt.max_newton; ++it) {
    cplx d, dd;
    floquet_discriminant(q, dt, lam, d, dd);
    double target = d.real() >= 0.0 ? 1.0 : -1.0;
    res = std::abs(d - target);
    if (res < opt.tol) {
      if (std::abs(dd) < 1e-2 * period_of(q, dt)) {
        polish_double_point(q, dt, lam, res, target, opt);
        return true;
      }
      // One polishing step when cheap and safe.
      if (std::abs(dd) > 0.0) {
        cplx l2 = lam - (d - target) / dd;
        cplx d2, dd2;
        floquet_discriminant(q, dt, l2, d2, dd2);
        double r2 = std::abs(d2 - target);
        if (r2 <= res) {
          lam = l2;
          res = r2;
        }
      }
      return true;
    }
    if (std::abs(dd) == 0.0) return false;
    cplx stepv = (d - target) / dd;
    if (std::abs(stepv) > max_step) stepv *= max_step / std::abs(stepv);
    lam -= stepv;
    if (box) {
      double wx = box->re_max - box->re_min, wy = box->im_max - box->im_min;
      if (lam.real() < box->re_min - 0.2 * wx || lam.real() > box->re_max + 0.2 * wx ||
          lam.imag() < box->im_min - 0.2 * wy || lam.imag() > box->im_max + 0.2 * wy)
        return false;
    }
  }
  return false;
}

bool is_new(const SpectrumEstimate& est, cplx lam, const RootSearchOptions& opt) {
  for (cplx p : est.points)
    if (std::abs(p - lam) < opt.dedup) return false;
  return true;
}

void keep_root(SpectrumEstimate& est, cplx lam, double res, const RootSearchOptions& opt) {
  if (lam.imag() < opt.band_edge || !is_new(est, lam, opt)) return;
  est.points.push_back(lam);
  est.residuals.push_back(res);
}

// Newton on Delta^2 - 1 with the known roots divided out, so a seed that sits
// between two close roots can reach the one not yet found.
bool deflated_newton(const std::vector<cplx>& q, double dt, cplx& lam,
                     const std::vector<cplx>& roots, const std::vector<int>& mult,
                     const SearchBox& box, const RootSearchOptions& opt, double max_step) {
  for (int it = 0; it < opt.max_newton; ++it) {
    cplx d, dd;
    floquet_discriminant(q, dt, lam, d, dd);
    cplx f = d * d - 1.0;
    if (std::abs(f) < opt.tol) return true;
    cplx r = 2.0 * d * dd / f;
    for (std::size_t k = 0; k < roots.size(); ++k) r -= static_cast<double>(mult[k]) / (lam - roots[k]);
    if (std::abs(r) == 0.0) return false;
    cplx stepv = 1.0 / r;
    if (std::abs(stepv) > max_step) stepv *= max_step / std::abs(stepv);
    lam -= stepv;
    double wx = box.re_max - box.re_min, wy = box.im_max - box.im_min;
    if (lam.real() < box.re_min - 0.2 * wx || lam.real() > box.re_max + 0.2 * wx ||
        lam.imag() < box.im_min - 0.2 * wy || lam.imag() > box.im_max + 0.2 * wy)
      return false;
    if (std::abs(stepv) < 1e-12 * (1.0 + std::abs(lam))) return true;
  }
  return false;
}

}  // namespace

Monodromy monodromy(const std::vector<cplx>& q, double dt, cplx lambda) {
  check_input(q, dt);
  Mat2 m{1.0, 0.0, 0.0, 1.0};
  for (cplx v : q) m = mul(step(v, dt, lambda, nullptr), m);
  Monodromy out;
  out.m << m.a, m.b, m.c, m.d;
  out.lambda = lambda;
  return out;
}

cplx floquet_discriminant(const std::vector<cplx>& q, double dt, cplx lambda) {
  return 0.5 * monodromy(q, dt, lambda).m.trace();
}

void floquet_discriminant(const std::vector<cplx>& q, double dt, cplx lambda, cplx& delta,
                          cplx& d_delta) {
  check_input(q, dt);
  Mat2 m{1.0, 0.0, 0.0, 1.0}, dm{0.0, 0.0, 0.0, 0.0};
  for (cplx v : q) {
    Mat2 ds;
    Mat2 s = step(v, dt, lambda, &ds);
    dm = add(mul(s, dm), mul(ds, m));
    m = mul(s, m);
  }
  delta = 0.5 * (m.a + m.d);
  d_delta = 0.5 * (dm.a + dm.d);
}

SpectrumEstimate find_main_spectrum(const std::vector<cplx>& q, double dt, const SearchBox& box,
                                    const RootSearchOptions& opt) {
  check_input(q, dt);
  if (box.im_min < 0.0 || box.im_max <= box.im_min || box.re_max <= box.re_min)
    throw std::invalid_argument("search box must be a nonempty rectangle in the upper half plane");
  const int nx = opt.nx, ny = opt.ny;
  const double hx = (box.re_max - box.re_min) / nx, hy = (box.im_max - box.im_min) / ny;
  std::vector<double> val(static_cast<std::size_t>(nx) * ny);
  auto at = [&](int i, int j) -> double& { return val[static_cast<std::size_t>(j) * nx + i]; };
  auto centre = [&](int i, int j) {
    return cplx(box.re_min + (i + 0.5) * hx, box.im_min + (j + 0.5) * hy);
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      // Newton step length on Delta^2 - 1; unlike |Delta^2 - 1| it is not
      // swamped by the exponential growth of Delta away from the real axis.
      cplx d, dd;
      floquet_discriminant(q, dt, centre(i, j), d, dd);
      double den = std::abs(2.0 * d * dd);
      at(i, j) = den > 0.0 ? std::abs(d * d - 1.0) / den : HUGE_VAL;
    }

  SpectrumEstimate est;
  const double max_step = 2.0 * std::hypot(hx, hy);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double v = at(i, j);
      bool is_min = true;
      for (int dj = -1; dj <= 1 && is_min; ++dj)
        for (int di = -1; di <= 1; ++di) {
          int a = i + di, b = j + dj;
          if ((di == 0 && dj == 0) || a < 0 || b < 0 || a >= nx || b >= ny) continue;
          if (at(a, b) < v) {
            is_min = false;
            break;
          }
        }
      if (!is_min) continue;
      // Plain Newton first, then retries from the same seed with the known
      // roots divided out; close pairs often share a single minimum cell.
      for (int attempt = 0; attempt < 3; ++attempt) {
        cplx lam = centre(i, j);
        double res = 0.0;
        bool ok;
        if (attempt == 0) {
          ok = newton(q, dt, lam, res, &box, opt, max_step);
        } else {
          std::vector<int> mult;
          for (cplx r : est.points) {
            cplx d, dd;
            floquet_discriminant(q, dt, r, d, dd);
            mult.push_back(std::abs(dd) < 1e-2 * period_of(q, dt) ? 2 : 1);
          }
          ok = deflated_newton(q, dt, lam, est.points, mult, box, opt, max_step) &&
               newton(q, dt, lam, res, &box, opt, 0.1 * max_step);
        }
        if (!ok || lam.imag() < opt.band_edge || !is_new(est, lam, opt)) {
          if (attempt > 0) break;
          continue;
        }
        keep_root(est, lam, res, opt);
      }
    }
  return est;
}

SpectrumEstimate refine_main_spectrum(const std::vector<cplx>& q, double dt,
                                      const std::vector<cplx>& seeds,
                                      const RootSearchOptions& opt) {
  check_input(q, dt);
  SpectrumEstimate est;
  for (cplx s : seeds) {
    cplx lam = s;
    double res = 0.0;
    if (newton(q, dt, lam, res, nullptr, opt, 0.25)) keep_root(est, lam, res, opt);
  }
  return est;
}

SpectrumEstimate reduce_spectrum(const SpectrumEstimate& est, int n) {
  if (n < 1) throw std::invalid_argument("reduce_spectrum needs n >= 1");
  std::vector<std::size_t> idx(est.points.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    cplx pa = est.points[a], pb = est.points[b];
    if (pa.imag() != pb.imag()) return pa.imag() > pb.imag();
    return pa.real() < pb.real();
  });
  SpectrumEstimate out;
  for (std::size_t k = 0; k < idx.size() && static_cast<int>(k) < n; ++k) {
    out.points.push_back(est.points[idx[k]]);
    out.residuals.push_back(est.residuals[idx[k]]);
  }
  out.shortfall = static_cast<int>(out.points.size()) < n;
  return out;
}

}  // namespace pnft
