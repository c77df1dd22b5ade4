#include "pnft/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace pnft::fft {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanPair {
  fftw_plan fwd;
  fftw_plan bwd;
};

// Plans are created once per length and kept for the process lifetime.
const PlanPair& plans_for(int n) {
  static std::map<int, PlanPair> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  fftw_complex* buf = fftw_alloc_complex(n);
  unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p{fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags),
             fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags)};
  fftw_free(buf);
  return cache.emplace(n, p).first->second;
}

fftw_complex* raw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Plan::Plan(int n) : n_(n) {
  if (n <= 0) throw std::invalid_argument("fft length must be positive");
  const PlanPair& p = plans_for(n);
  fwd_ = p.fwd;
  bwd_ = p.bwd;
}

void Plan::forward(cplx* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(fwd_), raw(data), raw(data));
}

void Plan::inverse(cplx* data) const {
  fftw_execute_dft(static_cast<fftw_plan>(bwd_), raw(data), raw(data));
}

std::vector<cplx> forward(const std::vector<cplx>& x) {
  std::vector<cplx> y = x;
  if (!y.empty()) Plan(static_cast<int>(y.size())).forward(y.data());
  return y;
}

std::vector<cplx> inverse(const std::vector<cplx>& X) {
  std::vector<cplx> y = X;
  if (y.empty()) return y;
  Plan(static_cast<int>(y.size())).inverse(y.data());
  double s = 1.0 / static_cast<double>(y.size());
  for (auto& v : y) v *= s;
  return y;
}

std::vector<cplx> resample(const std::vector<cplx>& x, int m) {
  const int n = static_cast<int>(x.size());
  if (n == 0 || m <= 0) throw std::invalid_argument("resample needs nonempty input and output");
  if (m == n) return x;
  std::vector<cplx> X = forward(x);
  std::vector<cplx> Y(m, 0.0);
  for (int k = 0; k < n; ++k) {
    int f = bin_index(k, n);
    if (n < m) {
      if (n % 2 == 0 && k == n / 2) {
        // Split the Nyquist bin symmetrically.
        Y[(f + m) % m] += 0.5 * X[k];
        Y[(-f + m) % m] += 0.5 * X[k];
      } else {
        Y[(f + m) % m] = X[k];
      }
    } else if (2 * std::abs(f) < m) {
      Y[(f + m) % m] += X[k];
    } else if (m % 2 == 0 && 2 * std::abs(f) == m) {
      Y[m / 2] += X[k];
    }
  }
  std::vector<cplx> y = inverse(Y);
  double s = static_cast<double>(m) / n;
  for (auto& v : y) v *= s;
  return y;
}

std::vector<cplx> derivative(const std::vector<cplx>& x, double len, int order) {
  const int n = static_cast<int>(x.size());
  std::vector<cplx> X = forward(x);
  for (int k = 0; k < n; ++k) {
    int f = bin_index(k, n);
    if (n % 2 == 0 && k == n / 2 && order % 2 == 1) {
      X[k] = 0.0;
      continue;
    }
    cplx w(0.0, 2.0 * kPi * f / len);
    cplx fac = 1.0;
    for (int o = 0; o < order; ++o) fac *= w;
    X[k] *= fac;
  }
  return inverse(X);
}

}  // namespace pnft::fft
