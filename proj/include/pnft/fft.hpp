#pragma once

#include <complex>
#include <vector>

namespace pnft::fft {

using cplx = std::complex<double>;

// Unnormalized forward transform, X_k = sum_n x_n exp(-2 pi i k n / N).
std::vector<cplx> forward(const std::vector<cplx>& x);
// Inverse including the 1/N factor.
std::vector<cplx> inverse(const std::vector<cplx>& X);

// In-place transforms for a fixed length; safe to share across threads.
class Plan {
 public:
  explicit Plan(int n);
  int size() const { return n_; }
  void forward(cplx* data) const;
  void inverse(cplx* data) const;  // unnormalized

 private:
  int n_;
  void* fwd_;
  void* bwd_;
};

// Signed frequency index of FFT bin k for length n.
inline int bin_index(int k, int n) { return k <= (n - 1) / 2 ? k : k - n; }

// Band-limited periodic resampling to m points.
std::vector<cplx> resample(const std::vector<cplx>& x, int m);

// Spectral derivatives of a periodic sequence spanning period len.
std::vector<cplx> derivative(const std::vector<cplx>& x, double len, int order);

}  // namespace pnft::fft
