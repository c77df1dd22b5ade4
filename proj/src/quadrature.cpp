#include "quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace pnft::detail {

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("quadrature needs at least one node");
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int k = 0; k < n; ++k) {
    r.x[k] = es.eigenvalues()[k];
    double v = es.eigenvectors()(0, k);
    r.w[k] = 2.0 * v * v;
  }
  // Symmetrize to remove eigen-solver noise.
  for (int k = 0; k < n / 2; ++k) {
    double x = 0.5 * (r.x[n - 1 - k] - r.x[k]);
    double w = 0.5 * (r.w[n - 1 - k] + r.w[k]);
    r.x[k] = -x;
    r.x[n - 1 - k] = x;
    r.w[k] = r.w[n - 1 - k] = w;
  }
  if (n % 2 == 1) r.x[n / 2] = 0.0;
  return cache.emplace(n, std::move(r)).first->second;
}

}  // namespace pnft::detail
