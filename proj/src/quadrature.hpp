#pragma once

#include <vector>

namespace pnft::detail {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// Gauss-Legendre rule with n nodes (Golub-Welsch), cached per n.
const GaussRule& gauss_legendre(int n);

}  // namespace pnft::detail
