#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cellpol/model.hpp"
#include "cellpol/nodal.hpp"
#include "cellpol/surface_field.hpp"

namespace testing {

inline cellpol::SurfaceField random_field(cellpol::GridPtr grid, std::uint64_t seed, double decay = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> c(grid->ncoeff());
  for (int l = 0; l <= grid->L(); ++l)
    for (int m = -l; m <= l; ++m) c[cellpol::sh_index(l, m)] = n(rng) / std::pow(1.0 + l, decay);
  return cellpol::SurfaceField::from_coeffs(grid, std::move(c));
}

inline Eigen::VectorXd nodes(const cellpol::SurfaceField& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.values().data(), Eigen::Index(f.values().size()));
}

inline double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

inline double max_abs(const cellpol::SurfaceField& a, const cellpol::SurfaceField& b) {
  return max_abs(a.coeffs(), b.coeffs());
}

// Dense -Delta on grid values assembled column by column through transforms.
inline Eigen::MatrixXd neg_laplacian_by_columns(const cellpol::SphereGrid& g) {
  const int n = g.size();
  Eigen::MatrixXd A(n, n);
  for (int j = 0; j < n; ++j) A.col(j) = cellpol::nodal_neg_laplacian(g, Eigen::VectorXd::Unit(n, j));
  return A;
}

// Minimiser of 1/2 u.Hu - b.u over u >= 0 by the Lawson-Hanson primal
// active-set method: grow the free set one node at a time by the largest
// gradient, back off along the segment when a free value turns negative.
inline Eigen::VectorXd active_set_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& b, double tol = 1e-13,
                                     int* iterations = nullptr) {
  const int n = int(b.size());
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  std::vector<char> free(n, 0);
  const double scale = b.cwiseAbs().maxCoeff();
  int it = 0;
  auto solve_free = [&] {
    std::vector<int> P;
    for (int i = 0; i < n; ++i)
      if (free[i]) P.push_back(i);
    const int k = int(P.size());
    Eigen::MatrixXd Hp(k, k);
    Eigen::VectorXd bp(k);
    for (int a = 0; a < k; ++a) {
      bp(a) = b(P[a]);
      for (int c = 0; c < k; ++c) Hp(a, c) = H(P[a], P[c]);
    }
    Eigen::VectorXd zp = Hp.ldlt().solve(bp);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < k; ++a) z(P[a]) = zp(a);
    return z;
  };
  for (; it < 10 * n; ++it) {
    Eigen::VectorXd grad = b - H * u;
    int j = -1;
    double best = tol * scale;
    for (int i = 0; i < n; ++i)
      if (!free[i] && grad(i) > best) best = grad(i), j = i;
    if (j < 0) break;
    free[j] = 1;
    while (true) {
      Eigen::VectorXd z = solve_free();
      bool ok = true;
      for (int i = 0; i < n; ++i)
        if (free[i] && z(i) <= 0) ok = false;
      if (ok) {
        u = z;
        break;
      }
      double t = 1.0;
      for (int i = 0; i < n; ++i)
        if (free[i] && z(i) <= 0) t = std::min(t, u(i) / (u(i) - z(i)));
      u += t * (z - u);
      for (int i = 0; i < n; ++i)
        if (free[i] && u(i) <= 1e-300) free[i] = 0, u(i) = 0.0;
    }
  }
  if (iterations) *iterations = it;
  return u;
}

struct Scalar {
  double U, v, w;
};

// Constant-signal state of the eps-system by bisection on U:
// K(U) v = R(U), a5 v = a6 w, 4 pi U + eps (4 pi v + vol w) = m.
inline Scalar scalar_oracle(const cellpol::ModelParams& p, double c) {
  const double four_pi = 4.0 * std::numbers::pi;
  const double e = p.eps;
  const double vol = p.infinite_D() ? p.bulk_volume : four_pi / 3.0;
  auto v_of = [&](double U) {
    double K = e * p.a1 + e * p.a2 * U / (e * p.a3 + U) + c;
    return p.a4 * U / (e + U) / K;
  };
  auto mass = [&](double U) { return four_pi * U + e * (four_pi + vol * p.a5 / p.a6) * v_of(U); };
  double lo = 0.0, hi = p.mass / four_pi;
  for (int k = 0; k < 200 && hi - lo > 1e-16 * hi; ++k) {
    double mid = 0.5 * (lo + hi);
    (mass(mid) < p.mass ? lo : hi) = mid;
  }
  double U = 0.5 * (lo + hi), v = v_of(U);
  return {U, v, p.a5 * v / p.a6};
}

}  // namespace testing
