#pragma once

// Test-only reference solvers. None of these share code with the library's
// update rules; they solve the same optimization problems by independent
// routes (explicit KKT systems, exhaustive active-set enumeration).

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline VectorXd random_vector(std::mt19937_64 &rng, Eigen::Index dim, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    v(i) = n(rng);
  return v;
}

// Draws (g, g_ref) with g'g_ref < 0 by flipping g when needed.
inline std::pair<VectorXd, VectorXd> random_violating_pair(std::mt19937_64 &rng,
                                                           Eigen::Index dim) {
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (;;) {
    VectorXd g = random_vector(rng, dim, scale(rng));
    VectorXd r = random_vector(rng, dim, scale(rng));
    const double d = g.dot(r);
    if (d == 0.0)
      continue;
    if (d > 0)
      g = -g;
    return {g, r};
  }
}

// argmin 1/2 |u - z|^2 s.t. z'w >= eps, with u and w already unit vectors.
// Inactive case returns u; otherwise solves the bordered KKT system
//   [ I   -w ] [z    ]   [u  ]
//   [ w'   0 ] [alpha] = [eps]
inline VectorXd soft_constraint_qp(const VectorXd &u, const VectorXd &w, double eps) {
  if (u.dot(w) >= eps)
    return u;
  const Eigen::Index n = u.size();
  MatrixXd K = MatrixXd::Zero(n + 1, n + 1);
  K.topLeftCorner(n, n).setIdentity();
  K.topRightCorner(n, 1) = -w;
  K.bottomLeftCorner(1, n) = w.transpose();
  VectorXd rhs(n + 1);
  rhs.head(n) = u;
  rhs(n) = eps;
  return K.fullPivLu().solve(rhs).head(n);
}

// Exact minimizer of 1/2 |g - z|^2 s.t. z'c_k >= 0 for the columns c_k of C,
// by enumerating every active set (2^m subsets, m <= ~4). For each subset
// the equality-constrained projection is computed; the best feasible one is
// the optimum because the true solution is the projection onto one face.
inline VectorXd gem_qp_bruteforce(const VectorXd &g, const MatrixXd &C) {
  const Eigen::Index m = C.cols();
  VectorXd best = g;
  double best_dist = std::numeric_limits<double>::infinity();
  const double scale = g.norm() * C.colwise().norm().maxCoeff();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index k = 0; k < m; ++k)
      if (mask & (1u << k))
        idx.push_back(k);
    VectorXd z = g;
    if (!idx.empty()) {
      MatrixXd A(g.size(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j)
        A.col(static_cast<Eigen::Index>(j)) = C.col(idx[j]);
      // projection of g onto the orthogonal complement of span(A)
      const VectorXd coeff = A.completeOrthogonalDecomposition().solve(g);
      z = g - A * coeff;
    }
    const VectorXd dots = C.transpose() * z;
    if (dots.minCoeff() < -1e-10 * scale)
      continue;
    const double dist = (g - z).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = z;
    }
  }
  return best;
}

} // namespace oracle
