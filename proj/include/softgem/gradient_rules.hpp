#pragma once

// Constrained gradient update rules for episodic-memory continual learning.
//
// Every rule consumes the gradient g of the current mini-batch and one or
// more reference gradients computed on stored samples of earlier tasks, and
// returns the direction the optimizer should step along:
//
//   agem_project     g~ = g - (g'g_ref / g_ref'g_ref) g_ref
//   soft_gem_update  g~ = gh - (gh'gh_ref - eps) / (gh_ref'gh_ref) gh_ref
//   aagem_update     g~ = (gh + gh_ref) / 2
//   gem_project      argmin |g - g~|^2  s.t. <g~, g_k> >= 0 for every k
//
// where gh = g/|g|. All rules are applied only when the constraint is
// violated (g'g_ref < 0); otherwise g is returned untouched.
//
// The rules are templated on the scalar type; the library instantiates them
// with double.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "softgem/errors.hpp"

namespace softgem {

template <typename Scalar> using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using FlatGradient = Vector<double>;

// Norms at or below this floor are treated as a degenerate (zero) gradient.
inline constexpr double kZeroGradientFloor = 1e-12;

enum class RuleStatus {
  PassThrough, // no violation, g returned unchanged
  Projected,   // violation, g replaced by the rule's output
  ZeroUpdate,  // violation, rule produced the zero vector; skip the step
};

template <typename Scalar> struct Update {
  Vector<Scalar> direction;
  RuleStatus status = RuleStatus::PassThrough;

  bool projected() const { return status != RuleStatus::PassThrough; }
};

// Soft margin of the epsilon rule, constrained to [0, 1].
class SoftConstraint {
public:
  explicit SoftConstraint(double epsilon) : epsilon_(epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
      throw InvalidEpsilon("epsilon " + std::to_string(epsilon) +
                           " outside [0, 1]");
  }
  double value() const noexcept { return epsilon_; }

private:
  double epsilon_;
};

namespace detail {

template <typename Scalar>
void require_finite(const Vector<Scalar> &v, const char *name) {
  if (!v.allFinite())
    throw NonFiniteGradient(std::string(name) + " has NaN/Inf components");
}

template <typename Scalar>
void require_same_length(const Vector<Scalar> &a, const Vector<Scalar> &b) {
  if (a.size() != b.size())
    throw ShapeMismatch("gradient lengths " + std::to_string(a.size()) +
                        " and " + std::to_string(b.size()));
}

template <typename Scalar>
Scalar require_nonzero(const Vector<Scalar> &v, const char *name) {
  require_finite(v, name);
  const Scalar norm = v.norm();
  if (!(norm > Scalar(kZeroGradientFloor)))
    throw ZeroGradient(std::string(name) + " norm " + std::to_string(double(norm)) +
                       " at or below floor");
  return norm;
}

} // namespace detail

template <typename Scalar> Vector<Scalar> normalize(const Vector<Scalar> &g) {
  const Scalar norm = detail::require_nonzero(g, "g");
  return g / norm;
}

// True when the update would increase the reference loss (g'g_ref < 0).
// Orthogonal gradients are not a violation.
template <typename Scalar>
bool violation_check(const Vector<Scalar> &g, const Vector<Scalar> &g_ref) {
  detail::require_same_length(g, g_ref);
  detail::require_nonzero(g, "g");
  detail::require_nonzero(g_ref, "g_ref");
  return g.dot(g_ref) < Scalar(0);
}

template <typename Scalar>
Update<Scalar> agem_project(const Vector<Scalar> &g, const Vector<Scalar> &g_ref) {
  detail::require_same_length(g, g_ref);
  detail::require_finite(g, "g");
  detail::require_nonzero(g_ref, "g_ref");
  const Scalar dot = g.dot(g_ref);
  if (!(dot < Scalar(0)))
    return {g, RuleStatus::PassThrough};
  return {g - (dot / g_ref.squaredNorm()) * g_ref, RuleStatus::Projected};
}

// With epsilon == 0 this is exactly agem_project on the unnormalized
// gradients; any positive epsilon works on the unit vectors gh, gh_ref and
// yields g~'gh_ref == epsilon on violation.
template <typename Scalar>
Update<Scalar> soft_gem_update(const Vector<Scalar> &g, const Vector<Scalar> &g_ref,
                               SoftConstraint eps) {
  if (eps.value() == 0.0)
    return agem_project(g, g_ref);
  if (!violation_check(g, g_ref))
    return {g, RuleStatus::PassThrough};
  const Vector<Scalar> g_hat = g / g.norm();
  const Vector<Scalar> ref_hat = g_ref / g_ref.norm();
  const Scalar shift = (g_hat.dot(ref_hat) - Scalar(eps.value())) / ref_hat.squaredNorm();
  return {g_hat - shift * ref_hat, RuleStatus::Projected};
}

template <typename Scalar>
Update<Scalar> aagem_update(const Vector<Scalar> &g, const Vector<Scalar> &g_ref) {
  if (!violation_check(g, g_ref))
    return {g, RuleStatus::PassThrough};
  Vector<Scalar> avg = Scalar(0.5) * (g / g.norm() + g_ref / g_ref.norm());
  if ((avg.array() == Scalar(0)).all())
    return {std::move(avg), RuleStatus::ZeroUpdate};
  return {std::move(avg), RuleStatus::Projected};
}

// Reference gradients g_1..g_{t-1}, one column per earlier task.
template <typename Scalar> class ConstraintSet {
public:
  explicit ConstraintSet(std::span<const Vector<Scalar>> gradients) {
    if (gradients.empty())
      throw ShapeMismatch("constraint set is empty");
    const auto dim = gradients.front().size();
    columns_.resize(dim, static_cast<Eigen::Index>(gradients.size()));
    for (std::size_t k = 0; k < gradients.size(); ++k) {
      if (gradients[k].size() != dim)
        throw ShapeMismatch("constraint " + std::to_string(k) + " has length " +
                            std::to_string(gradients[k].size()) + ", expected " +
                            std::to_string(dim));
      detail::require_finite(gradients[k], "g_k");
      columns_.col(static_cast<Eigen::Index>(k)) = gradients[k];
    }
  }
  ConstraintSet(std::initializer_list<Vector<Scalar>> gradients)
      : ConstraintSet(std::span<const Vector<Scalar>>(gradients.begin(), gradients.size())) {}

  Eigen::Index size() const { return columns_.cols(); }
  Eigen::Index dim() const { return columns_.rows(); }
  const Matrix<Scalar> &columns() const { return columns_; }

private:
  Matrix<Scalar> columns_;
};

struct GemSolverOptions {
  int max_iterations = 10000;
  double tolerance = 1e-8;
};

template <typename Scalar> struct GemSolution {
  Update<Scalar> update;
  Vector<Scalar> multipliers; // one per constraint, in units of |g| / |g_k|
  int iterations = 0;
  double residual = 0.0;
};

// Solves the GEM quadratic program through its dual
//
//   minimize_v  1/2 v'Qv + p'v   subject to v >= 0,
//
// with g~ = g + G v. The problem is first rescaled to unit g and unit
// columns so Q has a unit diagonal, trace(Q) = m bounds its largest
// eigenvalue, and the KKT residual |min(v, Qv + p)|_inf is dimensionless.
// The iteration is projected gradient with step 1/trace(Q) plus Nesterov
// momentum with gradient restart.
template <typename Scalar>
GemSolution<Scalar> solve_gem(const Vector<Scalar> &g, const ConstraintSet<Scalar> &constraints,
                              GemSolverOptions opts = {}) {
  if (g.size() != constraints.dim())
    throw ShapeMismatch("gradient length " + std::to_string(g.size()) +
                        " differs from constraint length " + std::to_string(constraints.dim()));
  detail::require_finite(g, "g");
  const Matrix<Scalar> &G = constraints.columns();
  const Eigen::Index m = G.cols();

  GemSolution<Scalar> out;
  out.multipliers = Vector<Scalar>::Zero(m);
  const Vector<Scalar> raw_dots = G.transpose() * g;
  if ((raw_dots.array() >= Scalar(0)).all()) {
    out.update = {g, RuleStatus::PassThrough};
    return out;
  }

  const Scalar g_norm = g.norm();
  std::vector<Eigen::Index> active;
  for (Eigen::Index k = 0; k < m; ++k)
    if (G.col(k).norm() > Scalar(kZeroGradientFloor))
      active.push_back(k);

  Matrix<Scalar> U(G.rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t j = 0; j < active.size(); ++j)
    U.col(static_cast<Eigen::Index>(j)) = G.col(active[j]).normalized();
  const Vector<Scalar> g_hat = g / g_norm;
  const Matrix<Scalar> Q = U.transpose() * U;
  const Vector<Scalar> p = U.transpose() * g_hat;
  const Scalar step = Scalar(1) / Q.trace();

  auto residual_at = [&](const Vector<Scalar> &v) {
    const Vector<Scalar> grad = Q * v + p;
    return double(v.cwiseMin(grad).cwiseAbs().maxCoeff());
  };

  Vector<Scalar> v = Vector<Scalar>::Zero(U.cols());
  Vector<Scalar> y = v;
  Scalar momentum = 1;
  double residual = residual_at(v);
  int it = 0;
  while (residual >= opts.tolerance && it < opts.max_iterations) {
    ++it;
    const Vector<Scalar> grad = Q * y + p;
    const Vector<Scalar> next = (y - step * grad).cwiseMax(Scalar(0));
    Scalar next_momentum = (Scalar(1) + std::sqrt(Scalar(1) + 4 * momentum * momentum)) / 2;
    if (grad.dot(next - v) > Scalar(0)) {
      y = next;
      next_momentum = 1;
    } else {
      y = next + ((momentum - 1) / next_momentum) * (next - v);
    }
    v = next;
    momentum = next_momentum;
    residual = residual_at(v);
  }
  out.iterations = it;
  out.residual = residual;
  if (residual >= opts.tolerance)
    throw SolverNotConverged(residual, it);

  for (std::size_t j = 0; j < active.size(); ++j) {
    const auto k = active[j];
    out.multipliers(k) = v(static_cast<Eigen::Index>(j)) * g_norm / G.col(k).norm();
  }
  out.update = {g + g_norm * (U * v), RuleStatus::Projected};
  return out;
}

template <typename Scalar>
Update<Scalar> gem_project(const Vector<Scalar> &g, const ConstraintSet<Scalar> &constraints,
                           GemSolverOptions opts = {}) {
  return solve_gem(g, constraints, opts).update;
}

} // namespace softgem
