// rrrlab: exact metric-projection and reflection oracles for the constraint
// families used by the flow experiments (affine, sphere, box, finite point
// sets, coordinate products, bilinear relation blocks, consensus diagonals).
#pragma once

#include "rrrlab/base.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <optional>
#include <utility>

namespace rrrlab::sets {

struct Tolerances {
  double membership = 1e-10;         // |x - P(x)| for points already in the set
  double bilinear_residual = 1e-8;   // |u's - y| after a bilinear projection
  double orthonormal = 1e-12;        // affine tangent-basis validation
};

inline const Tolerances& default_tolerances() {
  static const Tolerances t{};
  return t;
}

struct ProjectInfo {
  bool tie = false;      // nearest point not unique; lowest index taken
  bool inexact = false;  // nonneg bilinear fallback (r > 2) could not certify exactness
};

namespace detail {

class SetBase {
 public:
  virtual ~SetBase() = default;
  virtual Eigen::Index dim() const = 0;
  virtual Vec project(const Vec& x, ProjectInfo& info) const = 0;
  virtual std::string kind() const = 0;
};

// --- bilinear block projection -------------------------------------------
//
// Stationary points of  min |u-u0|^2 + |s-s0|^2  s.t.  u's = y  are
//   u = (u0 + l*s0)/(1-l^2),  s = (s0 + l*u0)/(1-l^2),   l in (-1,1),
// and the multiplier solves the quartic
//   psi(l) = -y l^4 + (a+2y) l^2 + (p+q) l + (a-y) = 0,
// with a = u0's0, p = |u0|^2, q = |s0|^2.  Candidate roots are isolated via
// the companion matrix, then refined by safeguarded Newton with bisection
// fallback on the exact residual u(l)'s(l) - y.

inline std::vector<double> real_poly_roots(std::vector<double> coeffs) {
  // coeffs: highest degree first. Returns real roots (Im below 1e-8 scale).
  double scale = 0.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  if (scale == 0.0) return {};
  while (coeffs.size() > 1 && std::abs(coeffs.front()) <= 1e-14 * scale)
    coeffs.erase(coeffs.begin());
  const int deg = static_cast<int>(coeffs.size()) - 1;
  if (deg < 1) return {};
  if (deg == 1) return {-coeffs[1] / coeffs[0]};
  Mat companion = Mat::Zero(deg, deg);
  for (int i = 0; i < deg; ++i) companion(0, i) = -coeffs[static_cast<std::size_t>(i) + 1] / coeffs[0];
  for (int i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Mat> es(companion, /*computeEigenvectors=*/false);
  std::vector<double> roots;
  for (int i = 0; i < deg; ++i) {
    const Cplx z = es.eigenvalues()[i];
    if (std::abs(z.imag()) <= 1e-8 * (1.0 + std::abs(z.real()))) roots.push_back(z.real());
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

struct BilinearCandidate {
  Vec u, s;
  double dist2 = kInf;
};

inline void consider(std::optional<BilinearCandidate>& best, const Vec& u0, const Vec& s0,
                     Vec u, Vec s) {
  const double d2 = (u - u0).squaredNorm() + (s - s0).squaredNorm();
  if (!best || d2 < best->dist2 - 1e-15) best = BilinearCandidate{std::move(u), std::move(s), d2};
}

// Equality-only projection onto {(u,s): u's = y}. Throws if no stationary
// point can be certified (never silently wrong).
inline BilinearCandidate project_bilinear_eq(const Vec& u0, const Vec& s0, double y,
                                             double residual_tol) {
  const double a = u0.dot(s0);
  const double p = u0.squaredNorm();
  const double q = s0.squaredNorm();
  std::optional<BilinearCandidate> best;

  if (std::abs(a - y) <= residual_tol) {  // already feasible
    return BilinearCandidate{u0, s0, 0.0};
  }

  const auto eval_pair = [&](double l) -> std::pair<Vec, Vec> {
    const double den = 1.0 - l * l;
    return {(u0 + l * s0) / den, (s0 + l * u0) / den};
  };
  const auto residual = [&](double l) {
    const double den = sq(1.0 - l * l);
    return (a * (1.0 + l * l) + l * (p + q)) / den - y;
  };

  // interior stationary points
  std::vector<double> seeds =
      real_poly_roots({-y, 0.0, a + 2.0 * y, p + q, a - y});
  const double lim = 1.0 - 1e-12;
  for (double l : seeds) {
    if (!(l > -lim && l < lim)) continue;
    // safeguarded Newton on the exact residual, bisection fallback
    double lo = std::max(-lim, l - 1e-3), hi = std::min(lim, l + 1e-3);
    double flo = residual(lo), fhi = residual(hi);
    bool bracketed = (flo <= 0.0) != (fhi <= 0.0);
    double cur = l;
    for (int it = 0; it < 80; ++it) {
      const double f = residual(cur);
      if (std::abs(f) <= 1e-14 * (1.0 + std::abs(y))) break;
      const double h = 1e-7 * (1.0 + std::abs(cur));
      const double df = (residual(cur + h) - residual(cur - h)) / (2.0 * h);
      double next = (std::abs(df) > 1e-300) ? cur - f / df : cur;
      if (bracketed) {
        if ((f <= 0.0) == (flo <= 0.0)) { lo = cur; flo = f; } else { hi = cur; fhi = f; }
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      }
      if (!(next > -lim && next < lim)) break;
      if (std::abs(next - cur) <= 1e-16 * (1.0 + std::abs(cur))) { cur = next; break; }
      cur = next;
    }
    auto [u, s] = eval_pair(cur);
    if (std::abs(u.dot(s) - y) <= residual_tol) consider(best, u0, s0, std::move(u), std::move(s));
  }

  // boundary (rank-deficient) stationary families; active when u0 = +-s0.
  const double scale = std::sqrt(std::max(1.0, p + q));
  if ((u0 - s0).norm() <= 1e-8 * scale) {
    const double c2 = 0.25 * p - y;  // |w|^2 on the family u+s = u0
    if (c2 >= -1e-14) {
      Vec dir = (p > 0.0) ? Vec(u0 / std::sqrt(p)) : Vec::Unit(u0.size(), 0);
      const Vec w = std::sqrt(std::max(0.0, c2)) * dir;  // + orientation zeroes the 2nd factor
      consider(best, u0, s0, 0.5 * u0 + w, 0.5 * Vec(u0) - w);
    }
  }
  if ((u0 + s0).norm() <= 1e-8 * scale) {
    const double c2 = y + 0.25 * p;
    if (c2 >= -1e-14) {
      Vec dir = (p > 0.0) ? Vec(u0 / std::sqrt(p)) : Vec::Unit(u0.size(), 0);
      const Vec w = std::sqrt(std::max(0.0, c2)) * dir;
      consider(best, u0, s0, 0.5 * u0 + w, -0.5 * Vec(u0) + w);
    }
  }

  if (!best)
    throw std::runtime_error("project_bilinear: no stationary point bracketed (y=" +
                             std::to_string(y) + ")");
  return *best;
}

// Exact nonnegative projection for y = 0: u's = 0 with u,s >= 0 decouples
// per coordinate into "zero u_i" vs "zero s_i"; ties zero the second factor.
inline BilinearCandidate project_bilinear_zero_nonneg(const Vec& u0, const Vec& s0) {
  const Eigen::Index r = u0.size();
  Vec u(r), s(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const double keep_u = sq(u0[i] - std::max(u0[i], 0.0)) + sq(s0[i]);
    const double keep_s = sq(u0[i]) + sq(s0[i] - std::max(s0[i], 0.0));
    if (keep_u <= keep_s) {
      u[i] = std::max(u0[i], 0.0);
      s[i] = 0.0;
    } else {
      u[i] = 0.0;
      s[i] = std::max(s0[i], 0.0);
    }
  }
  return BilinearCandidate{u, s, (u - u0).squaredNorm() + (s - s0).squaredNorm()};
}

struct PatternSolution {
  Vec u, s;
  double dist2 = kInf;
  bool valid = false;
};

// Solve with prescribed pinned coordinates (u_i = 0 for i in zu, s_i = 0 for
// i in zs). Half-pinned partners decouple and clamp to [0, inf).
inline PatternSolution solve_sign_pattern(const Vec& u0, const Vec& s0, double y,
                                          unsigned zu, unsigned zs, double residual_tol) {
  const Eigen::Index r = u0.size();
  std::vector<Eigen::Index> free_pairs;
  Vec u = Vec::Zero(r), s = Vec::Zero(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    const bool pu = (zu >> i) & 1u, ps = (zs >> i) & 1u;
    if (!pu && !ps) {
      free_pairs.push_back(i);
    } else if (pu && !ps) {
      s[i] = std::max(s0[i], 0.0);
    } else if (!pu && ps) {
      u[i] = std::max(u0[i], 0.0);
    }
  }
  PatternSolution sol;
  if (free_pairs.empty()) {
    if (std::abs(y) > residual_tol) return sol;  // pinned everything but y != 0
  } else {
    Vec fu(static_cast<Eigen::Index>(free_pairs.size())), fs(fu.size());
    for (std::size_t k = 0; k < free_pairs.size(); ++k) {
      fu[static_cast<Eigen::Index>(k)] = u0[free_pairs[k]];
      fs[static_cast<Eigen::Index>(k)] = s0[free_pairs[k]];
    }
    BilinearCandidate sub;
    try {
      sub = project_bilinear_eq(fu, fs, y, residual_tol);
    } catch (const std::runtime_error&) {
      return sol;
    }
    for (std::size_t k = 0; k < free_pairs.size(); ++k) {
      u[free_pairs[k]] = sub.u[static_cast<Eigen::Index>(k)];
      s[free_pairs[k]] = sub.s[static_cast<Eigen::Index>(k)];
    }
  }
  if (u.minCoeff() < -1e-12 || s.minCoeff() < -1e-12) return sol;
  sol.u = u;
  sol.s = s;
  sol.dist2 = (u - u0).squaredNorm() + (s - s0).squaredNorm();
  sol.valid = true;
  return sol;
}

inline BilinearCandidate project_bilinear_nonneg(const Vec& u0, const Vec& s0, double y,
                                                 double residual_tol, ProjectInfo& info) {
  if (y < 0.0)
    throw std::invalid_argument("project_bilinear: u's = y < 0 infeasible with u,s >= 0");
  const Eigen::Index r = u0.size();
  if (y == 0.0) return project_bilinear_zero_nonneg(u0, s0);

  BilinearCandidate eq = project_bilinear_eq(u0, s0, y, residual_tol);
  if (eq.u.minCoeff() >= -1e-12 && eq.s.minCoeff() >= -1e-12) {
    eq.u = eq.u.cwiseMax(0.0);
    eq.s = eq.s.cwiseMax(0.0);
    return eq;
  }

  if (r <= 2) {
    // exhaustive active sign patterns, desk scale
    std::optional<BilinearCandidate> best;
    for (unsigned zu = 0; zu < (1u << r); ++zu)
      for (unsigned zs = 0; zs < (1u << r); ++zs) {
        PatternSolution ps = solve_sign_pattern(u0, s0, y, zu, zs, residual_tol);
        if (ps.valid) consider(best, u0, s0, std::move(ps.u), std::move(ps.s));
      }
    if (!best)
      throw std::runtime_error("project_bilinear: nonneg pattern search found no feasible point");
    return *best;
  }

  // r > 2: clamp-then-resolve with progressive pinning, at most 8 rounds;
  // the result is flagged inexact (global optimality not certified).
  info.inexact = true;
  unsigned zu = 0, zs = 0;
  BilinearCandidate cur = eq;
  for (int round = 0; round < 8; ++round) {
    for (Eigen::Index i = 0; i < r; ++i) {
      if (cur.u[i] < -1e-12) zu |= 1u << i;
      if (cur.s[i] < -1e-12) zs |= 1u << i;
    }
    PatternSolution ps = solve_sign_pattern(u0, s0, y, zu, zs, residual_tol);
    if (ps.valid) return BilinearCandidate{ps.u, ps.s, ps.dist2};
    // still negative somewhere: re-solve on the free set to learn the next pins
    std::vector<Eigen::Index> free_pairs;
    for (Eigen::Index i = 0; i < r; ++i)
      if (!((zu >> i) & 1u) && !((zs >> i) & 1u)) free_pairs.push_back(i);
    if (free_pairs.empty()) break;
    Vec fu(static_cast<Eigen::Index>(free_pairs.size())), fs(fu.size());
    for (std::size_t k = 0; k < free_pairs.size(); ++k) {
      fu[static_cast<Eigen::Index>(k)] = u0[free_pairs[k]];
      fs[static_cast<Eigen::Index>(k)] = s0[free_pairs[k]];
    }
    BilinearCandidate sub = project_bilinear_eq(fu, fs, y, residual_tol);
    cur.u = Vec::Zero(r);
    cur.s = Vec::Zero(r);
    for (std::size_t k = 0; k < free_pairs.size(); ++k) {
      cur.u[free_pairs[k]] = sub.u[static_cast<Eigen::Index>(k)];
      cur.s[free_pairs[k]] = sub.s[static_cast<Eigen::Index>(k)];
    }
  }
  throw std::runtime_error("project_bilinear: clamp-then-resolve failed after 8 rounds");
}

struct OracleAccess;

}  // namespace detail

class SetOracle;

namespace detail {

class AffineSet final : public SetBase {
 public:
  AffineSet(Vec basepoint, Mat tangent_basis, const Tolerances& tol)
      : p_(std::move(basepoint)), basis_(std::move(tangent_basis)) {
    if (basis_.rows() != p_.size())
      throw std::invalid_argument("affine: basis rows must match basepoint dimension");
    if (basis_.cols() > 0) {
      Mat gram = basis_.transpose() * basis_;
      gram -= Mat::Identity(basis_.cols(), basis_.cols());
      if (gram.cwiseAbs().maxCoeff() > tol.orthonormal)
        throw std::invalid_argument("affine: tangent basis not orthonormal");
    }
  }
  Eigen::Index dim() const override { return p_.size(); }
  Vec project(const Vec& x, ProjectInfo&) const override {
    if (basis_.cols() == 0) return p_;
    return p_ + basis_ * (basis_.transpose() * (x - p_));
  }
  std::string kind() const override { return "affine"; }
  const Vec& basepoint() const { return p_; }
  const Mat& basis() const { return basis_; }

 private:
  Vec p_;
  Mat basis_;  // columns orthonormal
};

class SphereSet final : public SetBase {
 public:
  SphereSet(Vec center, double radius) : c_(std::move(center)), r_(radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("sphere: radius must be positive");
  }
  Eigen::Index dim() const override { return c_.size(); }
  Vec project(const Vec& x, ProjectInfo& info) const override {
    Vec d = x - c_;
    const double nrm = d.norm();
    if (nrm == 0.0) {  // center: every direction nearest; fixed by convention
      info.tie = true;
      return c_ + r_ * Vec::Unit(c_.size(), 0);
    }
    return c_ + (r_ / nrm) * d;
  }
  std::string kind() const override { return "sphere"; }
  const Vec& center() const { return c_; }
  double radius() const { return r_; }

 private:
  Vec c_;
  double r_;
};

class BoxSet final : public SetBase {
 public:
  BoxSet(Vec lower, Vec upper) : lo_(std::move(lower)), hi_(std::move(upper)) {
    if (lo_.size() != hi_.size()) throw std::invalid_argument("box: bound dimensions differ");
    for (Eigen::Index i = 0; i < lo_.size(); ++i)
      if (!(lo_[i] <= hi_[i])) throw std::invalid_argument("box: lower > upper");
  }
  Eigen::Index dim() const override { return lo_.size(); }
  Vec project(const Vec& x, ProjectInfo&) const override {
    return x.cwiseMax(lo_).cwiseMin(hi_);
  }
  std::string kind() const override { return "box"; }
  const Vec& lower() const { return lo_; }
  const Vec& upper() const { return hi_; }

 private:
  Vec lo_, hi_;
};

class FiniteSet final : public SetBase {
 public:
  explicit FiniteSet(std::vector<Vec> points) : pts_(std::move(points)) {
    if (pts_.empty()) throw std::invalid_argument("finite: point list is empty");
    for (const Vec& q : pts_)
      if (q.size() != pts_.front().size())
        throw std::invalid_argument("finite: points of mixed dimension");
  }
  Eigen::Index dim() const override { return pts_.front().size(); }
  Vec project(const Vec& x, ProjectInfo& info) const override {
    return pts_[nearest_index(x, &info.tie)];
  }
  std::string kind() const override { return "finite"; }

  // ties broken by lowest index (deterministic on the null set)
  std::size_t nearest_index(const Vec& x, bool* tie = nullptr) const {
    std::size_t best = 0;
    double best_d = (x - pts_[0]).squaredNorm();
    bool tied = false;
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      const double d = (x - pts_[i]).squaredNorm();
      const double tol = 1e-24 * std::max(1.0, std::max(best_d, d));
      if (d < best_d - tol) {
        best = i;
        best_d = d;
        tied = false;
      } else if (std::abs(d - best_d) <= tol) {
        tied = true;
      }
    }
    if (tie) *tie = *tie || tied;
    return best;
  }
  const std::vector<Vec>& points() const { return pts_; }

 private:
  std::vector<Vec> pts_;
};

class BilinearSet final : public SetBase {
 public:
  BilinearSet(double target, Eigen::Index factor_dim, bool nonneg, const Tolerances& tol)
      : y_(target), r_(factor_dim), nonneg_(nonneg), tol_(tol) {
    if (r_ < 1) throw std::invalid_argument("bilinear: factor dimension must be >= 1");
  }
  Eigen::Index dim() const override { return 2 * r_; }
  Vec project(const Vec& x, ProjectInfo& info) const override {
    const Vec u0 = x.head(r_), s0 = x.tail(r_);
    detail::BilinearCandidate c =
        nonneg_ ? detail::project_bilinear_nonneg(u0, s0, y_, tol_.bilinear_residual, info)
                : detail::project_bilinear_eq(u0, s0, y_, tol_.bilinear_residual);
    Vec out(2 * r_);
    out << c.u, c.s;
    return out;
  }
  std::string kind() const override { return "bilinear"; }
  double target() const { return y_; }
  Eigen::Index factor_dim() const { return r_; }
  bool nonneg() const { return nonneg_; }

 private:
  double y_;
  Eigen::Index r_;
  bool nonneg_;
  Tolerances tol_;
};

class ConsensusSet final : public SetBase {
 public:
  ConsensusSet(Eigen::Index copies, Eigen::Index copy_dim, bool nonneg)
      : k_(copies), d_(copy_dim), nonneg_(nonneg) {
    if (k_ < 1 || d_ < 1) throw std::invalid_argument("consensus: need copies >= 1, dim >= 1");
  }
  Eigen::Index dim() const override { return k_ * d_; }
  Vec project(const Vec& x, ProjectInfo&) const override {
    Vec mean = Vec::Zero(d_);
    for (Eigen::Index j = 0; j < k_; ++j) mean += x.segment(j * d_, d_);
    mean /= static_cast<double>(k_);
    if (nonneg_) mean = mean.cwiseMax(0.0);
    Vec out(k_ * d_);
    for (Eigen::Index j = 0; j < k_; ++j) out.segment(j * d_, d_) = mean;
    return out;
  }
  std::string kind() const override { return "consensus"; }
  Eigen::Index copies() const { return k_; }
  Eigen::Index copy_dim() const { return d_; }
  bool nonneg() const { return nonneg_; }

 private:
  Eigen::Index k_, d_;
  bool nonneg_;
};

struct ProductChild {
  std::shared_ptr<const SetBase> oracle;
  std::vector<Eigen::Index> idx;  // coordinates this block owns
};

class ProductSet final : public SetBase {
 public:
  ProductSet(std::vector<ProductChild> children, Eigen::Index total_dim)
      : children_(std::move(children)), dim_(total_dim) {
    std::vector<Eigen::Index> all;
    for (const auto& ch : children_) {
      if (static_cast<Eigen::Index>(ch.idx.size()) != ch.oracle->dim())
        throw std::invalid_argument("product: index list size must equal child dimension");
      all.insert(all.end(), ch.idx.begin(), ch.idx.end());
    }
    std::sort(all.begin(), all.end());
    if (static_cast<Eigen::Index>(all.size()) != dim_)
      throw std::invalid_argument("product: blocks must partition the coordinates");
    for (Eigen::Index i = 0; i < dim_; ++i)
      if (all[static_cast<std::size_t>(i)] != i)
        throw std::invalid_argument("product: blocks must partition the coordinates");
  }
  Eigen::Index dim() const override { return dim_; }
  Vec project(const Vec& x, ProjectInfo& info) const override {
    Vec out(dim_);
    for (const auto& ch : children_) {
      Vec sub(static_cast<Eigen::Index>(ch.idx.size()));
      for (std::size_t k = 0; k < ch.idx.size(); ++k) sub[static_cast<Eigen::Index>(k)] = x[ch.idx[k]];
      Vec proj = ch.oracle->project(sub, info);
      for (std::size_t k = 0; k < ch.idx.size(); ++k) out[ch.idx[k]] = proj[static_cast<Eigen::Index>(k)];
    }
    return out;
  }
  std::string kind() const override { return "product"; }
  const std::vector<ProductChild>& children() const { return children_; }

 private:
  std::vector<ProductChild> children_;
  Eigen::Index dim_;
};

}  // namespace detail

// Immutable value handle; safe to share across worker threads.
class SetOracle {
 public:
  SetOracle() = default;

  static SetOracle affine(Vec basepoint, Mat tangent_basis,
                          const Tolerances& tol = default_tolerances()) {
    return SetOracle(std::make_shared<detail::AffineSet>(std::move(basepoint),
                                                         std::move(tangent_basis), tol));
  }
  static SetOracle sphere(Vec center, double radius) {
    return SetOracle(std::make_shared<detail::SphereSet>(std::move(center), radius));
  }
  static SetOracle box(Vec lower, Vec upper) {
    return SetOracle(std::make_shared<detail::BoxSet>(std::move(lower), std::move(upper)));
  }
  static SetOracle finite(std::vector<Vec> points) {
    return SetOracle(std::make_shared<detail::FiniteSet>(std::move(points)));
  }
  static SetOracle bilinear(double target, Eigen::Index factor_dim, bool nonneg,
                            const Tolerances& tol = default_tolerances()) {
    return SetOracle(std::make_shared<detail::BilinearSet>(target, factor_dim, nonneg, tol));
  }
  static SetOracle consensus(Eigen::Index copies, Eigen::Index copy_dim, bool nonneg) {
    return SetOracle(std::make_shared<detail::ConsensusSet>(copies, copy_dim, nonneg));
  }

  bool valid() const { return impl_ != nullptr; }
  Eigen::Index dim() const { return impl_->dim(); }
  std::string kind() const { return impl_->kind(); }

  Vec project(const Vec& x) const {
    ProjectInfo info;
    return project(x, info);
  }
  Vec project(const Vec& x, ProjectInfo& info) const {
    if (x.size() != impl_->dim())
      throw std::invalid_argument("project: point dimension " + std::to_string(x.size()) +
                                  " does not match set dimension " + std::to_string(impl_->dim()));
    return impl_->project(x, info);
  }
  // R = 2P - Id, same arithmetic as project
  Vec reflect(const Vec& x) const {
    ProjectInfo info;
    return reflect(x, info);
  }
  Vec reflect(const Vec& x, ProjectInfo& info) const { return 2.0 * project(x, info) - x; }

  double distance(const Vec& x) const { return (x - project(x)).norm(); }
  bool contains(const Vec& x, double tol) const { return distance(x) <= tol; }

  // kind-specific views (nullptr when the oracle is of another kind)
  const detail::AffineSet* as_affine() const { return dynamic_cast<const detail::AffineSet*>(impl_.get()); }
  const detail::SphereSet* as_sphere() const { return dynamic_cast<const detail::SphereSet*>(impl_.get()); }
  const detail::BoxSet* as_box() const { return dynamic_cast<const detail::BoxSet*>(impl_.get()); }
  const detail::FiniteSet* as_finite() const { return dynamic_cast<const detail::FiniteSet*>(impl_.get()); }
  const detail::BilinearSet* as_bilinear() const { return dynamic_cast<const detail::BilinearSet*>(impl_.get()); }
  const detail::ConsensusSet* as_consensus() const { return dynamic_cast<const detail::ConsensusSet*>(impl_.get()); }
  const detail::ProductSet* as_product() const { return dynamic_cast<const detail::ProductSet*>(impl_.get()); }

 private:
  explicit SetOracle(std::shared_ptr<const detail::SetBase> impl) : impl_(std::move(impl)) {}
  friend struct detail::OracleAccess;
  std::shared_ptr<const detail::SetBase> impl_;
};

namespace detail {
// internal: lets product construction and serialization cross the handle
struct OracleAccess {
  static SetOracle wrap(std::shared_ptr<const SetBase> p) { return SetOracle(std::move(p)); }
  static const std::shared_ptr<const SetBase>& impl(const SetOracle& s) { return s.impl_; }
};
}  // namespace detail

struct ProductBlock {
  SetOracle oracle;
  std::vector<Eigen::Index> indices;  // empty: takes the next contiguous range
};

inline SetOracle make_product(std::vector<ProductBlock> blocks) {
  Eigen::Index total = 0;
  for (const auto& b : blocks)
    total = b.indices.empty()
                ? total + b.oracle.dim()
                : std::max(total, 1 + *std::max_element(b.indices.begin(), b.indices.end()));
  std::vector<detail::ProductChild> children;
  Eigen::Index cursor = 0;
  for (auto& b : blocks) {
    detail::ProductChild ch;
    ch.oracle = detail::OracleAccess::impl(b.oracle);
    if (b.indices.empty()) {
      ch.idx.resize(static_cast<std::size_t>(b.oracle.dim()));
      std::iota(ch.idx.begin(), ch.idx.end(), cursor);
      cursor += b.oracle.dim();
    } else {
      ch.idx = std::move(b.indices);
    }
    children.push_back(std::move(ch));
  }
  return detail::OracleAccess::wrap(
      std::make_shared<detail::ProductSet>(std::move(children), total));
}

// Free-function forms used throughout tests and the CLI.
inline Vec project(const SetOracle& set, const Vec& x) { return set.project(x); }
inline Vec reflect(const SetOracle& set, const Vec& x) { return set.reflect(x); }

struct BilinearResult {
  Vec u, s;
  ProjectInfo info;
};

inline BilinearResult project_bilinear(const Vec& u0, const Vec& s0, double y, bool nonneg,
                                       const Tolerances& tol = default_tolerances()) {
  if (u0.size() != s0.size()) throw std::invalid_argument("project_bilinear: factor sizes differ");
  if (u0.size() < 1) throw std::invalid_argument("project_bilinear: empty factors");
  BilinearResult res;
  detail::BilinearCandidate c =
      nonneg ? detail::project_bilinear_nonneg(u0, s0, y, tol.bilinear_residual, res.info)
             : detail::project_bilinear_eq(u0, s0, y, tol.bilinear_residual);
  res.u = std::move(c.u);
  res.s = std::move(c.s);
  return res;
}

inline Vec project_consensus(const std::vector<Vec>& copies, bool nonneg) {
  if (copies.empty()) throw std::invalid_argument("project_consensus: no copies");
  const Eigen::Index d = copies.front().size();
  Vec mean = Vec::Zero(d);
  for (const Vec& c : copies) {
    if (c.size() != d) throw std::invalid_argument("project_consensus: copy dimensions differ");
    mean += c;
  }
  mean /= static_cast<double>(copies.size());
  if (nonneg) mean = mean.cwiseMax(0.0);
  return mean;
}

}  // namespace rrrlab::sets
