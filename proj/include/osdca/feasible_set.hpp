#ifndef OSDCA_FEASIBLE_SET_HPP
#define OSDCA_FEASIBLE_SET_HPP

#include "osdca/core.hpp"

#include <cmath>
#include <concepts>
#include <limits>

namespace osdca {

/// A closed convex set the solvers can work over. Only the Euclidean ball is
/// shipped; other sets plug in by modelling this concept.
template <class S>
concept projectable_set = requires(const S& s, const vector& x) {
  { s.dimension() } -> std::convertible_to<index_t>;
  { s.project(x) } -> std::same_as<vector>;
  { s.contains(x) } -> std::same_as<bool>;
  // Euclidean projection of a direction d onto the normal cone of the set at x.
  { s.normal_cone_projection(x, x) } -> std::same_as<vector>;
};

class ball {
 public:
  ball(double radius, vector center, double tolerance = 1e-10)
      : radius_(radius), center_(std::move(center)), tolerance_(tolerance) {
    if (!(radius_ > 0.0) || !std::isfinite(radius_))
      throw error("ball: radius must be positive and finite");
    if (!center_.allFinite()) throw error("ball: center must be finite");
  }

  static ball unit(index_t dim) { return ball(1.0, vector::Zero(dim)); }

  index_t dimension() const { return center_.size(); }
  double radius() const { return radius_; }
  const vector& center() const { return center_; }
  double tolerance() const { return tolerance_; }

  bool contains(const vector& x) const {
    require_dimension(x.size(), dimension(), "ball::contains");
    return (x - center_).norm() <= radius_ + tolerance_;
  }

  /// x itself when inside, otherwise center + r (x - center) / |x - center|.
  /// The result always satisfies |y - center| <= r exactly, so projecting it
  /// again returns it unchanged.
  vector project(const vector& x) const {
    require_dimension(x.size(), dimension(), "ball::project");
    vector d = x - center_;
    const double n = d.norm();
    if (n <= radius_) return x;
    double scale = radius_ / n;
    vector y = center_ + d * scale;
    while ((y - center_).norm() > radius_) {
      scale = std::nextafter(scale, 0.0);
      y = center_ + d * scale;
    }
    return y;
  }

  vector normal_cone_projection(const vector& x, const vector& d) const {
    require_dimension(x.size(), dimension(), "ball::normal_cone_projection");
    require_dimension(d.size(), dimension(), "ball::normal_cone_projection");
    const vector off = x - center_;
    const double n = off.norm();
    if (std::abs(n - radius_) > tolerance_ || n == 0.0) return vector::Zero(d.size());
    const vector u = off / n;
    const double a = u.dot(d);
    if (a <= 0.0) return vector::Zero(d.size());
    return a * u;
  }

 private:
  double radius_;
  vector center_;
  double tolerance_;
};

static_assert(projectable_set<ball>);

}  // namespace osdca

#endif  // OSDCA_FEASIBLE_SET_HPP
