#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qbertrand/error.hpp"
#include "qbertrand/quaternion.hpp"

namespace qbertrand {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  double slack() const { return 1e-12 * (1.0 + std::abs(lo) + std::abs(hi)); }
  bool contains(double u) const { return u >= lo - slack() && u <= hi + slack(); }
};

/// Derivatives of orders 1..4 at one parameter value. Entries beyond the
/// requested order are left zero.
using Jet = std::array<Quaternion, 4>;

using EvalFn = std::function<Quaternion(double)>;
using JetFn = std::function<Jet(double u, int max_order)>;

/// Central-difference step per derivative order (index 0 is order 1).
struct StepSizes {
  std::array<double, 4> by_order{1e-3, 1e-3, 5e-3, 1e-2};

  double operator()(int order) const { return by_order.at(static_cast<std::size_t>(order - 1)); }

  // A stencil of order n with one Richardson level reaches 4h at most; the
  // trimmed margin 2*n*h covers it for every order.
  double margin(int order) const { return 2.0 * order * (*this)(order); }

  double max_margin() const {
    double m = 0.0;
    for (int order = 1; order <= 4; ++order) m = std::max(m, margin(order));
    return m;
  }
};

class ParametricCurve;
Quaternion fd_derivative(const ParametricCurve& curve, double u, int order, double step);

/// A map from a closed parameter interval into R^3 (spatial quaternions) or
/// R^4, with optional analytic derivatives up to order 4.
///
/// Immutable and cheap to copy; copies share the underlying callables.
class ParametricCurve {
 public:
  ParametricCurve(int dim, EvalFn eval, Interval domain, JetFn analytic = {})
      : ParametricCurve(dim, std::move(eval), domain, std::move(analytic), true) {}

 private:
  ParametricCurve(int dim, EvalFn eval, Interval domain, JetFn analytic, bool validate)
      : state_(std::make_shared<const State>(State{dim, std::move(eval), domain, std::move(analytic)})) {
    if (dim != 3 && dim != 4) throw Error(ErrorKind::InvalidInput, "curve dimension must be 3 or 4");
    if (!std::isfinite(domain.lo) || !std::isfinite(domain.hi) || !(domain.lo < domain.hi)) {
      throw Error(ErrorKind::InvalidInput, "curve domain must be a finite interval with lo < hi");
    }
    if (!state_->eval) throw Error(ErrorKind::InvalidInput, "curve needs an evaluation function");
    if (validate) validate_analytic_derivatives();
  }

 public:
  /// For jets derived from another curve's derivatives; skips the finite
  /// difference cross-check.
  static ParametricCurve with_derived_jet(int dim, EvalFn eval, Interval domain, JetFn derived) {
    return ParametricCurve(dim, std::move(eval), domain, std::move(derived), false);
  }

  int dim() const noexcept { return state_->dim; }
  const Interval& domain() const noexcept { return state_->domain; }
  bool has_analytic_derivatives() const noexcept { return static_cast<bool>(state_->jet); }

  Quaternion operator()(double u) const {
    if (!state_->domain.contains(u)) {
      std::ostringstream msg;
      msg << "parameter " << u << " outside curve domain [" << state_->domain.lo << ", "
          << state_->domain.hi << "]";
      throw Error(ErrorKind::DomainBoundary, msg.str());
    }
    Quaternion p = state_->eval(u);
    if (!p.is_finite()) throw Error(ErrorKind::NonFinite, "curve evaluation is not finite");
    if (state_->dim == 3 && p.s != 0.0) {
      throw Error(ErrorKind::InvalidInput, "spatial curve evaluated to a non-spatial quaternion");
    }
    return p;
  }

  Jet analytic_jet(double u, int max_order) const {
    if (!state_->jet) throw Error(ErrorKind::InvalidInput, "curve has no analytic derivatives");
    if (!state_->domain.contains(u)) throw Error(ErrorKind::DomainBoundary, "derivative requested outside curve domain");
    Jet j = state_->jet(u, max_order);
    for (int i = 0; i < max_order; ++i) {
      if (!j[static_cast<std::size_t>(i)].is_finite()) {
        throw Error(ErrorKind::NonFinite, "analytic derivative is not finite");
      }
    }
    return j;
  }

 private:
  struct State {
    int dim;
    EvalFn eval;
    Interval domain;
    JetFn jet;
  };

  // Analytic derivatives must agree with central differences of eval within
  // 1e-6 at 10 pseudo-random interior points. Orders 1 and 2 are compared;
  // higher orders are too noisy under finite differences to judge at 1e-6.
  void validate_analytic_derivatives() const {
    if (!state_->jet) return;
    const StepSizes steps;
    const double m = steps.margin(2);
    const double lo = state_->domain.lo + m;
    const double hi = state_->domain.hi - m;
    if (!(lo < hi)) return;
    std::mt19937_64 rng(0x5eed'c0de);
    std::uniform_real_distribution<double> pick(lo, hi);
    for (int trial = 0; trial < 10; ++trial) {
      const double u = pick(rng);
      const Jet j = analytic_jet(u, 2);
      for (int order = 1; order <= 2; ++order) {
        const Quaternion fd = fd_derivative(*this, u, order, steps(order));
        const Quaternion& an = j[static_cast<std::size_t>(order - 1)];
        const double tol = 1e-6 * std::max(1.0, norm(an));
        if (max_abs_diff(fd, an) > tol) {
          std::ostringstream msg;
          msg << "analytic derivative of order " << order << " disagrees with finite differences at u=" << u
              << " (gap " << max_abs_diff(fd, an) << ")";
          throw Error(ErrorKind::InvalidInput, msg.str());
        }
      }
    }
  }

  std::shared_ptr<const State> state_;
};

namespace detail {

inline Quaternion central_difference(const ParametricCurve& c, double u, int order, double h) {
  switch (order) {
    case 1:
      return (c(u + h) - c(u - h)) / (2.0 * h);
    case 2:
      return (c(u + h) - 2.0 * c(u) + c(u - h)) / (h * h);
    case 3:
      return (c(u + 2.0 * h) - 2.0 * c(u + h) + 2.0 * c(u - h) - c(u - 2.0 * h)) / (2.0 * h * h * h);
    case 4:
      return (c(u + 2.0 * h) - 4.0 * c(u + h) + 6.0 * c(u) - 4.0 * c(u - h) + c(u - 2.0 * h)) /
             (h * h * h * h);
    default:
      throw Error(ErrorKind::InvalidInput, "derivative order must be in 1..4");
  }
}

inline void check_order(int order) {
  if (order < 1 || order > 4) throw Error(ErrorKind::InvalidInput, "derivative order must be in 1..4");
}

}  // namespace detail

/// Central differences of the given order with one Richardson level
/// (steps h and 2h). `u` must sit at least 2*order*step inside the domain.
inline Quaternion fd_derivative(const ParametricCurve& curve, double u, int order, double step) {
  detail::check_order(order);
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorKind::InvalidInput, "step must be positive");
  const Interval& d = curve.domain();
  const double reach = 2.0 * order * step;
  if (u - reach < d.lo - d.slack() || u + reach > d.hi + d.slack()) {
    std::ostringstream msg;
    msg << "u=" << u << " is closer than " << reach << " to the domain boundary for order-" << order
        << " differentiation";
    throw Error(ErrorKind::DomainBoundary, msg.str());
  }
  const Quaternion fine = detail::central_difference(curve, u, order, step);
  const Quaternion coarse = detail::central_difference(curve, u, order, 2.0 * step);
  Quaternion r = (4.0 * fine - coarse) / 3.0;
  if (!r.is_finite()) throw Error(ErrorKind::NonFinite, "finite-difference derivative is not finite");
  return r;
}

/// Analytic derivative when the curve has one, otherwise finite differences.
inline Quaternion derivative(const ParametricCurve& curve, double u, int order,
                             std::optional<double> step = std::nullopt) {
  detail::check_order(order);
  if (curve.has_analytic_derivatives()) return curve.analytic_jet(u, order)[static_cast<std::size_t>(order - 1)];
  return fd_derivative(curve, u, order, step.value_or(StepSizes{}(order)));
}

inline Jet jet(const ParametricCurve& curve, double u, int max_order, const StepSizes& steps = {}) {
  detail::check_order(max_order);
  if (curve.has_analytic_derivatives()) return curve.analytic_jet(u, max_order);
  Jet j{};
  for (int order = 1; order <= max_order; ++order) {
    j[static_cast<std::size_t>(order - 1)] = fd_derivative(curve, u, order, steps(order));
  }
  return j;
}

inline double speed(const ParametricCurve& curve, double u, const StepSizes& steps = {}) {
  return norm(derivative(curve, u, 1, steps(1)));
}

/// Parameter range on which every derivative order can be taken: the whole
/// domain for analytic curves, the domain trimmed by the widest stencil
/// margin otherwise.
inline Interval differentiable_interval(const ParametricCurve& curve, const StepSizes& steps = {}) {
  if (curve.has_analytic_derivatives()) return curve.domain();
  const double m = steps.max_margin();
  Interval d{curve.domain().lo + m, curve.domain().hi - m};
  if (!(d.lo < d.hi)) throw Error(ErrorKind::DomainBoundary, "curve domain too short for differentiation");
  return d;
}

inline std::vector<double> uniform_grid(double lo, double hi, int samples) {
  if (samples < 2) throw Error(ErrorKind::InvalidInput, "grid needs at least 2 samples");
  std::vector<double> g(static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (samples - 1);
  g.back() = hi;
  return g;
}

/// Length of the curve between u0 and u1: adaptive Gauss-Kronrod quadrature
/// of the speed to an absolute tolerance of about 1e-10.
inline double arc_length(const ParametricCurve& curve, double u0, double u1, const StepSizes& steps = {}) {
  if (!(u0 <= u1)) throw Error(ErrorKind::InvalidInput, "arc_length needs u0 <= u1");
  const Interval& d = curve.domain();
  if (!d.contains(u0) || !d.contains(u1)) throw Error(ErrorKind::DomainBoundary, "arc_length bounds outside domain");
  if (u0 == u1) return 0.0;
  auto f = [&](double u) { return speed(curve, u, steps); };
  double error = 0.0;
  const double L = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, u0, u1, 15, 1e-12, &error);
  if (!std::isfinite(L)) throw Error(ErrorKind::NonFinite, "non-finite speed encountered");
  return L;
}

/// Cumulative arc length at uniformly spaced parameter knots, with a smooth
/// forward map u -> s and its inverse s -> u.
class ArcLengthTable {
 public:
  static constexpr double kMinSpeed = 1e-9;

  ArcLengthTable(ParametricCurve curve, Interval range, int samples, StepSizes steps = {})
      : curve_(std::move(curve)), steps_(steps) {
    if (samples < 2) throw Error(ErrorKind::InvalidInput, "arc-length table needs at least 2 samples");
    u_ = uniform_grid(range.lo, range.hi, samples);
    speed_.reserve(u_.size());
    for (double u : u_) {
      const double sp = speed(curve_, u, steps_);
      if (!(sp >= kMinSpeed)) {
        std::ostringstream msg;
        msg << "irregular curve: speed " << sp << " below " << kMinSpeed << " at u=" << u;
        throw Error(ErrorKind::IrregularCurve, msg.str());
      }
      speed_.push_back(sp);
    }
    L_.assign(u_.size(), 0.0);
    for (std::size_t i = 1; i < u_.size(); ++i) {
      // Same rule as partial(), so length_at is continuous across knots.
      L_[i] = L_[i - 1] + partial(u_[i - 1], u_[i]);
      if (!std::isfinite(L_[i])) throw Error(ErrorKind::NonFinite, "non-finite speed encountered");
      if (!(L_[i] > L_[i - 1])) throw Error(ErrorKind::IrregularCurve, "irregular curve: arc length not increasing");
    }
  }

  const std::vector<double>& parameters() const noexcept { return u_; }
  const std::vector<double>& lengths() const noexcept { return L_; }
  double total_length() const noexcept { return L_.back(); }
  Interval range() const noexcept { return {u_.front(), u_.back()}; }

  /// Arc length from the first knot to u.
  double length_at(double u) const {
    if (!range().contains(u)) throw Error(ErrorKind::DomainBoundary, "length_at: parameter outside table range");
    const std::size_t j = panel_of(u_, u);
    return L_[j] + partial(u_[j], u);
  }

  /// Inverse of length_at: monotone cubic guess refined by Newton steps on
  /// the exact partial integral.
  double parameter_at(double s) const {
    const Interval lr{0.0, total_length()};
    if (!lr.contains(s)) throw Error(ErrorKind::DomainBoundary, "parameter_at: length outside [0, total]");
    const std::size_t j = panel_of(L_, s);
    double u = hermite_guess(j, s);
    const double width = u_[j + 1] - u_[j];
    const double lo = std::max(u_.front(), u_[j] - width);
    const double hi = std::min(u_.back(), u_[j + 1] + width);
    for (int iter = 0; iter < 12; ++iter) {
      const double residual = L_[j] + partial(u_[j], u) - s;
      const double du = residual / speed(curve_, u, steps_);
      u = std::clamp(u - du, lo, hi);
      if (std::abs(du) <= 1e-15 * (1.0 + std::abs(u))) break;
    }
    return u;
  }

 private:
  static std::size_t panel_of(const std::vector<double>& knots, double x) {
    auto it = std::upper_bound(knots.begin(), knots.end(), x);
    std::size_t j = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
    return std::min(j, knots.size() - 2);
  }

  double partial(double a, double b) const {
    if (a == b) return 0.0;
    auto f = [&](double u) { return speed(curve_, u, steps_); };
    using GL = boost::math::quadrature::gauss<double, 16>;
    return b > a ? GL::integrate(f, a, b) : -GL::integrate(f, b, a);
  }

  // Fritsch-Carlson limited Hermite cubic of u(s) on panel j.
  double hermite_guess(std::size_t j, double s) const {
    const double ds = L_[j + 1] - L_[j];
    const double secant = (u_[j + 1] - u_[j]) / ds;
    double m0 = 1.0 / speed_[j];
    double m1 = 1.0 / speed_[j + 1];
    const double a = m0 / secant;
    const double b = m1 / secant;
    if (a * a + b * b > 9.0) {
      const double tau = 3.0 / std::sqrt(a * a + b * b);
      m0 = tau * a * secant;
      m1 = tau * b * secant;
    }
    const double t = (s - L_[j]) / ds;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * u_[j] + (t3 - 2 * t2 + t) * ds * m0 + (-2 * t3 + 3 * t2) * u_[j + 1] +
           (t3 - t2) * ds * m1;
  }

  ParametricCurve curve_;
  StepSizes steps_;
  std::vector<double> u_;
  std::vector<double> L_;
  std::vector<double> speed_;
};

struct ArcLengthReparameterization {
  ParametricCurve curve;
  std::shared_ptr<const ArcLengthTable> table;
};

namespace detail {

// Derivatives of gamma(s) = base(u(s)) where du/ds = 1/|base'(u)|, given the
// base jet at u (Faa di Bruno up to order 4).
inline Jet chain_rule_unit_speed(const Jet& d, int max_order) {
  const Quaternion& d1 = d[0];
  const Quaternion& d2 = d[1];
  const Quaternion& d3 = d[2];
  const Quaternion& d4 = d[3];
  const double P = inner(d1, d1);
  const double P1 = 2.0 * inner(d1, d2);
  const double P2 = 2.0 * (inner(d2, d2) + inner(d1, d3));
  const double P3 = 2.0 * (3.0 * inner(d2, d3) + inner(d1, d4));
  const double g = 1.0 / std::sqrt(P);
  const double g1 = -0.5 * P1 * g / P;
  const double g2 = 0.75 * P1 * P1 * g / (P * P) - 0.5 * P2 * g / P;
  const double g3 = -15.0 / 8.0 * P1 * P1 * P1 * g / (P * P * P) + 9.0 / 4.0 * P1 * P2 * g / (P * P) -
                    0.5 * P3 * g / P;
  const double u1 = g;
  const double u2 = g1 * g;
  const double u3 = g2 * g * g + g1 * g1 * g;
  const double u4 = g3 * g * g * g + 4.0 * g2 * g1 * g * g + g1 * g1 * g1 * g;
  Jet out{};
  out[0] = u1 * d1;
  if (max_order >= 2) out[1] = (u1 * u1) * d2 + u2 * d1;
  if (max_order >= 3) out[2] = (u1 * u1 * u1) * d3 + (3.0 * u1 * u2) * d2 + u3 * d1;
  if (max_order >= 4) {
    out[3] = (u1 * u1 * u1 * u1) * d4 + (6.0 * u1 * u1 * u2) * d3 + (3.0 * u2 * u2 + 4.0 * u1 * u3) * d2 +
             u4 * d1;
  }
  return out;
}

}  // namespace detail

/// Reparameterize by arc length; the returned curve runs over [0, L] and
/// carries chain-rule derivatives built from the base curve's derivatives.
inline ArcLengthReparameterization reparameterize_with_table(const ParametricCurve& curve, int samples,
                                                             const StepSizes& steps = {}) {
  auto table = std::make_shared<const ArcLengthTable>(curve, differentiable_interval(curve, steps), samples, steps);
  EvalFn eval = [curve, table](double s) { return curve(table->parameter_at(s)); };
  JetFn derivs = [curve, table, steps](double s, int max_order) {
    const double u = table->parameter_at(s);
    return detail::chain_rule_unit_speed(jet(curve, u, std::max(max_order, 1), steps), max_order);
  };
  ParametricCurve unit = ParametricCurve::with_derived_jet(curve.dim(), std::move(eval),
                                                           Interval{0.0, table->total_length()}, std::move(derivs));
  return {std::move(unit), std::move(table)};
}

struct UnitSpeedCheck {
  bool unit_speed = false;
  double max_deviation = 0.0;
};

/// Samples the speed on a 101-point uniform grid.
inline UnitSpeedCheck is_unit_speed(const ParametricCurve& curve, double tol, const StepSizes& steps = {}) {
  Interval range = curve.domain();
  if (!curve.has_analytic_derivatives()) {
    range = {range.lo + steps.margin(1), range.hi - steps.margin(1)};
    if (!(range.lo < range.hi)) return {false, std::numeric_limits<double>::infinity()};
  }
  double worst = 0.0;
  for (double u : uniform_grid(range.lo, range.hi, 101)) {
    worst = std::max(worst, std::abs(speed(curve, u, steps) - 1.0));
  }
  return {worst <= tol, worst};
}

inline ParametricCurve reparameterize_by_arclength(const ParametricCurve& curve, int samples,
                                                   const StepSizes& steps = {}) {
  ArcLengthReparameterization r = reparameterize_with_table(curve, samples, steps);
  const UnitSpeedCheck check = is_unit_speed(r.curve, 1e-6, steps);
  if (!check.unit_speed) {
    std::ostringstream msg;
    msg << "reparameterized curve misses unit speed by " << check.max_deviation;
    throw Error(ErrorKind::IrregularCurve, msg.str());
  }
  return r.curve;
}

}  // namespace qbertrand
