#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <vector>

#include "qbertrand/curves.hpp"

namespace qbertrand {

inline constexpr double kDegeneracyThreshold = 1e-9;

/// Frenet frame of a unit-speed spatial curve.
struct Frame3 {
  Quaternion t, n, b;
  double k = 0.0;
  double r = 0.0;

  std::array<Quaternion, 3> vectors() const { return {t, n, b}; }
};

/// Moving frame {T, N1, N2, N3} of a unit-speed curve in R^4 with
///   T'  =  K N1
///   N1' = -K T + torsion N2
///   N2' = -torsion N1 + bitorsion N3
///   N3' = -bitorsion N2
/// where torsion = -r and bitorsion = K - k.
struct Frame4 {
  Quaternion T, N1, N2, N3;
  double K = 0.0;
  double torsion = 0.0;
  double bitorsion = 0.0;

  std::array<Quaternion, 4> vectors() const { return {T, N1, N2, N3}; }
};

struct FrameOptions {
  double degeneracy = kDegeneracyThreshold;
  bool check_unit_speed = true;
  double unit_speed_tol = 1e-6;
  // Pair frames: tolerance on orthonormality and on T' = K N1.
  double association_tol = 1e-6;
  StepSizes steps;
};

template <std::size_t N>
double orthonormality_residual(const std::array<Quaternion, N>& v) {
  double worst = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = i; j < N; ++j) {
      worst = std::max(worst, std::abs(inner(v[i], v[j]) - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

inline double orthonormality_residual(const Frame3& f) { return orthonormality_residual(f.vectors()); }
inline double orthonormality_residual(const Frame4& f) { return orthonormality_residual(f.vectors()); }

/// Generalized cross product: the vector X with det[a b c X] = sum of the
/// squared 3x3 minors, orthogonal to a, b and c.
inline Quaternion complement(const Quaternion& a, const Quaternion& b, const Quaternion& c) {
  const auto A = a.r4();
  const auto B = b.r4();
  const auto C = c.r4();
  std::array<double, 4> x{};
  for (int i = 0; i < 4; ++i) {
    int rows[3];
    int m = 0;
    for (int r = 0; r < 4; ++r) {
      if (r != i) rows[m++] = r;
    }
    auto e = [&](int r, const std::array<double, 4>& col) { return col[static_cast<std::size_t>(rows[r])]; };
    const double minor = e(0, A) * (e(1, B) * e(2, C) - e(2, B) * e(1, C)) -
                         e(0, B) * (e(1, A) * e(2, C) - e(2, A) * e(1, C)) +
                         e(0, C) * (e(1, A) * e(2, B) - e(2, A) * e(1, B));
    x[static_cast<std::size_t>(i)] = ((i + 3) % 2 == 0 ? 1.0 : -1.0) * minor;
  }
  return Quaternion::from_r4(x);
}

/// det of the 4x4 matrix with columns a, b, c, d.
inline double determinant(const Quaternion& a, const Quaternion& b, const Quaternion& c, const Quaternion& d) {
  return inner(complement(a, b, c), d);
}

inline double determinant(const Frame4& f) { return determinant(f.T, f.N1, f.N2, f.N3); }

/// Frame from derivatives d1..d4 with respect to any regular parameter.
/// T, N1, N2 come from Gram-Schmidt on the first three derivatives (which for
/// unit speed gives N1 = T'/K and N2 = -(N1' + K T)/|N1' + K T|); N3 closes
/// the basis with det[T N1 N2 N3] = -1, the orientation shared by every
/// frame b T, n T, t T built from a spatial Frenet frame.
inline Frame4 frame4_from_jet(const Jet& d, double degeneracy = kDegeneracyThreshold) {
  const double sigma = norm(d[0]);
  if (!(sigma >= degeneracy)) throw Error(ErrorKind::IrregularCurve, "irregular curve: vanishing speed");
  Frame4 f;
  f.T = d[0] / sigma;
  const Quaternion w2 = d[1] - inner(d[1], f.T) * f.T;
  const double n2 = norm(w2);
  f.K = n2 / (sigma * sigma);
  if (!(f.K >= degeneracy)) throw Error(ErrorKind::ZeroCurvature, "zero curvature");
  f.N1 = w2 / n2;
  Quaternion w3 = d[2] - inner(d[2], f.T) * f.T;
  w3 -= inner(w3, f.N1) * f.N1;
  const double n3 = norm(w3);
  const double r = n3 / (n2 * sigma);
  if (!(r >= degeneracy)) throw Error(ErrorKind::ZeroTorsion, "zero torsion");
  f.N2 = -(w3 / n3);
  f.torsion = -r;
  Quaternion x = -complement(f.T, f.N1, f.N2);
  f.N3 = x / norm(x);
  const double det = determinant(f);
  if (!(std::abs(det + 1.0) <= 1e-6)) {
    std::ostringstream msg;
    msg << "orientation failure: det = " << det;
    throw Error(ErrorKind::Orientation, msg.str());
  }
  f.bitorsion = -inner(d[3], f.N3) / (n3 * sigma);
  return f;
}

inline Frame3 frame3_from_jet(const Jet& d, double degeneracy = kDegeneracyThreshold) {
  const double sigma = norm(d[0]);
  if (!(sigma >= degeneracy)) throw Error(ErrorKind::IrregularCurve, "irregular curve: vanishing speed");
  Frame3 f;
  f.t = d[0] / sigma;
  const Quaternion w2 = d[1] - inner(d[1], f.t) * f.t;
  const double n2 = norm(w2);
  f.k = n2 / (sigma * sigma);
  if (!(f.k >= degeneracy)) throw Error(ErrorKind::ZeroCurvature, "zero curvature");
  f.n = w2 / n2;
  f.b = f.t * f.n;
  f.r = inner(d[2], f.b) / (n2 * sigma);
  return f;
}

namespace detail {

inline void require_unit_speed(const ParametricCurve& curve, const FrameOptions& opts) {
  if (!opts.check_unit_speed) return;
  const UnitSpeedCheck u = is_unit_speed(curve, opts.unit_speed_tol, opts.steps);
  if (!u.unit_speed) {
    std::ostringstream msg;
    msg << "curve is not unit speed (max |speed - 1| = " << u.max_deviation << "); reparameterize first";
    throw Error(ErrorKind::NotUnitSpeed, msg.str());
  }
}

}  // namespace detail

inline Frame3 frame3_at(const ParametricCurve& alpha, double s, const FrameOptions& opts = {}) {
  if (alpha.dim() != 3) throw Error(ErrorKind::InvalidInput, "frame3_at needs a spatial curve");
  detail::require_unit_speed(alpha, opts);
  return frame3_from_jet(jet(alpha, s, 3, opts.steps), opts.degeneracy);
}

inline Frame4 frame4_intrinsic(const ParametricCurve& alpha4, double s, const FrameOptions& opts = {}) {
  detail::require_unit_speed(alpha4, opts);
  return frame4_from_jet(jet(alpha4, s, 4, opts.steps), opts.degeneracy);
}

/// Frame from an R^4 curve and its associated spatial curve:
/// N1 = b T, N2 = n T, N3 = t T.
inline Frame4 frame4_from_pair(const ParametricCurve& alpha4, const ParametricCurve& alpha3, double s,
                               const FrameOptions& opts = {}) {
  const Frame3 f3 = frame3_at(alpha3, s, opts);
  detail::require_unit_speed(alpha4, opts);
  const Jet d = jet(alpha4, s, 2, opts.steps);
  const double sigma = norm(d[0]);
  if (!(sigma >= opts.degeneracy)) throw Error(ErrorKind::IrregularCurve, "irregular curve: vanishing speed");
  Frame4 f;
  f.T = d[0] / sigma;
  const Quaternion Tp = (d[1] - inner(d[1], f.T) * f.T) / (sigma * sigma);
  f.K = norm(Tp);
  if (!(f.K >= opts.degeneracy)) throw Error(ErrorKind::ZeroCurvature, "zero curvature");
  f.N1 = f3.b * f.T;
  f.N2 = f3.n * f.T;
  f.N3 = f3.t * f.T;

  const double ortho = orthonormality_residual(f);
  const double row1 = max_abs_diff(Tp, f.K * f.N1);
  if (ortho > opts.association_tol || row1 > opts.association_tol * std::max(1.0, f.K)) {
    std::ostringstream msg;
    msg << "not an associated pair: orthonormality residual " << ortho << ", |T' - K N1| = " << row1;
    throw Error(ErrorKind::NotAssociatedPair, msg.str());
  }

  // Spatial Frenet equations give t', n', b'; the product rule does the rest.
  const Quaternion np = -f3.k * f3.t + f3.r * f3.b;
  const Quaternion bp = -f3.r * f3.n;
  const Quaternion N1p = bp * f.T + f3.b * Tp;
  const Quaternion N2p = np * f.T + f3.n * Tp;
  f.torsion = inner(N1p, f.N2);
  f.bitorsion = inner(N2p, f.N3);
  return f;
}

using FrameProvider = std::function<Frame4(double)>;

/// Provider of intrinsic frames; unit speed is checked once here rather than
/// at every call.
inline FrameProvider intrinsic_frames(const ParametricCurve& alpha4, FrameOptions opts = {}) {
  detail::require_unit_speed(alpha4, opts);
  opts.check_unit_speed = false;
  return [alpha4, opts](double s) { return frame4_intrinsic(alpha4, s, opts); };
}

inline FrameProvider pair_frames(const ParametricCurve& alpha4, const ParametricCurve& alpha3,
                                 FrameOptions opts = {}) {
  if (alpha3.dim() != 3) throw Error(ErrorKind::InvalidInput, "associated curve must be spatial");
  detail::require_unit_speed(alpha4, opts);
  detail::require_unit_speed(alpha3, opts);
  opts.check_unit_speed = false;
  return [alpha4, alpha3, opts](double s) { return frame4_from_pair(alpha4, alpha3, s, opts); };
}

/// Flip (N2, N3) jointly where that brings a frame closer to its
/// predecessor. Sequential over the grid.
inline void align_frame_signs(std::vector<Frame4>& frames) {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const Frame4& prev = frames[i - 1];
    Frame4& f = frames[i];
    const double keep = norm(f.N2 - prev.N2) + norm(f.N3 - prev.N3);
    const double flip = norm(f.N2 + prev.N2) + norm(f.N3 + prev.N3);
    if (flip < keep) {
      f.N2 = -f.N2;
      f.N3 = -f.N3;
      f.torsion = -f.torsion;
    }
  }
}

struct RowResidual {
  double max = 0.0;
  double mean = 0.0;
};

struct OdeResidualReport {
  std::array<RowResidual, 4> rows{};
  double max() const {
    double m = 0.0;
    for (const auto& r : rows) m = std::max(m, r.max);
    return m;
  }
};

namespace detail {

inline std::array<Quaternion, 4> frame_ode_rhs(const Frame4& f) {
  return {f.K * f.N1, -f.K * f.T + f.torsion * f.N2, -f.torsion * f.N1 + f.bitorsion * f.N3,
          -f.bitorsion * f.N2};
}

// Richardson central difference of each frame vector at s.
inline std::array<Quaternion, 4> frame_derivatives(const FrameProvider& frames, double s, double h) {
  const auto p1 = frames(s + h).vectors();
  const auto m1 = frames(s - h).vectors();
  const auto p2 = frames(s + 2 * h).vectors();
  const auto m2 = frames(s - 2 * h).vectors();
  std::array<Quaternion, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    const Quaternion fine = (p1[i] - m1[i]) / (2 * h);
    const Quaternion coarse = (p2[i] - m2[i]) / (4 * h);
    out[i] = (4.0 * fine - coarse) / 3.0;
  }
  return out;
}

}  // namespace detail

/// Compares finite-difference derivatives of the frame vectors with the
/// right-hand side of the frame equations, per row, over the grid. The grid
/// points must lie 2*step inside the provider's range.
inline OdeResidualReport frame_ode_residual(const FrameProvider& frames, const std::vector<double>& grid,
                                            double step = 1e-3) {
  if (grid.empty()) throw Error(ErrorKind::InvalidInput, "frame_ode_residual needs a nonempty grid");
  OdeResidualReport report;
  for (double s : grid) {
    const Frame4 f = frames(s);
    const auto rhs = detail::frame_ode_rhs(f);
    const auto lhs = detail::frame_derivatives(frames, s, step);
    for (std::size_t i = 0; i < 4; ++i) {
      const double r = norm(lhs[i] - rhs[i]);
      report.rows[i].max = std::max(report.rows[i].max, r);
      report.rows[i].mean += r / static_cast<double>(grid.size());
    }
  }
  return report;
}

inline OdeResidualReport frame_ode_residual(const ParametricCurve& alpha4, const std::vector<double>& grid,
                                            const FrameOptions& opts = {}, double step = 1e-3) {
  return frame_ode_residual(intrinsic_frames(alpha4, opts), grid, step);
}

/// Matrix C with C(i, j) = h(V_i', V_j) for V = (T, N1, N2, N3).
inline std::array<std::array<double, 4>, 4> recovered_coefficients(const FrameProvider& frames, double s,
                                                                   double step = 1e-3) {
  const auto v = frames(s).vectors();
  const auto dv = detail::frame_derivatives(frames, s, step);
  std::array<std::array<double, 4>, 4> c{};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) c[i][j] = inner(dv[i], v[j]);
  }
  return c;
}

enum class ProfileSource { Intrinsic, Pair };

inline const char* to_string(ProfileSource s) { return s == ProfileSource::Intrinsic ? "intrinsic" : "pair"; }

/// K, r, k sampled on a grid; k = K - bitorsion.
struct CurvatureProfile {
  std::vector<double> s;
  std::vector<double> K;
  std::vector<double> r;
  std::vector<double> k;
  ProfileSource source = ProfileSource::Intrinsic;

  std::size_t size() const noexcept { return s.size(); }
  double bitorsion(std::size_t i) const { return K[i] - k[i]; }

  void validate() const {
    const std::size_t n = s.size();
    if (K.size() != n || r.size() != n || k.size() != n) {
      throw Error(ErrorKind::InvalidInput, "curvature profile columns differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0 && !(s[i] > s[i - 1])) throw Error(ErrorKind::InvalidInput, "profile grid not strictly increasing");
      if (!std::isfinite(s[i]) || !std::isfinite(K[i]) || !std::isfinite(r[i]) || !std::isfinite(k[i])) {
        throw Error(ErrorKind::NonFinite, "curvature profile contains a non-finite value");
      }
    }
  }
};

inline std::vector<Frame4> frames_on_grid(const FrameProvider& frames, const std::vector<double>& grid) {
  std::vector<Frame4> out;
  out.reserve(grid.size());
  for (double s : grid) out.push_back(frames(s));
  align_frame_signs(out);
  return out;
}

inline CurvatureProfile profile_from_frames(const std::vector<double>& grid, const std::vector<Frame4>& frames,
                                            ProfileSource source) {
  CurvatureProfile p;
  p.s = grid;
  p.source = source;
  for (const Frame4& f : frames) {
    p.K.push_back(f.K);
    p.r.push_back(-f.torsion);
    p.k.push_back(f.K - f.bitorsion);
  }
  p.validate();
  return p;
}

inline CurvatureProfile curvature_profile(const ParametricCurve& alpha4, const std::optional<ParametricCurve>& alpha3,
                                          const std::vector<double>& grid, const FrameOptions& opts = {}) {
  const FrameProvider frames = alpha3 ? pair_frames(alpha4, *alpha3, opts) : intrinsic_frames(alpha4, opts);
  return profile_from_frames(grid, frames_on_grid(frames, grid),
                             alpha3 ? ProfileSource::Pair : ProfileSource::Intrinsic);
}

}  // namespace qbertrand
