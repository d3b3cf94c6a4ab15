#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qbertrand/curve_spec.hpp"
#include "qbertrand/frames.hpp"
#include "support/oracles.hpp"

using namespace qbertrand;
using std::numbers::pi;

namespace {

const oracle::Torus& T0 = oracle::kTorus;

ParametricCurve torus(double A, double p, double B, double q) {
  return make_curve({CurveFamily::TorusCurve, {{"A", A}, {"p", p}, {"B", B}, {"q", q}}, {}});
}

ParametricCurve fixture_torus() { return torus(T0.A, T0.p, T0.B, T0.q); }

ParametricCurve fixture_helix(double phase = 0.0) {
  return make_curve(
      {CurveFamily::Helix3, {{"a", T0.helix_radius()}, {"h", T0.helix_pitch()}, {"omega", 3.0}, {"phase", phase}}, {}});
}

ParametricCurve helix(double a, double h) { return make_curve({CurveFamily::Helix3, {{"a", a}, {"h", h}}, {}}); }

std::vector<double> fixture_grid() { return uniform_grid(0.08, 2 * pi - 0.08, 101); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidInput;
}

void expect_joint_sign_match(const Frame4& a, const Frame4& b, double tol) {
  EXPECT_LE(max_abs_diff(a.T, b.T), tol);
  EXPECT_LE(max_abs_diff(a.N1, b.N1), tol);
  const double same = std::max(max_abs_diff(a.N2, b.N2), max_abs_diff(a.N3, b.N3));
  const double flip = std::max(max_abs_diff(a.N2, -b.N2), max_abs_diff(a.N3, -b.N3));
  EXPECT_LE(std::min(same, flip), tol);
}

}  // namespace

TEST(Frame3, CircleHasUnitCurvatureAndNoTorsion) {
  const ParametricCurve c = make_curve({CurveFamily::Circle3, {{"R", 1.0}}, {}});
  for (double s : {0.0, 1.0, 4.0}) {
    const Frame3 f = frame3_at(c, s);
    EXPECT_NEAR(f.k, 1.0, 1e-14);
    EXPECT_NEAR(f.r, 0.0, 1e-14);
  }
}

TEST(Frame3, HelixMatchesClassicalFormulas) {
  for (auto [a, h] : {std::pair{0.6, 0.8}, std::pair{3.0 / 25.0, 4.0 / 25.0}, std::pair{2.0, -1.0}}) {
    const ParametricCurve c = helix(a, h);
    const double k = a / (a * a + h * h);
    const double r = h / (a * a + h * h);
    for (double s : uniform_grid(0.0, 2 * pi, 9)) {
      const Frame3 f = frame3_at(c, s);
      EXPECT_NEAR(f.k, k, 1e-12);
      EXPECT_NEAR(f.r, r, 1e-12);
    }
  }
}

TEST(Frame3, OrthonormalAndRightHanded) {
  oracle::Rng rng(31);
  const ParametricCurve c = fixture_helix();
  for (int i = 0; i < 10; ++i) {
    const Frame3 f = frame3_at(c, rng.uniform(0, 2 * pi));
    EXPECT_LT(orthonormality_residual(f), 1e-8);
    EXPECT_LE(max_abs_diff(f.b, mul(f.t, f.n)), 1e-8);
    EXPECT_LE(max_abs_diff(f.b, Quaternion::spatial(cross(f.t.v, f.n.v))), 1e-14);
  }
}

TEST(Frame3, RejectsBadInput) {
  EXPECT_EQ(kind_of([] { frame3_at(helix(0.0, 1.0), 1.0); }), ErrorKind::ZeroCurvature);
  const ParametricCurve slow = make_curve({CurveFamily::Circle3, {{"R", 2.0}, {"omega", 1.0}}, {}});
  EXPECT_EQ(kind_of([&] { frame3_at(slow, 1.0); }), ErrorKind::NotUnitSpeed);
  EXPECT_EQ(kind_of([] { frame3_at(fixture_torus(), 1.0); }), ErrorKind::InvalidInput);
}

TEST(Frame4Intrinsic, TorusMatchesClosedForms) {
  for (double s : fixture_grid()) {
    const Frame4 f = frame4_intrinsic(fixture_torus(), s);
    EXPECT_NEAR(f.K, T0.K(), 1e-12);
    EXPECT_NEAR(-f.torsion, T0.r(), 1e-12);
    EXPECT_NEAR(std::abs(f.bitorsion), T0.abs_bitorsion(), 1e-12);
    EXPECT_LT(orthonormality_residual(f), 1e-8);
    EXPECT_NEAR(determinant(f), -1.0, 1e-12);
    // N1 = T'/K with T' from the closed form second derivative.
    const Quaternion Tp = derivative(fixture_torus(), s, 2);
    EXPECT_LE(max_abs_diff(f.N1, Tp / T0.K()), 1e-14);
  }
}

TEST(Frame4Intrinsic, OtherHomogeneousTorusHasConstantInvariants) {
  // A p^2 != B q^2 and A^2 p^2 + B^2 q^2 = 1
  const double A = 0.6, p = 1.0, q = 2.0;
  const double B = std::sqrt(1.0 - A * A) / q;
  const ParametricCurve c = torus(A, p, B, q);
  const Frame4 first = frame4_intrinsic(c, 0.1);
  for (double s : uniform_grid(0.1, 6.1, 101)) {
    const Frame4 f = frame4_intrinsic(c, s);
    EXPECT_NEAR(f.K, first.K, 1e-6);
    EXPECT_NEAR(f.torsion, first.torsion, 1e-6);
    EXPECT_NEAR(f.bitorsion, first.bitorsion, 1e-6);
  }
}

TEST(Frame4Intrinsic, DegeneraciesAreDistinct) {
  const double A = 1.0 / std::sqrt(2.0);
  // p = q: a planar great circle with K = 1 and no torsion.
  const ParametricCurve planar = torus(A, 1.0, A, 1.0);
  EXPECT_NEAR(norm(derivative(planar, 0.3, 2)), 1.0, 1e-15);
  EXPECT_EQ(kind_of([&] { frame4_intrinsic(planar, 0.3); }), ErrorKind::ZeroTorsion);
  EXPECT_EQ(kind_of([] { frame4_intrinsic(helix(0.0, 1.0), 0.3); }), ErrorKind::ZeroCurvature);
  EXPECT_EQ(kind_of([] { frame4_intrinsic(torus(1.6, 1.0, 0.6, 2.0), 0.3); }), ErrorKind::NotUnitSpeed);
}

TEST(Frame4FromJet, GenericCurvesGiveOrientedOrthonormalFrames) {
  oracle::Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    Jet d{};
    for (auto& q : d) q = rng.quaternion(-2, 2);
    const Frame4 f = frame4_from_jet(d);
    EXPECT_LT(orthonormality_residual(f), 1e-12);
    EXPECT_NEAR(determinant(f), -1.0, 1e-12);
    EXPECT_GT(f.K, 0.0);
    EXPECT_LT(f.torsion, 0.0);
    // T, N1, N2 span the first three derivatives; N3 is what d4 adds.
    EXPECT_NEAR(inner(d[2], f.N3), 0.0, 1e-12);
  }
}

TEST(Frame4FromJet, InvariantsDoNotDependOnParameterization) {
  CurveSpec spec;
  spec.family = CurveFamily::Fourier;
  spec.coeffs.cos = {{0.0, 1.0, 0.0, 0.05}, {0.0, 0.0, 0.2}, {0.2, 0.3}, {0.0, 0.0, 0.0, 0.05}};
  spec.coeffs.sin = {{0.0, 0.0, 0.1}, {0.0, 1.0, 0.0, 0.05}, {0.0, 0.0, 0.0, 0.0}, {0.0, 0.4, 0.1}};
  const ParametricCurve c = make_curve(spec);
  const ArcLengthReparameterization unit = reparameterize_with_table(c, 200);
  for (double u : uniform_grid(0.2, 6.0, 13)) {
    const Frame4 a = frame4_from_jet(jet(c, u, 4));
    const Frame4 b = frame4_intrinsic(unit.curve, unit.table->length_at(u));
    EXPECT_NEAR(a.K, b.K, 1e-9);
    EXPECT_NEAR(a.torsion, b.torsion, 1e-9);
    EXPECT_NEAR(a.bitorsion, b.bitorsion, 1e-9);
    EXPECT_LE(max_abs_diff(a.N3, b.N3), 1e-9);
  }
}

TEST(Frame4FromPair, QuaternionProductsAndOrthonormality) {
  const ParametricCurve a4 = fixture_torus();
  const ParametricCurve a3 = fixture_helix();
  for (double s : fixture_grid()) {
    const Frame4 f = frame4_from_pair(a4, a3, s);
    const Frame3 g = frame3_at(a3, s);
    EXPECT_EQ(max_abs_diff(f.N1, mul(g.b, f.T)), 0.0);
    EXPECT_EQ(max_abs_diff(f.N2, mul(g.n, f.T)), 0.0);
    EXPECT_EQ(max_abs_diff(f.N3, mul(g.t, f.T)), 0.0);
    EXPECT_LT(orthonormality_residual(f), 1e-8);
    EXPECT_NEAR(determinant(f), -1.0, 1e-12);
    // k of the spatial curve is K - bitorsion.
    EXPECT_NEAR(f.K - f.bitorsion, g.k, 1e-12);
    EXPECT_NEAR(-f.torsion, g.r, 1e-12);
  }
}

TEST(Frame4FromPair, FirstRowHoldsUnderFiniteDifferences) {
  const ParametricCurve a4 = fixture_torus();
  const ParametricCurve a3 = fixture_helix();
  const FrameProvider frames = pair_frames(a4, a3);
  for (double s : uniform_grid(0.1, 6.0, 21)) {
    const Frame4 f = frames(s);
    const Quaternion dT = oracle::central_diff([&](double x) { return frames(x).T; }, s, 1e-3);
    EXPECT_LE(max_abs_diff(dT, f.K * f.N1), 1e-5);
  }
}

TEST(Frame4FromPair, AgreesWithIntrinsicFrame) {
  const ParametricCurve a4 = fixture_torus();
  const ParametricCurve a3 = fixture_helix();
  for (double s : fixture_grid()) {
    const Frame4 p = frame4_from_pair(a4, a3, s);
    const Frame4 i = frame4_intrinsic(a4, s);
    expect_joint_sign_match(p, i, 1e-5);
    EXPECT_NEAR(p.K, i.K, 1e-10);
    EXPECT_NEAR(std::abs(p.torsion), std::abs(i.torsion), 1e-10);
    EXPECT_NEAR(p.bitorsion, i.bitorsion, 1e-10);
  }
}

TEST(Frame4FromPair, UnrelatedCurvesAreRejected) {
  EXPECT_EQ(kind_of([] { frame4_from_pair(fixture_torus(), fixture_helix(1.0), 0.5); }),
            ErrorKind::NotAssociatedPair);
  EXPECT_EQ(kind_of([] { frame4_from_pair(fixture_torus(), helix(0.6, 0.8), 0.5); }),
            ErrorKind::NotAssociatedPair);
}

TEST(FrameOde, TorusResidualIsSmall) {
  const OdeResidualReport intrinsic = frame_ode_residual(fixture_torus(), fixture_grid());
  EXPECT_LT(intrinsic.max(), 1e-4);
  const OdeResidualReport pair = frame_ode_residual(pair_frames(fixture_torus(), fixture_helix()), fixture_grid());
  EXPECT_LT(pair.max(), 1e-4);
  for (const RowResidual& r : intrinsic.rows) EXPECT_LE(r.mean, r.max);
}

TEST(FrameOde, CorruptedFrameIsDetected) {
  const FrameProvider good = intrinsic_frames(fixture_torus());
  const FrameProvider corrupted = [good](double s) {
    Frame4 f = good(s);
    f.N2 = -f.N2;
    return f;
  };
  const OdeResidualReport r = frame_ode_residual(corrupted, fixture_grid());
  EXPECT_GT(r.max(), 0.1);
  EXPECT_GT(r.rows[1].max, 0.1);
}

TEST(FrameOde, StraightLineFails) {
  const ParametricCurve line = helix(0.0, 1.0);
  try {
    frame_ode_residual(line, uniform_grid(0.5, 1.5, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroCurvature);
    EXPECT_NE(std::string(e.what()).find("zero curvature"), std::string::npos);
  }
}

TEST(FrameOde, RecoveredCoefficientsAreSkew) {
  const FrameProvider frames = intrinsic_frames(fixture_torus());
  for (double s : {0.5, 2.0, 4.5}) {
    const auto C = recovered_coefficients(frames, s);
    const Frame4 f = frames(s);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) EXPECT_NEAR(C[i][j], -C[j][i], 1e-5);
    }
    EXPECT_NEAR(C[0][2], 0.0, 1e-5);
    EXPECT_NEAR(C[0][3], 0.0, 1e-5);
    EXPECT_NEAR(C[1][3], 0.0, 1e-5);
    EXPECT_NEAR(C[0][1], f.K, 1e-5);
    EXPECT_NEAR(C[1][2], f.torsion, 1e-5);
    EXPECT_NEAR(C[2][3], f.bitorsion, 1e-5);
  }
}

TEST(CurvatureProfile, TorusProfileIsConstant) {
  const auto grid = fixture_grid();
  for (bool with_pair : {false, true}) {
    const std::optional<ParametricCurve> a3 = with_pair ? std::optional(fixture_helix()) : std::nullopt;
    const CurvatureProfile p = curvature_profile(fixture_torus(), a3, grid);
    EXPECT_EQ(p.s, grid);
    EXPECT_EQ(p.source, with_pair ? ProfileSource::Pair : ProfileSource::Intrinsic);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(p.K[i], p.K[0], 1e-6);
      EXPECT_NEAR(p.r[i], p.r[0], 1e-6);
      EXPECT_NEAR(p.k[i], p.k[0], 1e-6);
    }
    EXPECT_NEAR(p.r[0], T0.r(), 1e-12);
    EXPECT_NEAR(std::abs(p.bitorsion(0)), T0.abs_bitorsion(), 1e-12);
  }
}

TEST(CurvatureProfile, DegenerateCurvePropagates) {
  const ParametricCurve planar = torus(0.8, 1.0, 0.6, 1.0);
  EXPECT_EQ(kind_of([&] { curvature_profile(planar, std::nullopt, fixture_grid()); }), ErrorKind::ZeroTorsion);
}

TEST(CurvatureProfile, ValidationRejectsBadGrids) {
  CurvatureProfile p;
  p.s = {0.0, 0.0};
  p.K = p.r = p.k = {1.0, 1.0};
  EXPECT_THROW(p.validate(), Error);
  p.s = {0.0, 1.0};
  p.k = {1.0, std::nan("")};
  EXPECT_THROW(p.validate(), Error);
}

TEST(AlignFrameSigns, RemovesAntipodalJumps) {
  const FrameProvider frames = intrinsic_frames(fixture_torus());
  const auto grid = uniform_grid(0.5, 1.5, 11);
  std::vector<Frame4> fs;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Frame4 f = frames(grid[i]);
    if (i % 3 == 1) {
      f.N2 = -f.N2;
      f.N3 = -f.N3;
      f.torsion = -f.torsion;
    }
    fs.push_back(f);
  }
  align_frame_signs(fs);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Frame4 ref = frames(grid[i]);
    EXPECT_EQ(fs[i].N2, ref.N2);
    EXPECT_EQ(fs[i].torsion, ref.torsion);
  }
}
