// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <type_traits>
#include <vector>

#include "qbertrand/qbertrand.hpp"
#include "support/oracles.hpp"

using namespace qbertrand;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string fixture(const char* name) { return std::string(QB_FIXTURES) + "/" + name; }

const oracle::Torus& T0 = oracle::kTorus;

ParametricCurve torus() { return make_curve(io::load_curve_spec(fixture("torus.json"))); }
ParametricCurve torus_spatial() { return make_curve(io::load_curve_spec(fixture("torus_spatial.json"))); }
std::vector<double> grid101() { return uniform_grid(0.08, 2 * std::numbers::pi - 0.08, 101); }

struct Pipeline {
  BertrandConstants consts;
  ConditionsReport conditions;
  BertrandReport report;
};

const Pipeline& pipeline() {
  static const Pipeline p = [] {
    const auto grid = grid101();
    const CurvatureProfile profile = curvature_profile(torus(), std::nullopt, grid);
    const BertrandConstants k = fit_constants(profile).constants;
    return Pipeline{k, check_conditions(profile, k), verify_mate(torus(), std::nullopt, k, grid)};
  }();
  return p;
}

Outcome quaternion_algebra() {
  const Quaternion e[] = {kIdentity, kE1, kE2, kE3};
  bool table = true;
  for (const Quaternion& p : e) {
    for (const Quaternion& q : e) table = table && mul(p, q) == oracle::hamilton(p, q);
  }
  table = table && mul(kE1, kE2) == kE3 && mul(kE2, kE3) == kE1 && mul(kE3, kE1) == kE2 && mul(kE1, kE1) == -kIdentity;

  oracle::Rng rng(1001);
  double assoc = 0, conj = 0, normrel = 0, hform = 0;
  for (int i = 0; i < 1000; ++i) {
    const Quaternion p = rng.quaternion(), q = rng.quaternion(), r = rng.quaternion();
    assoc = std::max(assoc, max_abs_diff(mul(mul(p, q), r), mul(p, mul(q, r))));
    conj = std::max(conj, max_abs_diff(conjugate(mul(p, q)), mul(conjugate(q), conjugate(p))));
    const Quaternion a = rng.with_norm(0.1, 10), b = rng.with_norm(0.1, 10);
    const double nn = oracle::len4(a) * oracle::len4(b);
    normrel = std::max(normrel, std::abs(norm(mul(a, b)) - nn) / nn);
    hform = std::max(hform, std::abs(inner(a, b) - oracle::h_formula(a, b)) / std::max(1.0, nn));
  }
  const bool pass = table && assoc <= 1e-12 && conj <= 1e-12 && normrel <= 1e-10 && hform <= 1e-12;
  return {pass, std::string("table ") + (table ? "exact" : "WRONG") + ", assoc " + sci(assoc) + ", conj " + sci(conj) +
                    ", norm " + sci(normrel) + ", h " + sci(hform)};
}

Outcome spatial_cross() {
  oracle::Rng rng(1002);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto [p, q] = rng.orthogonal_spatial_pair();
    const Quaternion pq = oracle::hamilton(p, q);
    const Vec3 c = cross(p.v, q.v);
    worst = std::max({worst, std::abs(mul(p, q).s), max_abs_diff(mul(p, q), Quaternion::spatial(c)),
                      max_abs_diff(pq, Quaternion::spatial(c))});
  }
  return {worst <= 1e-12, "max |pq - p x q| " + sci(worst)};
}

Outcome frame_orthonormality() {
  const auto grid = grid101();
  double t4 = 0, pair = 0, s3 = 0, fourier = 0;
  const ParametricCurve a4 = torus(), a3 = torus_spatial();
  for (double s : grid) {
    t4 = std::max(t4, orthonormality_residual(frame4_intrinsic(a4, s)));
    pair = std::max(pair, orthonormality_residual(frame4_from_pair(a4, a3, s)));
    s3 = std::max(s3, orthonormality_residual(frame3_at(a3, s)));
  }
  const ParametricCurve f = reparameterize_by_arclength(make_curve(io::load_curve_spec(fixture("fourier.json"))), 400);
  const Interval d = f.domain();
  for (double s : uniform_grid(d.lo, d.hi, 101)) fourier = std::max(fourier, orthonormality_residual(frame4_intrinsic(f, s)));
  const double worst = std::max({t4, pair, s3, fourier});
  return {worst <= 1e-8, "torus " + sci(t4) + ", pair " + sci(pair) + ", helix " + sci(s3) + ", fourier " + sci(fourier)};
}

Outcome frame_ode() {
  const FrameProvider frames = intrinsic_frames(torus());
  const double good = frame_ode_residual(frames, grid101()).max();
  const FrameProvider corrupted = [frames](double s) {
    Frame4 f = frames(s);
    f.N2 = -f.N2;
    return f;
  };
  const double bad = frame_ode_residual(corrupted, grid101()).max();
  return {good < 1e-4 && bad > 0.1, "residual " + sci(good) + ", corrupted " + sci(bad)};
}

Outcome bertrand_conditions() {
  const ConditionsReport& c = pipeline().conditions;
  const bool pass = c.verdict && c.curvature_relation.value < 1e-8 && c.plane_relation.value < 1e-8;
  return {pass, "eq residuals " + sci(c.curvature_relation.value) + ", " + sci(c.plane_relation.value) +
                    "; min |regularity| " + sci(c.regularity.value) + ", min |nondegeneracy| " +
                    sci(c.torsion_nondegeneracy.value)};
}

Outcome constant_distance() {
  const Pipeline& p = pipeline();
  const ParametricCurve a4 = torus();
  const ParametricCurve mate = construct_mate(a4, intrinsic_frames(a4), p.consts);
  const double expected = std::hypot(p.consts.a(), p.consts.b());
  double worst = 0;
  const auto grid = grid101();
  for (double s : grid) worst = std::max(worst, std::abs(oracle::len4(mate(s) - a4(s)) - expected));
  return {worst < 1e-10 && grid.size() == 101, "max deviation " + sci(worst) + " over 101 points"};
}

Outcome phi_consistency() {
  const Pipeline& p = pipeline();
  const ParametricCurve a4 = torus();
  const FrameProvider frames = intrinsic_frames(a4);
  const ParametricCurve mate = construct_mate(a4, frames, p.consts);
  double worst = 0;
  for (double s : grid101()) {
    const Frame4 f = frames(s);
    const double fd = oracle::len4(oracle::central_diff(mate, s, 1e-3));
    worst = std::max(worst, std::abs(fd - phi_prime(f.K, -f.torsion, f.K - f.bitorsion, p.consts)));
  }
  return {worst <= 1e-5 && p.report.phi_speed.pass,
          "oracle " + sci(worst) + ", report " + sci(p.report.phi_speed.value)};
}

Outcome oracle_equivalence() {
  const BertrandReport& r = pipeline().report;
  const MateCurvatures m = mate_curvatures_closed_form(1, 1, 0, BertrandConstants(1, 2, 0, 1, 1, 1));
  const double hand = std::max({std::abs(m.K - std::sqrt(2.0) / 3.0), std::abs(std::abs(m.torsion) - 1 / (3 * std::sqrt(2.0))),
                                std::abs(std::abs(m.bitorsion) - 1 / (3 * std::sqrt(2.0)))});
  const bool pass = r.curvature.evaluated && r.curvature.value <= 1e-4 && r.verdict && hand <= 1e-12;
  return {pass, "torus oracle " + sci(r.curvature.value) + ", worked values " + sci(hand)};
}

Outcome span_condition() {
  const BertrandReport& r = pipeline().report;
  return {r.span.evaluated && r.span.value < 1e-5, "off-span residual " + sci(r.span.value)};
}

Outcome kk_forms() {
  static_assert(std::is_invocable_v<decltype(&mate_curvatures_Kk_form), double, double, const BertrandConstants&>);
  static_assert(
      !std::is_invocable_v<decltype(&mate_curvatures_Kk_form), double, double, double, const BertrandConstants&>);
  oracle::Rng rng(1010);
  double agree = 0, kbar = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = oracle::random_bertrand_tuple(rng);
    const BertrandConstants k(t.a, t.b, t.c, t.d, t.epsilon, t.delta);
    const MateCurvatures kk = mate_curvatures_Kk_form(t.K, t.k, k);
    const MateCurvatures cf = mate_curvatures_closed_form(t.K, t.r, t.k, k);
    agree = std::max({agree, std::abs(std::abs(kk.K) - std::abs(cf.K)),
                      std::abs(std::abs(kk.torsion) - std::abs(cf.torsion)),
                      std::abs(std::abs(kk.bitorsion) - std::abs(cf.bitorsion))});
    kbar = std::max(kbar, std::abs(mate_spatial_curvatures(t.K, t.k, k).k - (kk.K - kk.bitorsion)));
  }
  return {agree <= 1e-10 && kbar <= 1e-12, "K,k vs closed form " + sci(agree) + ", kbar identity " + sci(kbar)};
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) { return io::read_file(p.string()); }

Outcome cli_contract() {
  const fs::path dir = fs::temp_directory_path() / ("qbertrand_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string bin = QB_CLI;
  const std::string quiet = " >/dev/null 2>&1";
  const std::string torus_json = fixture("torus.json");
  const std::string consts = (dir / "consts.json").string();

  const int fit = shell(bin + " bertrand fit --curve " + torus_json + " --out " + consts + quiet);
  const int v1 = shell(bin + " verify --curve " + torus_json + " --constants " + consts + " --report " +
                       (dir / "r1.json").string() + quiet);
  const int v2 = shell(bin + " verify --curve " + torus_json + " --constants " + consts + " --report " +
                       (dir / "r2.json").string() + quiet);
  const bool identical = v1 == 0 && v2 == 0 && slurp(dir / "r1.json") == slurp(dir / "r2.json");

  io::write_file((dir / "bad.json").string(), R"({"a": 0.8, "b": -0.69, "c": 0, "d": -0.72, "epsilon": 1, "delta": -1})");
  const int c1 = shell(bin + " verify --curve " + torus_json + " --constants " + (dir / "bad.json").string() + quiet);
  const int c2 = shell(bin + " frame --curve " + fixture("malformed.json") + quiet);
  const int c3 = shell(bin + " frame --curve " + fixture("line.json") + quiet);
  const int c4 = shell(bin + " bertrand fit --profile " + fixture("profile_nonconstant_d.csv") + quiet);
  fs::remove_all(dir);

  const bool codes = fit == 0 && v1 == 0 && c1 == 1 && c2 == 2 && c3 == 3 && c4 == 4;
  return {identical && codes, std::string("reports ") + (identical ? "identical" : "DIFFER") + ", exit codes " +
                                  std::to_string(v1) + "," + std::to_string(c1) + "," + std::to_string(c2) + "," +
                                  std::to_string(c3) + "," + std::to_string(c4)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"quaternion algebra", quaternion_algebra},
      {"spatial cross product", spatial_cross},
      {"frame orthonormality", frame_orthonormality},
      {"frame ODE residual", frame_ode},
      {"Bertrand conditions on fitted constants", bertrand_conditions},
      {"constant distance", constant_distance},
      {"mate speed vs phi'", phi_consistency},
      {"oracle curvature equivalence", oracle_equivalence},
      {"span condition", span_condition},
      {"K,k forms and spatial mate curvatures", kk_forms},
      {"CLI determinism and exit codes", cli_contract},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
