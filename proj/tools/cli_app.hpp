#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qbertrand/qbertrand.hpp"

namespace qbertrand::cli {

enum ExitCode : int {
  kOk = 0,
  kVerificationFailed = 1,
  kInputError = 2,
  kGeometricDegeneracy = 3,
  kFitFailure = 4,
};

struct Config {
  std::string curve;
  std::string spatial;
  std::string constants;
  std::string profile;
  std::optional<double> s0, s1;
  int samples = 101;
  std::vector<double> step;
  std::optional<double> tol;
  std::optional<double> degeneracy;
  std::optional<double> c, b;
  std::string out;
  std::string report;
};

namespace detail {

inline StepSizes steps_from(const Config& cfg) {
  StepSizes steps;
  if (cfg.step.size() == 1) {
    steps.by_order[0] = steps.by_order[1] = cfg.step[0];
  } else if (cfg.step.size() == 4) {
    for (std::size_t i = 0; i < 4; ++i) steps.by_order[i] = cfg.step[i];
  } else if (!cfg.step.empty()) {
    throw Error(ErrorKind::InvalidInput, "--step takes 1 value (orders 1-2) or 4 values (orders 1-4)");
  }
  for (double h : steps.by_order) {
    if (!(h > 0.0)) throw Error(ErrorKind::InvalidInput, "--step values must be positive");
  }
  return steps;
}

inline FrameOptions frame_options(const Config& cfg) {
  FrameOptions o;
  o.steps = steps_from(cfg);
  if (cfg.degeneracy) o.degeneracy = *cfg.degeneracy;
  return o;
}

struct Inputs {
  ParametricCurve curve;
  std::optional<ParametricCurve> spatial;
  std::vector<double> grid;
};

// Grid over the curve domain trimmed by the widest differentiation margin,
// so that every downstream finite difference stays inside the domain.
inline std::vector<double> make_grid(const Config& cfg, const Interval& domain, const StepSizes& steps) {
  if (cfg.samples < 3) throw Error(ErrorKind::InvalidInput, "--samples must be at least 3");
  const double m = steps.max_margin();
  const Interval usable{domain.lo + m, domain.hi - m};
  const double s0 = cfg.s0.value_or(usable.lo);
  const double s1 = cfg.s1.value_or(usable.hi);
  if (!(s0 < s1)) throw Error(ErrorKind::InvalidInput, "--s0 must be smaller than --s1");
  if (!usable.contains(s0) || !usable.contains(s1)) {
    throw Error(ErrorKind::InvalidInput, "grid [" + io::format_number(s0) + ", " + io::format_number(s1) +
                                             "] leaves the usable range [" + io::format_number(usable.lo) + ", " +
                                             io::format_number(usable.hi) + "]");
  }
  return uniform_grid(s0, s1, cfg.samples);
}

inline Inputs load_inputs(const Config& cfg) {
  if (cfg.curve.empty()) throw Error(ErrorKind::InvalidInput, "--curve is required");
  ParametricCurve curve = make_curve(io::load_curve_spec(cfg.curve));
  std::optional<ParametricCurve> spatial;
  if (!cfg.spatial.empty()) spatial = make_curve(io::load_curve_spec(cfg.spatial));
  std::vector<double> grid = make_grid(cfg, curve.domain(), steps_from(cfg));
  return {std::move(curve), std::move(spatial), std::move(grid)};
}

inline CurvatureProfile load_profile(const Config& cfg) {
  if (!cfg.profile.empty()) return io::load_profile_csv(cfg.profile);
  const Inputs in = load_inputs(cfg);
  return curvature_profile(in.curve, in.spatial, in.grid, frame_options(cfg));
}

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
  } else {
    io::write_file(path, content);
  }
}

inline void print_conditions(const ConditionsReport& r, std::ostream& os) {
  auto line = [&](const char* name, const ConditionCheck& c, const char* what) {
    os << name << ": " << what << ' ' << io::format_number(c.value) << " (tol " << io::format_number(c.tolerance)
       << ") " << (c.pass ? "ok" : "FAILED") << '\n';
  };
  line("regularity", r.regularity, "min |ar+b(K-k)|");
  line("curvature_relation", r.curvature_relation, "max residual");
  line("plane_relation", r.plane_relation, "max residual");
  line("torsion_nondegeneracy", r.torsion_nondegeneracy, "min |value|");
  os << "epsilon_consistent: " << (r.epsilon_consistent ? "yes" : "NO") << '\n';
  os << "delta_consistent: " << (r.delta_consistent ? "yes" : "NO") << '\n';
}

}  // namespace detail

inline int cmd_frame(const Config& cfg, std::ostream& out, std::ostream& err) {
  const detail::Inputs in = detail::load_inputs(cfg);
  const FrameOptions opts = detail::frame_options(cfg);
  const FrameProvider provider =
      in.spatial ? pair_frames(in.curve, *in.spatial, opts) : intrinsic_frames(in.curve, opts);
  const std::vector<Frame4> frames = frames_on_grid(provider, in.grid);
  double worst = 0.0;
  for (const Frame4& f : frames) worst = std::max(worst, orthonormality_residual(f));
  detail::emit(cfg.out, io::frame_csv(in.grid, frames), out);
  const double tol = cfg.tol.value_or(1e-8);
  std::ostream& info = cfg.out.empty() ? err : out;
  info << "max orthonormality residual: " << io::format_number(worst) << " (tol " << io::format_number(tol) << ")\n";
  return worst <= tol ? kOk : kVerificationFailed;
}

inline int cmd_bertrand_fit(const Config& cfg, std::ostream& out, std::ostream& err) {
  const CurvatureProfile profile = detail::load_profile(cfg);
  FitOptions fo;
  fo.c = cfg.c;
  fo.b = cfg.b;
  if (cfg.tol) fo.residual_tol = *cfg.tol;
  const FitResult fit = fit_constants(profile, fo);
  ConditionTolerances tol;
  if (cfg.tol) tol.residual = *cfg.tol;
  const ConditionsReport rep = check_conditions(profile, fit.constants, tol);
  detail::emit(cfg.out, io::to_text(io::constants_to_json(fit.constants)), out);
  std::ostream& info = cfg.out.empty() ? err : out;
  info << "d deviation: " << io::format_number(fit.d_deviation) << '\n';
  detail::print_conditions(rep, info);
  return rep.verdict ? kOk : kVerificationFailed;
}

inline int cmd_bertrand_check(const Config& cfg, std::ostream& out, std::ostream&) {
  if (cfg.constants.empty()) throw Error(ErrorKind::InvalidInput, "--constants is required");
  const BertrandConstants consts = io::load_constants(cfg.constants);
  const CurvatureProfile profile = detail::load_profile(cfg);
  ConditionTolerances tol;
  if (cfg.tol) tol.residual = *cfg.tol;
  const ConditionsReport rep = check_conditions(profile, consts, tol);
  if (!cfg.report.empty()) io::write_file(cfg.report, io::to_text(io::conditions_to_json(rep)));
  detail::print_conditions(rep, out);
  out << "verdict: " << (rep.verdict ? "pass" : "FAIL") << '\n';
  return rep.verdict ? kOk : kVerificationFailed;
}

inline int cmd_bertrand_mate(const Config& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.constants.empty()) throw Error(ErrorKind::InvalidInput, "--constants is required");
  const BertrandConstants consts = io::load_constants(cfg.constants);
  const detail::Inputs in = detail::load_inputs(cfg);
  const FrameOptions opts = detail::frame_options(cfg);
  const FrameProvider provider =
      in.spatial ? pair_frames(in.curve, *in.spatial, opts) : intrinsic_frames(in.curve, opts);
  const ParametricCurve mate = construct_mate(in.curve, provider, consts);
  std::string csv = "s,beta0,beta1,beta2,beta3,distance,phi_prime\n";
  for (double s : in.grid) {
    const Quaternion p = mate(s);
    const Frame4 f = provider(s);
    const double phi = phi_prime(f.K, -f.torsion, f.K - f.bitorsion, consts);
    csv += io::format_number(s);
    for (int i = 0; i < 4; ++i) csv += "," + io::format_number(p[i]);
    csv += "," + io::format_number(norm(p - in.curve(s))) + "," + io::format_number(phi) + "\n";
  }
  detail::emit(cfg.out, csv, out);
  (cfg.out.empty() ? err : out) << "mate sampled at " << in.grid.size() << " points\n";
  return kOk;
}

inline int cmd_verify(const Config& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.constants.empty()) throw Error(ErrorKind::InvalidInput, "--constants is required");
  const BertrandConstants consts = io::load_constants(cfg.constants);
  const detail::Inputs in = detail::load_inputs(cfg);
  VerifyOptions vo;
  vo.frames = detail::frame_options(cfg);
  if (cfg.tol) vo.curvature_tol = *cfg.tol;
  const BertrandReport rep = verify_mate(in.curve, in.spatial, consts, in.grid, vo);
  const std::string path = cfg.report.empty() ? cfg.out : cfg.report;
  detail::emit(path, io::to_text(io::report_to_json(rep, consts)), out);
  std::ostream& info = path.empty() ? err : out;
  if (rep.conditions) detail::print_conditions(*rep.conditions, info);
  auto metric = [&](const char* name, const Metric& m) {
    info << name << ": "
         << (m.evaluated ? io::format_number(m.value) + " (tol " + io::format_number(m.tolerance) + ") " +
                               (m.pass ? "ok" : "FAILED")
                         : std::string("not evaluated"))
         << '\n';
  };
  metric("distance_deviation", rep.distance);
  metric("phi_speed_deviation", rep.phi_speed);
  metric("curvature_deviation", rep.curvature);
  metric("frame_deviation", rep.frame);
  metric("span_residual", rep.span);
  for (const std::string& e : rep.errors) info << "error: " << e << '\n';
  info << "verdict: " << (rep.verdict ? "pass" : "FAIL") << '\n';
  return rep.verdict ? kOk : kVerificationFailed;
}

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::InvalidInput: return kInputError;
    case ErrorKind::FitFailure: return kFitFailure;
    default: return kGeometricDegeneracy;
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Quaternionic frames and (1,3)-Bertrand curve verification", "qbertrand"};
  app.require_subcommand(1);

  auto common = [&](CLI::App* sub, bool needs_curve) {
    auto* curve = sub->add_option("--curve", cfg.curve, "curve spec JSON");
    if (needs_curve) curve->required();
    sub->add_option("--spatial", cfg.spatial, "associated spatial curve spec JSON");
    sub->add_option("--s0", cfg.s0, "grid start");
    sub->add_option("--s1", cfg.s1, "grid end");
    sub->add_option("--samples", cfg.samples, "grid points (>= 3)");
    sub->add_option("--step", cfg.step, "finite-difference step: 1 value (orders 1-2) or 4 (orders 1-4)")
        ->expected(1, 4);
    sub->add_option("--tol", cfg.tol, "primary tolerance of the command");
    sub->add_option("--degeneracy", cfg.degeneracy, "degeneracy threshold (default 1e-9)");
    sub->add_option("--out", cfg.out, "output file (default stdout)");
  };

  CLI::App* frame = app.add_subcommand("frame", "write the frame CSV of a curve");
  common(frame, true);

  CLI::App* bertrand = app.add_subcommand("bertrand", "fit, check or build Bertrand mates");
  bertrand->require_subcommand(1);
  CLI::App* fit = bertrand->add_subcommand("fit", "fit constants a, b, c, d");
  common(fit, false);
  fit->add_option("--profile", cfg.profile, "curvature profile CSV (s,K,r,k) instead of a curve");
  fit->add_option("--c", cfg.c, "pin c");
  fit->add_option("--b", cfg.b, "pin b when the data leave it free");
  CLI::App* check = bertrand->add_subcommand("check", "check the Bertrand conditions");
  common(check, false);
  check->add_option("--profile", cfg.profile, "curvature profile CSV (s,K,r,k) instead of a curve");
  check->add_option("--constants", cfg.constants, "constants JSON")->required();
  check->add_option("--report", cfg.report, "conditions JSON report");
  CLI::App* mate = bertrand->add_subcommand("mate", "sample the mate curve");
  common(mate, true);
  mate->add_option("--constants", cfg.constants, "constants JSON")->required();

  CLI::App* verify = app.add_subcommand("verify", "verify a mate against the intrinsic frame oracle");
  common(verify, true);
  verify->add_option("--constants", cfg.constants, "constants JSON")->required();
  verify->add_option("--report", cfg.report, "report JSON (default --out, else stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (frame->parsed()) return cmd_frame(cfg, out, err);
    if (fit->parsed()) {
      if (cfg.profile.empty() && cfg.curve.empty()) throw Error(ErrorKind::InvalidInput, "--curve or --profile is required");
      return cmd_bertrand_fit(cfg, out, err);
    }
    if (check->parsed()) {
      if (cfg.profile.empty() && cfg.curve.empty()) throw Error(ErrorKind::InvalidInput, "--curve or --profile is required");
      return cmd_bertrand_check(cfg, out, err);
    }
    if (mate->parsed()) return cmd_bertrand_mate(cfg, out, err);
    if (verify->parsed()) return cmd_verify(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  err << "error: no subcommand\n";
  return kInputError;
}

}  // namespace qbertrand::cli
