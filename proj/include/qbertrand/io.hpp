#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbertrand/bertrand.hpp"
#include "qbertrand/curve_spec.hpp"
#include "qbertrand/frames.hpp"

namespace qbertrand::io {

using Json = nlohmann::ordered_json;

/// 17 significant digits, lowercase scientific; identical bits give
/// identical text.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidInput, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorKind::InvalidInput, "failed writing '" + path + "'");
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::InvalidInput, what + ": malformed JSON: " + e.what());
  }
}

namespace detail {

inline double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw Error(ErrorKind::InvalidInput, what + " must be a number");
  return j.get<double>();
}

inline std::vector<std::vector<double>> matrix(const Json& j, const std::string& what) {
  if (!j.is_array()) throw Error(ErrorKind::InvalidInput, what + " must be a list of lists");
  std::vector<std::vector<double>> m;
  for (const Json& row : j) {
    if (!row.is_array()) throw Error(ErrorKind::InvalidInput, what + " must be a list of lists");
    std::vector<double>& out = m.emplace_back();
    for (const Json& x : row) out.push_back(number(x, what));
  }
  return m;
}

// Writes JSON with every double through format_number so output is
// byte-stable; non-finite numbers become null.
inline void dump(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        dump(it.value(), out, indent + 2);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      bool scalars = std::none_of(j.begin(), j.end(), [](const Json& x) { return x.is_structured(); });
      if (scalars) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          dump(j[i], out, indent + 2);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        dump(j[i], out, indent + 2);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      out += std::isfinite(x) ? format_number(x) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

inline std::string to_text(const Json& j) {
  std::string out;
  detail::dump(j, out, 0);
  out += "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Curve specs

inline CurveSpec curve_spec_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "curve spec must be a JSON object");
  if (!j.contains("family") || !j["family"].is_string()) {
    throw Error(ErrorKind::InvalidInput, "curve spec needs a string \"family\"");
  }
  CurveSpec spec;
  spec.family = family_from_string(j["family"].get<std::string>());
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw Error(ErrorKind::InvalidInput, "\"params\" must be an object");
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
      spec.params[it.key()] = detail::number(it.value(), "parameter '" + it.key() + "'");
    }
  }
  if (j.contains("domain")) {
    const Json& d = j["domain"];
    if (!d.is_array() || d.size() != 2) throw Error(ErrorKind::InvalidInput, "\"domain\" must be [lo, hi]");
    spec.domain = {detail::number(d[0], "domain"), detail::number(d[1], "domain")};
  }
  if (spec.family == CurveFamily::Fourier) {
    if (!j.contains("coeffs") || !j["coeffs"].is_object() || !j["coeffs"].contains("cos")) {
      throw Error(ErrorKind::InvalidInput, "fourier curve needs \"coeffs\": {\"cos\": ..., \"sin\": ...}");
    }
    spec.coeffs.cos = detail::matrix(j["coeffs"]["cos"], "coeffs.cos");
    if (j["coeffs"].contains("sin")) spec.coeffs.sin = detail::matrix(j["coeffs"]["sin"], "coeffs.sin");
  }
  return spec;
}

inline CurveSpec load_curve_spec(const std::string& path) {
  return curve_spec_from_json(parse_json(read_file(path), path));
}

// ---------------------------------------------------------------------------
// Constants

inline BertrandConstants constants_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidInput, "constants must be a JSON object");
  auto field = [&](const char* name) {
    if (!j.contains(name)) throw Error(ErrorKind::InvalidInput, std::string("constants missing \"") + name + "\"");
    return detail::number(j[name], name);
  };
  auto sign = [&](const char* name) {
    const double v = field(name);
    if (v != 1.0 && v != -1.0) throw Error(ErrorKind::InvalidInput, std::string(name) + " must be 1 or -1");
    return static_cast<int>(v);
  };
  return BertrandConstants(field("a"), field("b"), field("c"), field("d"), sign("epsilon"), sign("delta"));
}

inline Json constants_to_json(const BertrandConstants& k) {
  Json j;
  j["a"] = k.a();
  j["b"] = k.b();
  j["c"] = k.c();
  j["d"] = k.d();
  j["epsilon"] = k.epsilon();
  j["delta"] = k.delta();
  return j;
}

inline BertrandConstants load_constants(const std::string& path) {
  return constants_from_json(parse_json(read_file(path), path));
}

// ---------------------------------------------------------------------------
// CSV

inline std::string frame_csv_header() {
  std::string h = "s";
  for (const char* v : {"T", "N1_", "N2_", "N3_"}) {
    for (int i = 0; i < 4; ++i) h += "," + std::string(v) + std::to_string(i);
  }
  return h + ",K,torsion,bitorsion";
}

inline std::string frame_csv(const std::vector<double>& grid, const std::vector<Frame4>& frames) {
  std::string out = frame_csv_header() + "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out += format_number(grid[i]);
    for (const Quaternion& v : frames[i].vectors()) {
      for (int c = 0; c < 4; ++c) out += "," + format_number(v[c]);
    }
    out += "," + format_number(frames[i].K) + "," + format_number(frames[i].torsion) + "," +
           format_number(frames[i].bitorsion) + "\n";
  }
  return out;
}

inline std::string profile_csv(const CurvatureProfile& p) {
  std::string out = "s,K,r,k\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    out += format_number(p.s[i]) + "," + format_number(p.K[i]) + "," + format_number(p.r[i]) + "," +
           format_number(p.k[i]) + "\n";
  }
  return out;
}

/// Reads a CSV with header s,K,r,k (any further columns are ignored).
inline CurvatureProfile profile_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::InvalidInput, "profile CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("s,K,r,k", 0) != 0) throw Error(ErrorKind::InvalidInput, "profile CSV header must start with s,K,r,k");
  CurvatureProfile p;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double v[4];
    for (double& x : v) {
      if (!std::getline(row, cell, ',')) {
        throw Error(ErrorKind::InvalidInput, "profile CSV line " + std::to_string(lineno) + " has too few columns");
      }
      try {
        std::size_t used = 0;
        x = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidInput, "profile CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    p.s.push_back(v[0]);
    p.K.push_back(v[1]);
    p.r.push_back(v[2]);
    p.k.push_back(v[3]);
  }
  p.validate();
  return p;
}

inline CurvatureProfile load_profile_csv(const std::string& path) { return profile_from_csv(read_file(path)); }

// ---------------------------------------------------------------------------
// Reports

inline Json condition_json(const ConditionCheck& c, bool is_equality) {
  Json j;
  j[is_equality ? "max_residual" : "min_abs_value"] = c.value;
  j["tolerance"] = c.tolerance;
  j["pass"] = c.pass;
  j["values"] = c.values;
  return j;
}

inline Json conditions_to_json(const ConditionsReport& r) {
  Json j;
  j["regularity"] = condition_json(r.regularity, false);
  j["curvature_relation"] = condition_json(r.curvature_relation, true);
  j["plane_relation"] = condition_json(r.plane_relation, true);
  j["torsion_nondegeneracy"] = condition_json(r.torsion_nondegeneracy, false);
  j["epsilon_consistent"] = r.epsilon_consistent;
  j["delta_consistent"] = r.delta_consistent;
  j["verdict"] = r.verdict;
  return j;
}

inline Json metric_json(const Metric& m) {
  Json j;
  j["value"] = m.value;
  j["tolerance"] = m.tolerance;
  j["evaluated"] = m.evaluated;
  j["pass"] = m.pass;
  return j;
}

inline Json report_to_json(const BertrandReport& r, const BertrandConstants& consts) {
  Json j;
  j["constants"] = constants_to_json(consts);
  j["samples"] = r.grid.size();
  if (!r.grid.empty()) j["grid"] = Json::array({r.grid.front(), r.grid.back()});
  j["conditions"] = r.conditions ? conditions_to_json(*r.conditions) : Json(nullptr);
  j["distance_deviation"] = r.distance.value;
  j["curvature_deviation"] = r.curvature.value;
  j["span_residual"] = r.span.value;
  Json checks;
  checks["distance"] = metric_json(r.distance);
  checks["phi_speed"] = metric_json(r.phi_speed);
  checks["unit_speed"] = metric_json(r.unit_speed);
  checks["curvature"] = metric_json(r.curvature);
  checks["frame"] = metric_json(r.frame);
  checks["span"] = metric_json(r.span);
  checks["closed_form_orthonormality"] = metric_json(r.closed_form_orthonormality);
  checks["gamma_constancy"] = metric_json(r.gamma_constancy);
  j["checks"] = checks;
  Json signs;
  signs["K"] = r.curvature_signs_agree[0];
  signs["torsion"] = r.curvature_signs_agree[1];
  signs["bitorsion"] = r.curvature_signs_agree[2];
  j["curvature_signs_agree"] = signs;
  Json kk;
  kk["available"] = r.kk_form_available;
  kk["deviation"] = r.kk_form_deviation;
  kk["note"] = r.kk_form_note;
  j["kk_form"] = kk;
  Json residuals;
  residuals["distance"] = r.distance_residuals;
  residuals["curvature"] = r.curvature_residuals;
  residuals["span"] = r.span_residuals;
  j["residuals"] = residuals;
  j["errors"] = r.errors;
  j["verdict"] = r.verdict;
  return j;
}

}  // namespace qbertrand::io
