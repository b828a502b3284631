#pragma once

// JSON experiment specs, their schema validation, and the run harness that
// turns a spec into a content-addressed run directory of CSV artifacts, a
// gnuplot script per scan, and a manifest with digests for every output.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mprt/diffusion.hpp"
#include "mprt/forward.hpp"
#include "mprt/inversion.hpp"
#include "mprt/io.hpp"
#include "mprt/peierls.hpp"

namespace mprt {

inline const char* tool_version() { return "0.1.0"; }

using json = nlohmann::json;

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::string& where,
                                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw validation_error("unknown key '" + it.key() + "' in " + where);
  }
}

inline double need_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw validation_error(where + " is missing '" + key + "'");
  if (!obj[key].is_number()) throw validation_error(where + "." + key + " must be a number");
  return obj[key].get<double>();
}

}  // namespace detail

inline json load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open spec file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    // nlohmann reports byte and line/column in e.what().
    throw validation_error(std::string("spec parse error: ") + e.what());
  }
}

// A coefficient value: a bare number, {"constant": c}, {"csv": path}, or
// {"bump": {base, amplitude, width, center}}.
inline ScalarField resolve_field(const json& v, const SpatialGrid& g, const std::string& where) {
  if (v.is_number()) return ScalarField(g, v.get<double>());
  if (!v.is_object()) throw validation_error(where + " must be a number or an object");
  detail::reject_unknown_keys(v, where, {"constant", "csv", "bump"});
  if (v.contains("constant")) return ScalarField(g, detail::need_number(v, "constant", where));
  if (v.contains("csv")) {
    if (!v["csv"].is_string()) throw validation_error(where + ".csv must be a path string");
    return read_scalar_csv(v["csv"].get<std::string>(), g);
  }
  if (v.contains("bump")) {
    const json& b = v["bump"];
    detail::reject_unknown_keys(b, where + ".bump", {"base", "amplitude", "width", "center"});
    double base = detail::need_number(b, "base", where + ".bump");
    double amp = detail::need_number(b, "amplitude", where + ".bump");
    double width = detail::need_number(b, "width", where + ".bump");
    require(width > 0.0, where + ".bump.width must be positive");
    Vec2 c{0.0, 0.0};
    if (b.contains("center")) {
      if (!b["center"].is_array() || b["center"].size() != 2)
        throw validation_error(where + ".bump.center must be [x, y]");
      c = {b["center"][0].get<double>(), b["center"][1].get<double>()};
    }
    return ScalarField(g, [=](Vec2 p) {
      Vec2 d = p - c;
      return base + amp * std::exp(-dot(d, d) / (width * width));
    });
  }
  throw validation_error(where + " needs one of 'constant', 'csv', 'bump'");
}

struct ResolvedSpec {
  std::string kind;
  Domain domain = Domain::unit_disk();
  double h = 0.0;
  int n_v = 16;

  // Solver-family blocks; presence depends on kind.
  std::vector<ScalarField> sigma_coeffs;  // model.sigma_a
  double q = 1.0;
  ScalarField sigma_s;
  ScalarField absorption;  // plain field for spectral scans
  std::vector<double> sources;
  std::vector<double> epsilon;
  json diffusion;       // optional D override
  json perturbation;    // scans
  double tol_fp = 1e-8, tol_si = 1e-8, tol_inv = 1e-8, tol_diff = 1e-10;
  int n_fp = 200, n_si = 200, n_inv = 200;

  std::shared_ptr<SpatialGrid> grid;

  MPAModel model() const { return MPAModel(sigma_coeffs, q); }
};

// Parses and validates the spec. Structural and invariant errors throw; on
// success the grid is built and every coefficient field is resolved, but no
// solver runs.
inline ResolvedSpec validate_spec(const json& j) {
  if (!j.is_object()) throw validation_error("spec must be a JSON object");
  detail::reject_unknown_keys(j, "spec",
                              {"kind", "domain", "grid", "quadrature", "model", "scattering",
                               "absorption", "source", "epsilon", "tolerances", "perturbation",
                               "diffusion"});
  ResolvedSpec r;
  if (!j.contains("kind") || !j["kind"].is_string())
    throw validation_error("spec needs a string 'kind'");
  r.kind = j["kind"].get<std::string>();
  static const std::vector<std::string> kinds = {"forward",       "diffusion",
                                                 "invert",        "spectral-scan",
                                                 "stability-scan", "diffusion-limit-scan"};
  bool known = false;
  for (const auto& k : kinds) known = known || k == r.kind;
  if (!known) throw validation_error("unknown experiment kind '" + r.kind + "'");

  if (j.contains("domain")) {
    const json& d = j["domain"];
    detail::reject_unknown_keys(d, "domain", {"shape", "width", "height"});
    std::string shape = d.value("shape", "disk");
    if (shape == "disk") {
      r.domain = Domain::unit_disk();
    } else if (shape == "rectangle") {
      r.domain = Domain::rectangle(detail::need_number(d, "width", "domain"),
                                   detail::need_number(d, "height", "domain"));
    } else {
      throw validation_error("domain.shape must be 'disk' or 'rectangle'");
    }
  }

  if (!j.contains("grid")) throw validation_error("spec needs a 'grid' block");
  detail::reject_unknown_keys(j["grid"], "grid", {"h"});
  r.h = detail::need_number(j["grid"], "h", "grid");
  require(r.h > 0.0, "grid.h must be positive");
  r.grid = std::make_shared<SpatialGrid>(r.domain, r.h);

  if (j.contains("quadrature")) {
    detail::reject_unknown_keys(j["quadrature"], "quadrature", {"n_v"});
    double nv = detail::need_number(j["quadrature"], "n_v", "quadrature");
    r.n_v = static_cast<int>(nv);
    require(r.n_v >= 2 && r.n_v % 2 == 0, "quadrature.n_v must be even and at least 2");
  }

  bool needs_model = r.kind == "forward" || r.kind == "diffusion" || r.kind == "invert" ||
                     r.kind == "stability-scan" || r.kind == "diffusion-limit-scan";
  if (needs_model) {
    if (!j.contains("model"))
      throw validation_error("spec needs a 'model' block with sigma_a coefficients; "
                             "the law requires sigma_{a,0} > 0");
    const json& m = j["model"];
    detail::reject_unknown_keys(m, "model", {"sigma_a", "q"});
    if (!m.contains("sigma_a") || !m["sigma_a"].is_array() || m["sigma_a"].empty())
      throw validation_error(
          "model.sigma_a must be a nonempty coefficient list; the law requires sigma_{a,0} > 0");
    int k = 0;
    for (const json& c : m["sigma_a"])
      r.sigma_coeffs.push_back(resolve_field(c, *r.grid, "model.sigma_a[" + std::to_string(k++) + "]"));
    if (m.contains("q")) r.q = detail::need_number(m, "q", "model");
    // Construction enforces the model invariants (sigma_{a,0} > 0, q >= 1).
    (void)MPAModel(r.sigma_coeffs, r.q);
  }

  if (!j.contains("scattering")) throw validation_error("spec needs a 'scattering' block");
  detail::reject_unknown_keys(j["scattering"], "scattering", {"sigma_s"});
  if (!j["scattering"].contains("sigma_s"))
    throw validation_error("scattering needs 'sigma_s'");
  r.sigma_s = resolve_field(j["scattering"]["sigma_s"], *r.grid, "scattering.sigma_s");
  if (r.sigma_s.min() < 0.0) throw validation_error("scattering.sigma_s must be nonnegative");

  if (r.kind == "spectral-scan") {
    if (!j.contains("absorption"))
      throw validation_error("spectral-scan needs an 'absorption' field");
    r.absorption = resolve_field(j["absorption"], *r.grid, "absorption");
    if (r.absorption.min() < 0.0) throw validation_error("absorption must be nonnegative");
  } else if (j.contains("absorption")) {
    throw validation_error("'absorption' is only valid for spectral-scan; use 'model' instead");
  }

  bool needs_source = r.kind == "forward" || r.kind == "diffusion" || r.kind == "invert" ||
                      r.kind == "stability-scan" || r.kind == "diffusion-limit-scan";
  if (needs_source) {
    if (!j.contains("source")) throw validation_error("spec needs a 'source' block");
    const json& s = j["source"];
    detail::reject_unknown_keys(s, "source", {"constant", "list"});
    if (s.contains("list")) {
      if (!s["list"].is_array() || s["list"].empty())
        throw validation_error("source.list must be a nonempty array");
      for (const json& v : s["list"]) {
        if (!v.is_number()) throw validation_error("source.list entries must be numbers");
        r.sources.push_back(v.get<double>());
      }
    } else {
      r.sources.push_back(detail::need_number(s, "constant", "source"));
    }
    for (double c : r.sources)
      require(c > 0.0, "sources must be strictly positive");
    for (size_t i = 0; i + 1 < r.sources.size(); ++i)
      if (!(r.sources[i] < r.sources[i + 1]))
        throw validation_error(
            "source.list must be strictly increasing (monotone sources f_0 < f_1 < ...)");
    if (r.kind == "invert" && static_cast<int>(r.sources.size()) != static_cast<int>(r.sigma_coeffs.size()))
      throw validation_error("invert needs exactly degree+1 sources, one per coefficient");
  }

  bool needs_eps = r.kind == "spectral-scan" || r.kind == "stability-scan" ||
                   r.kind == "diffusion-limit-scan";
  if (needs_eps) {
    if (!j.contains("epsilon") || !j["epsilon"].is_array() || j["epsilon"].empty())
      throw validation_error(r.kind + " needs a nonempty 'epsilon' array");
    for (const json& v : j["epsilon"]) {
      if (!v.is_number()) throw validation_error("epsilon entries must be numbers");
      double e = v.get<double>();
      require(e > 0.0, "epsilon values must be positive");
      r.epsilon.push_back(e);
    }
    for (size_t i = 0; i + 1 < r.epsilon.size(); ++i)
      require(r.epsilon[i] > r.epsilon[i + 1], "epsilon list must be strictly decreasing");
  } else if (j.contains("epsilon")) {
    throw validation_error("'epsilon' is only valid for scan kinds");
  }

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    detail::reject_unknown_keys(t, "tolerances",
                                {"tol_fp", "tol_si", "tol_inv", "tol_diff", "n_fp", "n_si", "n_inv"});
    if (t.contains("tol_fp")) r.tol_fp = detail::need_number(t, "tol_fp", "tolerances");
    if (t.contains("tol_si")) r.tol_si = detail::need_number(t, "tol_si", "tolerances");
    if (t.contains("tol_inv")) r.tol_inv = detail::need_number(t, "tol_inv", "tolerances");
    if (t.contains("tol_diff")) r.tol_diff = detail::need_number(t, "tol_diff", "tolerances");
    if (t.contains("n_fp")) r.n_fp = static_cast<int>(detail::need_number(t, "n_fp", "tolerances"));
    if (t.contains("n_si")) r.n_si = static_cast<int>(detail::need_number(t, "n_si", "tolerances"));
    if (t.contains("n_inv"))
      r.n_inv = static_cast<int>(detail::need_number(t, "n_inv", "tolerances"));
    require(r.tol_fp > 0 && r.tol_si > 0 && r.tol_inv > 0 && r.tol_diff > 0,
            "tolerances must be positive");
    require(r.n_fp > 0 && r.n_si > 0 && r.n_inv > 0, "iteration caps must be positive");
  }

  if (j.contains("perturbation")) {
    const json& p = j["perturbation"];
    detail::reject_unknown_keys(p, "perturbation", {"beta", "amplitude", "width", "seed"});
    r.perturbation = p;
  }
  if (j.contains("diffusion")) {
    detail::reject_unknown_keys(j["diffusion"], "diffusion", {"D"});
    r.diffusion = j["diffusion"];
  }
  return r;
}

struct RunOutcome {
  std::string dir;
  json manifest;
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(json& manifest) : m_(manifest) {}

  template <class F>
  auto stage(const std::string& name, F&& f) {
    current_ = name;
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(name, t0);
    } else {
      auto out = f();
      record(name, t0);
      return out;
    }
  }

  const std::string& current() const { return current_; }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point t0) {
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
    m_["timings_ms"][name] = ms;
  }

  json& m_;
  std::string current_;
};

inline void emit(const std::string& dir, const std::string& name, const std::string& body,
                 json& manifest) {
  std::string path = dir + "/" + name;
  write_text_file(path, body);
  manifest["outputs"][name] = hex16(fnv1a64(body));
}

inline ScalarField data_field(const MPAModel& model, const ScalarField& sig, const ScalarField& m) {
  ScalarField H = sig;
  double q = model.q();
  for (int a = 0; a < H.size(); ++a) {
    double p = q == 1.0 ? H[a] : std::pow(H[a], q);
    H[a] = p * m[a];
  }
  return H;
}

}  // namespace detail

// Runs a validated spec, writing artifacts under
//   <out_root>/<kind>-<fnv1a64 of the canonical spec dump>.
// Any module error is rethrown after error.json records the failing stage;
// partial outputs stay in place.
inline RunOutcome run_experiment(const json& spec, const std::string& out_root,
                                 bool quiet = true) {
  ResolvedSpec r = validate_spec(spec);  // throws before any directory exists
  const SpatialGrid& g = *r.grid;

  std::string hash = hex16(fnv1a64(spec.dump()));
  std::string dir = out_root + "/" + r.kind + "-" + hash;
  std::filesystem::create_directories(dir);

  RunOutcome out;
  out.dir = dir;
  json& man = out.manifest;
  man["tool_version"] = tool_version();
  man["kind"] = r.kind;
  man["spec"] = spec;
  man["grid"] = {{"h", r.h}, {"nx", g.nx()}, {"ny", g.ny()}, {"n_active", g.n_active()}};
  man["quadrature"] = {{"n_v", r.n_v}};
  man["outputs"] = json::object();
  man["timings_ms"] = json::object();

  detail::StageClock clk(man);
  auto log = [&](const std::string& s) {
    if (!quiet) std::fprintf(stderr, "%s\n", s.c_str());
  };

  try {
    if (r.kind == "forward") {
      MPAModel model = r.model();
      AngularQuadrature ang(r.n_v);
      FixedPointConfig cfg;
      cfg.tol_fp = r.tol_fp;
      cfg.n_fp = r.n_fp;
      cfg.transport.tol_si = r.tol_si;
      cfg.transport.n_si = r.n_si;
      BoundarySource f = BoundarySource::constant(r.sources.at(0));
      log("forward: solving fixed point");
      ForwardSolution sol = clk.stage("solve", [&] {
        return fixed_point_solve(g, ang, model, r.sigma_s, ScatteringModel::isotropic(), f, cfg);
      });
      clk.stage("write", [&] {
        detail::emit(dir, "u.csv", angular_csv(sol.u, ang), man);
        detail::emit(dir, "mean.csv", scalar_csv(sol.m), man);
        detail::emit(dir, "sigma_a.csv", scalar_csv(sol.sigma_a), man);
        detail::emit(dir, "H.csv", scalar_csv(internal_data(model, sol)), man);
      });
      man["summary"] = {{"outer_iterations", sol.outer_iterations},
                        {"inner_iterations", sol.inner_iterations},
                        {"theta_halvings", sol.theta_halvings},
                        {"residual", sol.residuals.empty() ? 0.0 : sol.residuals.back()}};
    } else if (r.kind == "diffusion") {
      MPAModel model = r.model();
      ScalarField D = r.diffusion.contains("D")
                          ? resolve_field(r.diffusion["D"], g, "diffusion.D")
                          : default_diffusion_coefficient(g, r.sigma_s);
      DiffusionProblem prob = DiffusionProblem::constant_data(g, D, model, r.sources.at(0));
      DiffusionReport rep;
      log("diffusion: solving semilinear problem");
      ScalarField U = clk.stage("solve", [&] {
        return solve_semilinear_diffusion(g, prob, r.tol_diff, &rep);
      });
      clk.stage("write", [&] {
        detail::emit(dir, "U.csv", scalar_csv(U), man);
        detail::emit(dir, "H.csv", scalar_csv(diffusion_data(U, model)), man);
      });
      man["summary"] = {{"theta_disc", rep.theta_disc},
                        {"newton_iterations", rep.newton_iterations},
                        {"picard_iterations", rep.picard_iterations},
                        {"used_fallback", rep.used_fallback}};
    } else if (r.kind == "invert") {
      MPAModel model = r.model();
      AngularQuadrature ang(r.n_v);
      FixedPointConfig fcfg;
      fcfg.tol_fp = r.tol_fp;
      fcfg.n_fp = r.n_fp;
      fcfg.transport.tol_si = r.tol_si;
      fcfg.transport.n_si = r.n_si;
      InversionConfig icfg;
      icfg.tol_inv = r.tol_inv;
      icfg.n_inv = r.n_inv;
      icfg.q = r.q;
      icfg.transport = fcfg.transport;

      std::vector<ScalarField> H;
      std::vector<BoundarySource> fs;
      clk.stage("generate_data", [&] {
        for (size_t i = 0; i < r.sources.size(); ++i) {
          BoundarySource f = BoundarySource::constant(r.sources[i]);
          ForwardSolution sol =
              fixed_point_solve(g, ang, model, r.sigma_s, ScatteringModel::isotropic(), f, fcfg);
          H.push_back(internal_data(model, sol));
          fs.push_back(f);
          detail::emit(dir, "H_" + std::to_string(i) + ".csv", scalar_csv(H.back()), man);
        }
      });
      log("invert: recovering coefficients");
      CoefficientRecovery rec = clk.stage("recover", [&] {
        return recover_mpa_coefficients(g, ang, H, fs, r.sigma_s, ScatteringModel::isotropic(),
                                        icfg);
      });
      clk.stage("write", [&] {
        for (size_t i = 0; i < rec.per_source.size(); ++i) {
          detail::emit(dir, "m_" + std::to_string(i) + ".csv",
                       scalar_csv(rec.per_source[i].m), man);
          detail::emit(dir, "sigma_of_m_" + std::to_string(i) + ".csv",
                       scalar_csv(rec.per_source[i].sigma_of_m), man);
        }
        for (size_t k = 0; k < rec.sigma_k.size(); ++k)
          detail::emit(dir, "sigma_" + std::to_string(k) + ".csv", scalar_csv(rec.sigma_k[k]),
                       man);
      });
      // Condition-number percentiles over cells.
      std::vector<double> cond(rec.cond.data());
      std::sort(cond.begin(), cond.end());
      auto pct = [&](double p) { return cond[static_cast<size_t>(p * (cond.size() - 1))]; };
      json per = json::array();
      for (const Reconstruction& rc : rec.per_source)
        per.push_back({{"iterations", rc.iterations},
                       {"residual", rc.residual},
                       {"floored_cells", rc.floored_cells.size()}});
      man["summary"] = {{"per_source", per},
                        {"unrecoverable_cells", rec.unrecoverable.size()},
                        {"cond_p50", pct(0.5)},
                        {"cond_p90", pct(0.9)},
                        {"cond_max", cond.back()}};
    } else if (r.kind == "spectral-scan") {
      ScanConfig sc;
      sc.eps = r.epsilon;
      if (!r.perturbation.is_null()) {
        sc.beta = r.perturbation.value("beta", 1.0);
        sc.rough_amp = r.perturbation.value("amplitude", 1.0);
        sc.seed = r.perturbation.value("seed", 20260819ull);
      }
      log("spectral-scan: assembling kernels");
      std::vector<ScanRow> rows = clk.stage("scan", [&] {
        return epsilon_scan(g, r.absorption, r.sigma_s, sc);
      });
      clk.stage("write", [&] {
        detail::emit(dir, "scan.csv", scan_csv(rows), man);
        detail::emit(dir, "gap.plt",
                     "set logscale xy\n"
                     "set xlabel 'epsilon'\n"
                     "set ylabel '1 - rho'\n"
                     "set datafile separator ','\n"
                     "plot 'scan.csv' using 1:2 with linespoints title 'spectral gap', \\\n"
                     "     'scan.csv' using 1:($1*$1) with lines title 'eps^2'\n",
                     man);
      });
      man["summary"] = {{"rows", rows.size()},
                        {"slope", rows.empty() ? 0.0 : rows.back().slope_cum}};
    } else if (r.kind == "stability-scan") {
      MPAModel model = r.model();
      double amp = r.perturbation.is_null() ? 0.1 : r.perturbation.value("amplitude", 0.1);
      double width = r.perturbation.is_null() ? 0.1 : r.perturbation.value("width", 0.1);
      BoundarySource f = BoundarySource::constant(r.sources.at(0));

      // Boundary-supported bump added to the zeroth coefficient.
      std::vector<ScalarField> coeffs2 = r.sigma_coeffs;
      for (int a = 0; a < g.n_active(); ++a)
        if (g.boundary_dist(a) < width) coeffs2[0][a] += amp;
      MPAModel model2(coeffs2, r.q);

      std::string csv = "epsilon,weighted_ratio,unweighted_ratio\n";
      json rows = json::array();
      for (size_t ei = 0; ei < r.epsilon.size(); ++ei) {
        double eps = r.epsilon[ei];
        auto row = clk.stage("eps_" + std::to_string(ei), [&] {
          ScaledSolve base = scaled_mean_flux(g, model, eps, r.sigma_s, f, r.tol_fp, r.n_fp);
          ScaledSolve pert = scaled_mean_flux(g, model2, eps, r.sigma_s, f, r.tol_fp, r.n_fp);
          ScalarField su = model.eval(base.m), sut = model2.eval(pert.m);
          ScalarField H = detail::data_field(model, su, base.m);
          ScalarField Ht = detail::data_field(model2, sut, pert.m);
          ScalarField phi = eigenpair_scaled(g, ScaledCoefficients(eps, su, r.sigma_s)).vec;
          double w = l1_stability_report(su, sut, H, Ht, su, &phi, r.q).ratio;
          double u = l1_stability_report(su, sut, H, Ht, su, nullptr, r.q).ratio;
          return std::pair<double, double>(w, u);
        });
        csv += format_g17(eps) + "," + format_g17(row.first) + "," + format_g17(row.second) + "\n";
        rows.push_back({{"epsilon", eps}, {"weighted", row.first}, {"unweighted", row.second}});
      }
      clk.stage("write", [&] {
        detail::emit(dir, "stability.csv", csv, man);
        detail::emit(dir, "ratio.plt",
                     "set logscale x\n"
                     "set xlabel 'epsilon'\n"
                     "set ylabel 'L1 stability ratio'\n"
                     "set datafile separator ','\n"
                     "plot 'stability.csv' using 1:2 with linespoints title 'weighted', \\\n"
                     "     'stability.csv' using 1:3 with linespoints title 'unweighted'\n",
                     man);
      });
      man["summary"] = {{"rows", rows}};
    } else if (r.kind == "diffusion-limit-scan") {
      MPAModel model = r.model();
      double c = r.sources.at(0);
      BoundarySource f = BoundarySource::constant(c);
      ScalarField D = default_diffusion_coefficient(g, r.sigma_s);
      DiffusionProblem prob = DiffusionProblem::constant_data(g, D, model, c);
      ScalarField U = clk.stage("diffusion_solve", [&] {
        return solve_semilinear_diffusion(g, prob, r.tol_diff);
      });

      std::string csv = "epsilon,interior_error,ratio_prev\n";
      json rows = json::array();
      double prev = std::numeric_limits<double>::quiet_NaN();
      for (size_t ei = 0; ei < r.epsilon.size(); ++ei) {
        double eps = r.epsilon[ei];
        double err = clk.stage("eps_" + std::to_string(ei), [&] {
          ScaledSolve s = scaled_mean_flux(g, model, eps, r.sigma_s, f, r.tol_fp, r.n_fp);
          double e = 0.0;
          for (int a = 0; a < g.n_active(); ++a)
            if (g.boundary_dist(a) > 0.2) e = std::max(e, std::abs(s.m[a] - U[a]));
          return e;
        });
        double ratio = prev / err;
        csv += format_g17(eps) + "," + format_g17(err) + "," + format_g17(ratio) + "\n";
        rows.push_back({{"epsilon", eps}, {"interior_error", err}});
        prev = err;
      }
      clk.stage("write", [&] {
        detail::emit(dir, "limit.csv", csv, man);
        detail::emit(dir, "error.plt",
                     "set logscale xy\n"
                     "set xlabel 'epsilon'\n"
                     "set ylabel 'interior sup error'\n"
                     "set datafile separator ','\n"
                     "plot 'limit.csv' using 1:2 with linespoints title 'transport vs diffusion'\n",
                     man);
      });
      man["summary"] = {{"rows", rows}};
    }
  } catch (const error& e) {
    json err = {{"stage", clk.current()}, {"error", e.what()}};
    write_text_file(dir + "/error.json", err.dump(2) + "\n");
    throw;
  }

  write_text_file(dir + "/manifest.json", man.dump(2) + "\n");
  return out;
}

}  // namespace mprt
