#include "mhdrt/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mhdrt/growthrate.hpp"
#include "mhdrt/ivp.hpp"
#include "mhdrt/oracles.hpp"
#include "mhdrt/parallel.hpp"
#include "mhdrt/spectrum.hpp"

namespace mhdrt {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

double need_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

double need_positive(const json& j, const std::string& path) {
  const double v = need_number(j, path);
  if (!(v > 0.0) || !std::isfinite(v)) fail(path, "must be finite and > 0");
  return v;
}

int need_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) fail(path + "." + item.key(), "unknown field");
  }
}

Eigen::Vector2d need_vec2(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(path, "expected an array of 2 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
  }
  check_keys(j, "config",
             {"params", "field", "grid", "kgrid", "sweep", "ivp", "tolerances"});
  if (!j.contains("params")) fail("params", "required");
  if (!j.contains("field")) fail("field", "required");

  RunConfig cfg;
  {
    const json& p = j["params"];
    check_keys(p, "params", {"rho_plus", "rho_minus", "mu_plus", "mu_minus", "g", "ell", "m"});
    for (const char* key : {"rho_plus", "rho_minus", "mu_plus", "mu_minus", "g", "ell", "m"}) {
      if (!p.contains(key)) fail(std::string("params.") + key, "required");
    }
    cfg.params.rho_plus = need_positive(p["rho_plus"], "params.rho_plus");
    cfg.params.rho_minus = need_positive(p["rho_minus"], "params.rho_minus");
    cfg.params.mu_plus = need_positive(p["mu_plus"], "params.mu_plus");
    cfg.params.mu_minus = need_positive(p["mu_minus"], "params.mu_minus");
    cfg.params.g = need_positive(p["g"], "params.g");
    cfg.params.ell = need_positive(p["ell"], "params.ell");
    cfg.params.m = need_positive(p["m"], "params.m");
    if (!(cfg.params.rho_plus > cfg.params.rho_minus)) {
      fail("params.rho_plus",
           "must exceed rho_minus: the analysis assumes a positive density jump [[rho]] > 0");
    }
  }
  {
    const json& f = j["field"];
    if (!f.is_array() || f.size() != 3) fail("field", "expected an array of 3 numbers");
    for (int i = 0; i < 3; ++i) {
      cfg.field.b[i] = need_number(f[i], "field[" + std::to_string(i) + "]");
    }
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, "grid", {"n_upper", "n_lower"});
    if (g.contains("n_upper")) cfg.n_upper = need_int(g["n_upper"], "grid.n_upper");
    if (g.contains("n_lower")) cfg.n_lower = need_int(g["n_lower"], "grid.n_lower");
    if (cfg.n_upper < 8) fail("grid.n_upper", "degree below 8 is too coarse");
    if (cfg.n_lower < 8) fail("grid.n_lower", "degree below 8 is too coarse");
  }
  if (j.contains("kgrid")) {
    const json& kg = j["kgrid"];
    check_keys(kg, "kgrid", {"mode", "min", "max", "count", "direction"});
    if (kg.contains("mode")) {
      cfg.kgrid.mode = kg["mode"].get<std::string>();
      if (cfg.kgrid.mode != "log" && cfg.kgrid.mode != "linear") {
        fail("kgrid.mode", "must be \"log\" or \"linear\"");
      }
    }
    if (kg.contains("min")) cfg.kgrid.min = need_positive(kg["min"], "kgrid.min");
    if (kg.contains("max")) cfg.kgrid.max = need_positive(kg["max"], "kgrid.max");
    if (kg.contains("count")) cfg.kgrid.count = need_int(kg["count"], "kgrid.count");
    if (!(cfg.kgrid.min < cfg.kgrid.max)) fail("kgrid.min", "must be strictly below kgrid.max");
    if (cfg.kgrid.count < 2) fail("kgrid.count", "need at least 2 points");
    if (kg.contains("direction")) {
      if (kg["direction"].is_string()) {
        if (kg["direction"].get<std::string>() != "perp-to-Bstar") {
          fail("kgrid.direction", "string form must be \"perp-to-Bstar\"");
        }
        cfg.kgrid.perp_to_bstar = true;
      } else {
        cfg.kgrid.direction = need_vec2(kg["direction"], "kgrid.direction");
        if (cfg.kgrid.direction.norm() == 0.0) fail("kgrid.direction", "must be nonzero");
        cfg.kgrid.perp_to_bstar = false;
      }
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    check_keys(s, "sweep", {"b3_min", "b3_max", "count"});
    SweepSpec sweep;
    if (s.contains("b3_min")) sweep.b3_min = need_number(s["b3_min"], "sweep.b3_min");
    if (s.contains("b3_max")) sweep.b3_max = need_number(s["b3_max"], "sweep.b3_max");
    if (s.contains("count")) sweep.count = need_int(s["count"], "sweep.count");
    if (!(sweep.b3_min < sweep.b3_max)) fail("sweep.b3_min", "must be strictly below sweep.b3_max");
    if (sweep.count < 2) fail("sweep.count", "need at least 2 rows");
    cfg.sweep = sweep;
  }
  if (j.contains("ivp")) {
    const json& v = j["ivp"];
    check_keys(v, "ivp", {"T", "dt", "seed", "k", "init"});
    if (v.contains("T")) {
      cfg.ivp.T = need_number(v["T"], "ivp.T");
      if (cfg.ivp.T < 0.0) fail("ivp.T", "must be nonnegative");
    }
    if (v.contains("dt")) {
      cfg.ivp.dt = need_number(v["dt"], "ivp.dt");
      if (cfg.ivp.dt < 0.0) fail("ivp.dt", "must be nonnegative");
    }
    if (v.contains("seed")) cfg.ivp.seed = v["seed"].get<std::uint64_t>();
    if (v.contains("k")) {
      cfg.ivp.k = need_vec2(v["k"], "ivp.k");
      if (cfg.ivp.k.norm() == 0.0) fail("ivp.k", "must be nonzero");
    }
    if (v.contains("init")) {
      cfg.ivp.init = v["init"].get<std::string>();
      if (cfg.ivp.init != "growing" && cfg.ivp.init != "random") {
        fail("ivp.init", "must be \"growing\" or \"random\"");
      }
    }
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    check_keys(t, "tolerances", {"eig", "fixed_point", "classify"});
    if (t.contains("eig")) cfg.tolerances.eig = need_positive(t["eig"], "tolerances.eig");
    if (t.contains("fixed_point")) {
      cfg.tolerances.fixed_point = need_positive(t["fixed_point"], "tolerances.fixed_point");
    }
    if (t.contains("classify")) {
      cfg.tolerances.classify = need_positive(t["classify"], "tolerances.classify");
    }
  }
  return cfg;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["params"] = {{"rho_plus", c.params.rho_plus}, {"rho_minus", c.params.rho_minus},
                 {"mu_plus", c.params.mu_plus},   {"mu_minus", c.params.mu_minus},
                 {"g", c.params.g},               {"ell", c.params.ell},
                 {"m", c.params.m}};
  j["field"] = {c.field.b[0], c.field.b[1], c.field.b[2]};
  j["grid"] = {{"n_upper", c.n_upper}, {"n_lower", c.n_lower}};
  j["kgrid"] = {{"mode", c.kgrid.mode}, {"min", c.kgrid.min}, {"max", c.kgrid.max},
                {"count", c.kgrid.count}};
  if (c.kgrid.perp_to_bstar) {
    j["kgrid"]["direction"] = "perp-to-Bstar";
  } else {
    j["kgrid"]["direction"] = {c.kgrid.direction[0], c.kgrid.direction[1]};
  }
  if (c.sweep) {
    j["sweep"] = {{"b3_min", c.sweep->b3_min}, {"b3_max", c.sweep->b3_max},
                  {"count", c.sweep->count}};
  }
  j["ivp"] = {{"T", c.ivp.T}, {"dt", c.ivp.dt}, {"seed", c.ivp.seed},
              {"k", {c.ivp.k[0], c.ivp.k[1]}}, {"init", c.ivp.init}};
  j["tolerances"] = {{"eig", c.tolerances.eig}, {"fixed_point", c.tolerances.fixed_point},
                     {"classify", c.tolerances.classify}};
  return j;
}

std::uint64_t config_hash(const RunConfig& config) {
  const std::string dump = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (const unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

Subcommand subcommand_from_string(const std::string& name) {
  if (name == "mc") return Subcommand::mc;
  if (name == "dispersion") return Subcommand::dispersion;
  if (name == "critical-field") return Subcommand::critical_field;
  if (name == "stability-map") return Subcommand::stability_map;
  if (name == "ivp") return Subcommand::ivp;
  if (name == "verify") return Subcommand::verify;
  throw std::invalid_argument("unknown subcommand: " + name);
}

const char* to_string(Subcommand sc) {
  switch (sc) {
    case Subcommand::mc: return "mc";
    case Subcommand::dispersion: return "dispersion";
    case Subcommand::critical_field: return "critical-field";
    case Subcommand::stability_map: return "stability-map";
    case Subcommand::ivp: return "ivp";
    case Subcommand::verify: return "verify";
  }
  return "unknown";
}

namespace {

std::vector<Eigen::Vector2d> build_k_grid(const RunConfig& cfg) {
  Eigen::Vector2d dir = cfg.kgrid.direction;
  if (cfg.kgrid.perp_to_bstar) {
    const Eigen::Vector2d bstar = cfg.field.horizontal();
    dir = bstar.norm() > 0.0 ? Eigen::Vector2d(-bstar[1], bstar[0]).normalized()
                             : Eigen::Vector2d(0.0, 1.0);
  }
  return make_k_grid(cfg.kgrid.min, cfg.kgrid.max, cfg.kgrid.count, cfg.kgrid.mode == "log", dir);
}

json dispersion_rows(const DispersionCurve& curve) {
  json rows = json::array();
  for (const auto& row : curve.samples) {
    json r;
    r["k1"] = row.result.k[0];
    r["k2"] = row.result.k[1];
    r["status"] = row.error.empty() ? to_string(row.result.status) : "error";
    r["lambda"] = row.result.lambda;
    r["s_star"] = row.result.s_star;
    r["iterations"] = row.result.iterations;
    if (!row.error.empty()) r["error"] = row.error;
    rows.push_back(std::move(r));
  }
  return rows;
}

json run_ivp(const RunConfig& cfg, const TwoLayerGrid& grid, std::uint64_t seed) {
  const QuadForms forms = assemble_forms(cfg.params, cfg.field, cfg.ivp.k, grid);
  ModeState state0;
  double T = cfg.ivp.T, dt = cfg.ivp.dt;
  json extra;
  if (cfg.ivp.init == "growing") {
    const FixedPointResult fp =
        fixed_point(cfg.params, cfg.field, cfg.ivp.k, grid, cfg.tolerances.fixed_point);
    if (!fp.unstable()) {
      throw std::runtime_error(
          "ivp: growing-mode initial data needs an unstable mode; this configuration is stable "
          "at the requested k");
    }
    state0 = growing_mode_state(forms, fp);
    if (T <= 0.0) T = 3.0 / fp.lambda;
    if (dt <= 0.0) dt = 1e-3 / fp.lambda;
    extra["lambda"] = fp.lambda;
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    const int d = static_cast<int>(forms.J.rows());
    Eigen::VectorXcd u(d);
    for (int i = 0; i < d; ++i) u[i] = std::complex<double>(n01(rng), n01(rng));
    u /= std::sqrt(std::real(u.dot(forms.J * u)));
    state0.eta = Eigen::VectorXcd::Zero(d);
    state0.u = u;
    if (T <= 0.0) T = 10.0;
    if (dt <= 0.0) dt = 1e-3;
  }
  const EvolveResult res = evolve(forms, state0, T, dt);
  json rows = json::array();
  for (const auto& row : res.ledger.rows) {
    rows.push_back({{"t", row.t},
                    {"kinetic", row.kinetic},
                    {"magnetic", row.magnetic},
                    {"surface", row.surface},
                    {"dissipation_integral", row.dissipation_integral},
                    {"u_norm", row.u_norm}});
  }
  const GrowthFit fit = growth_fit(res.ledger);
  json payload;
  payload["rows"] = std::move(rows);
  payload["fit"] = {{"fitted_rate", fit.fitted_rate}, {"r2", fit.r2}};
  payload["T"] = T;
  payload["dt"] = dt;
  payload.update(extra);
  return payload;
}

json run_verify(const RunConfig& cfg, const TwoLayerGrid& grid, std::uint64_t seed) {
  json payload;
  const double b3 = cfg.field.vertical();
  const Eigen::Vector2d kvec =
      std::sqrt(cfg.kgrid.min * cfg.kgrid.max) *
      (cfg.kgrid.perp_to_bstar ? Eigen::Vector2d(0.0, 1.0) : cfg.kgrid.direction.normalized());
  bool all_pass = true;

  if (b3 != 0.0) {
    const double bound =
        (cfg.params.m * cfg.params.m + cfg.params.ell * cfg.params.ell) / (b3 * b3);
    const ConstantEstimate po = poincare_check(cfg.field, kvec, grid, 1000, seed ^ 0x01u);
    const bool pass = po.best_ratio <= bound;
    payload["poincare"] = {{"best_ratio", po.best_ratio},
                           {"bound", bound},
                           {"sample_size", po.sample_size},
                           {"refinement_drift", po.refinement_drift},
                           {"pass", pass}};
    all_pass = all_pass && pass;

    const ConstantEstimate tr = trace_check(cfg.field, kvec, grid, 200, seed ^ 0x02u);
    const bool tpass = std::isfinite(tr.best_ratio) && tr.refinement_drift < 0.10;
    payload["trace"] = {{"best_ratio", tr.best_ratio},
                        {"sample_size", tr.sample_size},
                        {"refinement_drift", tr.refinement_drift},
                        {"pass", tpass}};
    all_pass = all_pass && tpass;
  } else {
    payload["poincare"] = {{"skipped", "B3 = 0"}};
    payload["trace"] = {{"skipped", "B3 = 0"}};
  }

  const ConstantEstimate ko = korn_check(kvec, grid, 200, seed ^ 0x03u);
  const bool kpass = std::isfinite(ko.best_ratio) && ko.refinement_drift < 0.10;
  payload["korn"] = {{"best_ratio", ko.best_ratio},
                     {"sample_size", ko.sample_size},
                     {"refinement_drift", ko.refinement_drift},
                     {"pass", kpass}};
  all_pass = all_pass && kpass;

  const std::vector<double> seq = {4.0, 32.0, 256.0, 1024.0};
  const TestFnTable table = testfn_limits(cfg.params, cfg.field, seq, seq, grid);
  const TestFnRow& last = table.rows.back();
  const double gap = std::abs(last.ratio - table.limit) / table.limit;
  bool monotone = true;
  const std::size_t nrows = table.rows.size();
  for (std::size_t i = (nrows >= 3 ? nrows - 3 : 0); i + 1 < nrows; ++i) {
    monotone = monotone && std::abs(table.rows[i + 1].ratio - table.limit) <=
                               std::abs(table.rows[i].ratio - table.limit);
  }
  const double mc = critical_field(cfg.params);
  const bool subcritical = std::abs(b3) < mc;
  bool tfpass = gap < 0.02 && monotone;
  if (subcritical) tfpass = tfpass && last.e0 < 0.0;
  json rows = json::array();
  for (const auto& row : table.rows) {
    rows.push_back({{"k", row.k}, {"n", row.n}, {"ratio", row.ratio}, {"e0", row.e0}});
  }
  payload["testfn"] = {{"rows", rows},
                       {"limit", table.limit},
                       {"truncation_error", table.truncation_error},
                       {"relative_gap", gap},
                       {"pass", tfpass}};
  all_pass = all_pass && tfpass;
  payload["pass"] = all_pass;
  return payload;
}

}  // namespace

ResultBundle run(Subcommand subcommand, const RunConfig& cfg, const RunOptions& options) {
  const TwoLayerGrid grid = build(cfg.n_upper, cfg.n_lower, cfg.params.ell, cfg.params.m);
  const int threads = resolve_threads(options.threads);
  const std::uint64_t seed = options.seed.value_or(cfg.ivp.seed);

  ResultBundle bundle;
  bundle.subcommand = subcommand;

  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  char hashbuf[24];
  std::snprintf(hashbuf, sizeof(hashbuf), "%016llx",
                static_cast<unsigned long long>(config_hash(cfg)));
  bundle.meta = {{"subcommand", to_string(subcommand)},
                 {"config_hash", hashbuf},
                 {"timestamp", stamp},
                 {"grid", {{"n_upper", cfg.n_upper}, {"n_lower", cfg.n_lower}}},
                 {"threads", threads},
                 {"seed", seed}};

  switch (subcommand) {
    case Subcommand::mc: {
      const double mc = critical_field(cfg.params);
      const RegimeLabel label = classify_regime(cfg.params, cfg.field, cfg.tolerances.classify);
      bundle.payload = {{"M_c", mc}, {"regime", to_string(label.regime)},
                        {"margin", label.margin}};
      break;
    }
    case Subcommand::dispersion: {
      const DispersionCurve curve = dispersion(cfg.params, cfg.field, build_k_grid(cfg), grid,
                                               threads, cfg.tolerances.fixed_point);
      bundle.payload = {{"rows", dispersion_rows(curve)},
                        {"lambda_max", curve.lambda_max},
                        {"k_argmax", {curve.k_argmax[0], curve.k_argmax[1]}}};
      break;
    }
    case Subcommand::critical_field: {
      Eigen::Vector3d dir = cfg.field.b;
      if (dir.norm() == 0.0) dir = Eigen::Vector3d(0.0, 0.0, 1.0);
      dir.normalize();
      if (dir[2] == 0.0) {
        throw std::invalid_argument(
            "critical-field: the field direction needs a vertical component");
      }
      const CriticalFieldEstimate est = critical_field_estimate(
          cfg.params, dir, cfg.kgrid.max, grid, 1e-6, cfg.kgrid.count, threads);
      bundle.payload = {{"estimate", est.value},
                        {"k_max", est.k_max},
                        {"k_count", est.k_count},
                        {"lambda_tol", est.lambda_tol},
                        {"M_c_formula", critical_field(cfg.params)}};
      break;
    }
    case Subcommand::stability_map: {
      if (!cfg.sweep) {
        throw std::invalid_argument("stability-map: config needs a sweep section");
      }
      std::vector<double> b3s;
      for (int i = 0; i < cfg.sweep->count; ++i) {
        const double t = static_cast<double>(i) / (cfg.sweep->count - 1);
        b3s.push_back(cfg.sweep->b3_min + t * (cfg.sweep->b3_max - cfg.sweep->b3_min));
      }
      const StabilityMap map =
          stability_map(cfg.params, cfg.field.horizontal(), b3s, build_k_grid(cfg), grid,
                        cfg.tolerances.classify, threads, cfg.tolerances.fixed_point);
      json rows = json::array();
      for (const auto& row : map.rows) {
        rows.push_back({{"b3", row.b3},
                        {"lambda_max", row.lambda_max},
                        {"k1_argmax", row.k_argmax[0]},
                        {"k2_argmax", row.k_argmax[1]},
                        {"regime", row.regime}});
      }
      bundle.payload = {{"rows", std::move(rows)}};
      break;
    }
    case Subcommand::ivp:
      bundle.payload = run_ivp(cfg, grid, seed);
      break;
    case Subcommand::verify:
      bundle.payload = run_verify(cfg, grid, seed);
      break;
  }
  return bundle;
}

namespace {

void emit_csv_rows(const json& rows, const std::vector<std::string>& columns, std::ostream& os) {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    os << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  }
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const json& cell = row.contains(columns[i]) ? row.at(columns[i]) : json();
      if (cell.is_number_float()) {
        os << fmt17(cell.get<double>());
      } else if (cell.is_number_integer()) {
        os << cell.get<long long>();
      } else if (cell.is_string()) {
        os << cell.get<std::string>();
      }
      os << (i + 1 < columns.size() ? "," : "\n");
    }
  }
}

void flatten(const json& j, const std::string& prefix, std::ostream& os) {
  if (j.is_object()) {
    for (const auto& item : j.items()) {
      flatten(item.value(), prefix.empty() ? item.key() : prefix + "." + item.key(), os);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      flatten(j[i], prefix + "[" + std::to_string(i) + "]", os);
    }
  } else if (j.is_number_float()) {
    os << prefix << "," << fmt17(j.get<double>()) << "\n";
  } else {
    os << prefix << "," << j.dump() << "\n";
  }
}

}  // namespace

void emit(const ResultBundle& bundle, const std::string& format, std::ostream& os) {
  if (format == "json") {
    json doc;
    doc["meta"] = bundle.meta;
    doc["payload"] = bundle.payload;
    os << doc.dump(2) << "\n";
    return;
  }
  if (format != "csv") {
    throw std::invalid_argument("emit: format must be \"csv\" or \"json\"");
  }
  switch (bundle.subcommand) {
    case Subcommand::dispersion:
      emit_csv_rows(bundle.payload.at("rows"),
                    {"k1", "k2", "status", "lambda", "s_star", "iterations"}, os);
      break;
    case Subcommand::stability_map:
      emit_csv_rows(bundle.payload.at("rows"),
                    {"b3", "lambda_max", "k1_argmax", "k2_argmax", "regime"}, os);
      break;
    case Subcommand::ivp:
      emit_csv_rows(bundle.payload.at("rows"),
                    {"t", "kinetic", "magnetic", "surface", "dissipation_integral", "u_norm"},
                    os);
      break;
    default:
      flatten(bundle.payload, "", os);
      break;
  }
}

void emit_to_file(const ResultBundle& bundle, const std::string& format, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("emit: cannot open " + path + " for writing");
  }
  emit(bundle, format, out);
  if (!out.good()) {
    throw std::runtime_error("emit: write to " + path + " failed");
  }
}

}  // namespace mhdrt
