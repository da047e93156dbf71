#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "mhdrt/model.hpp"

namespace mhdrt {

struct KGridSpec {
  std::string mode = "log";  // "log" | "linear"
  double min = 0.1;
  double max = 200.0;
  int count = 40;
  bool perp_to_bstar = true;           // direction = "perp-to-Bstar"
  Eigen::Vector2d direction{0.0, 1.0}; // used when perp_to_bstar is false
};

struct SweepSpec {
  double b3_min = 0.1;
  double b3_max = 1.0;
  int count = 10;
};

struct IvpSpec {
  double T = 0.0;   // 0: choose 3/lambda for growing-mode runs
  double dt = 0.0;  // 0: choose 1e-3/lambda
  std::uint64_t seed = 0x6d686472u;
  Eigen::Vector2d k{0.0, 10.0};
  std::string init = "growing";  // "growing" | "random"
};

struct Tolerances {
  double eig = 1e-12;
  double fixed_point = 1e-10;
  double classify = 1e-9;
};

struct RunConfig {
  FluidParams params;
  MagneticField field;
  int n_upper = 48;
  int n_lower = 48;
  KGridSpec kgrid;
  std::optional<SweepSpec> sweep;
  IvpSpec ivp;
  Tolerances tolerances;
};

/// Parses and validates a JSON configuration; violations are reported with
/// their field paths. The density-jump assumption is enforced here.
RunConfig parse_config(const std::string& text);

nlohmann::json config_to_json(const RunConfig& config);
std::uint64_t config_hash(const RunConfig& config);

enum class Subcommand { mc, dispersion, critical_field, stability_map, ivp, verify };

Subcommand subcommand_from_string(const std::string& name);
const char* to_string(Subcommand sc);

struct RunOptions {
  int threads = 0;                        // 0: MHDRT_THREADS, then hardware
  std::optional<std::uint64_t> seed;      // overrides the config seed
};

struct ResultBundle {
  Subcommand subcommand = Subcommand::mc;
  nlohmann::json meta;     // config hash, timestamps, grid sizes
  nlohmann::json payload;  // deterministic for a fixed config and seed
};

ResultBundle run(Subcommand subcommand, const RunConfig& config, const RunOptions& options = {});

/// CSV schemas: dispersion `k1,k2,status,lambda,s_star,iterations`;
/// stability-map `b3,lambda_max,k1_argmax,k2_argmax,regime`; ivp
/// `t,kinetic,magnetic,surface,dissipation_integral,u_norm`. Scalar payloads
/// flatten to key,value rows. JSON mirrors carry full metadata.
void emit(const ResultBundle& bundle, const std::string& format, std::ostream& os);
void emit_to_file(const ResultBundle& bundle, const std::string& format, const std::string& path);

}  // namespace mhdrt
