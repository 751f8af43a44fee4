#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sns/experiments.hpp"
#include "sns/functionals.hpp"
#include "sns/grid.hpp"
#include "sns/scheme.hpp"

namespace sns {

inline constexpr const char* kToolVersion = "0.1.0";

/// 17 significant digits: round-trips double -> text -> double exactly.
std::string format_double(double value);

std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t file_digest(const std::string& path);
std::string hex64(std::uint64_t value);

/// Flat, ordered key=value view of a run configuration. All numeric
/// payload headers and manifests are derived from this one canonical form.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap config_map(const SchemeConfig& cfg);
std::string canonical_config_string(const ConfigMap& config);
std::uint64_t config_hash(const ConfigMap& config);

// GridFunction flat record: one "N,h" line, then N+2 "re,im" lines.
void write_grid_function_csv(std::ostream& out, const GridFunction& f);
GridFunction read_grid_function_csv(std::istream& in);

// Binary twin: u64 N, f64 h, then (N+2) little-endian (re, im) f64 pairs.
void write_grid_function_binary(std::ostream& out, const GridFunction& f);
GridFunction read_grid_function_binary(std::istream& in);

/// Diagnostics stream, one row per monitored step:
/// t,charge,energy_h,lyapunov_2,h1_seminorm,linf,gn_slack
void write_reports_csv(std::ostream& out,
                       std::span<const FunctionalReport> reports,
                       const ConfigMap& config);

/// Trajectory dump, long format: step,t,node,x,re,im. The comment header
/// carries the config hash, N, dt, lambda, K and seed.
class TrajectoryCsvWriter {
 public:
  TrajectoryCsvWriter(std::ostream& out, const ConfigMap& config);
  void snapshot(std::int64_t step, double t, const GridFunction& u);

 private:
  std::ostream& out_;
};

/// Binary trajectory: magic "SNSTRJ01", u64 config hash, u64 N, f64 dt,
/// i32 lambda, u32 K, u64 seed, then per snapshot u64 step, f64 t and the
/// (N+2) node pairs.
class TrajectoryBinaryWriter {
 public:
  TrajectoryBinaryWriter(std::ostream& out, const ConfigMap& config);
  void snapshot(std::int64_t step, double t, const GridFunction& u);

 private:
  std::ostream& out_;
};

/// Noise audit rows: step,k,xi.
void write_noise_audit_header(std::ostream& out, const ConfigMap& config);
void write_noise_audit_rows(std::ostream& out, std::int64_t step,
                            std::span<const double> draws);

void write_convergence_csv(std::ostream& out, const ConvergenceRecord& record,
                           const ConfigMap& config);
std::string convergence_json(const ConvergenceRecord& record,
                             const ConfigMap& config);
std::string convergence_summary(const ConvergenceRecord& record);

void write_residual_csv(std::ostream& out, const ResidualReport& report,
                        const ConfigMap& config);
std::string residual_json(const ResidualReport& report,
                          const ConfigMap& config);

void write_dependence_csv(std::ostream& out,
                          std::span<const double> deltas,
                          std::span<const DependencePoint> points,
                          const RateFit& fit, bool fit_valid,
                          const ConfigMap& config);
std::string dependence_json(std::span<const double> deltas,
                            std::span<const DependencePoint> points,
                            const RateFit& fit, bool fit_valid,
                            const ConfigMap& config);

void write_noise_scaling_csv(std::ostream& out,
                             const NoiseScalingResult& result,
                             const ConfigMap& config);
std::string noise_scaling_json(const NoiseScalingResult& result,
                               const ConfigMap& config);

/// Run metadata written next to the payload files. Wall-clock fields and
/// worker counts live here and only here, so payloads stay byte-identical
/// across reruns and schedules.
struct RunManifest {
  std::string command;
  ConfigMap config;
  int workers = 1;
  std::string started_at;
  std::string finished_at;
  std::vector<std::pair<std::string, std::string>> outputs;  // name, digest

  std::string to_json() const;
};

std::string iso8601_now();

}  // namespace sns
