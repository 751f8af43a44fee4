#include "sns/io.hpp"

#include <array>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sns {

std::string format_double(double value) {
  std::array<char, 40> buf{};
  const int written = std::snprintf(buf.data(), buf.size(), "%.17g", value);
  return std::string(buf.data(), static_cast<std::size_t>(written));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file_digest: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  return fnv1a64(bytes);
}

std::string hex64(std::uint64_t value) {
  std::array<char, 20> buf{};
  std::snprintf(buf.data(), buf.size(), "%016" PRIx64, value);
  return std::string(buf.data(), 16);
}

ConfigMap config_map(const SchemeConfig& cfg) {
  ConfigMap m;
  m["n"] = std::to_string(cfg.n_interior);
  m["dt"] = format_double(cfg.dt);
  m["t_final"] = format_double(cfg.t_final);
  m["lambda"] = std::to_string(cfg.lambda);
  m["modes"] = std::to_string(cfg.covariance.truncation());
  m["decay"] = format_double(cfg.covariance.decay_exponent());
  m["seed"] = std::to_string(cfg.seed);
  m["noise_scale"] = format_double(cfg.noise_scale);
  m["fp_tol"] = format_double(cfg.fp_tol);
  m["fp_max_iter"] = std::to_string(cfg.fp_max_iter);
  m["blowup_threshold"] = format_double(cfg.blowup_threshold);
  return m;
}

std::string canonical_config_string(const ConfigMap& config) {
  std::ostringstream out;
  for (const auto& [key, value] : config) out << key << '=' << value << '\n';
  return out.str();
}

std::uint64_t config_hash(const ConfigMap& config) {
  return fnv1a64(canonical_config_string(config));
}

namespace {

void write_meta_comments(std::ostream& out, const ConfigMap& config) {
  out << "# sns " << kToolVersion << "\n";
  out << "# config_hash=" << hex64(config_hash(config)) << "\n";
  out << "# config:";
  for (const auto& [key, value] : config) out << ' ' << key << '=' << value;
  out << "\n";
}

nlohmann::json meta_json(const ConfigMap& config) {
  nlohmann::json meta;
  meta["tool"] = "sns";
  meta["version"] = kToolVersion;
  meta["config_hash"] = hex64(config_hash(config));
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [key, value] : config) cfg[key] = value;
  meta["config"] = cfg;
  return meta;
}

nlohmann::json fit_json(const RateFit& fit) {
  nlohmann::json j;
  j["order"] = fit.slope;
  j["intercept"] = fit.intercept;
  j["n_points"] = fit.n_points;
  if (fit.has_ci) {
    j["ci_low"] = fit.ci_low;
    j["ci_high"] = fit.ci_high;
  }
  return j;
}

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("binary read failed");
  return value;
}

}  // namespace

void write_grid_function_csv(std::ostream& out, const GridFunction& f) {
  out << f.grid().n_interior() << ',' << format_double(f.grid().step())
      << '\n';
  for (const auto& v : f.values()) {
    out << format_double(v.real()) << ',' << format_double(v.imag()) << '\n';
  }
}

GridFunction read_grid_function_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_grid_function_csv: empty input");
  }
  const auto comma = line.find(',');
  const int n = std::stoi(line.substr(0, comma));
  GridFunction f(UniformGrid::create(n));
  for (int l = 0; l < f.n_nodes(); ++l) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("read_grid_function_csv: truncated input");
    }
    const auto c = line.find(',');
    if (c == std::string::npos) {
      throw std::runtime_error("read_grid_function_csv: malformed row");
    }
    f[l] = Complex{std::stod(line.substr(0, c)), std::stod(line.substr(c + 1))};
  }
  return f;
}

void write_grid_function_binary(std::ostream& out, const GridFunction& f) {
  write_raw(out, static_cast<std::uint64_t>(f.grid().n_interior()));
  write_raw(out, f.grid().step());
  for (const auto& v : f.values()) {
    write_raw(out, v.real());
    write_raw(out, v.imag());
  }
}

GridFunction read_grid_function_binary(std::istream& in) {
  const auto n = read_raw<std::uint64_t>(in);
  (void)read_raw<double>(in);  // h is implied by N
  GridFunction f(UniformGrid::create(static_cast<int>(n)));
  for (int l = 0; l < f.n_nodes(); ++l) {
    const double re = read_raw<double>(in);
    const double im = read_raw<double>(in);
    f[l] = Complex{re, im};
  }
  return f;
}

void write_reports_csv(std::ostream& out,
                       std::span<const FunctionalReport> reports,
                       const ConfigMap& config) {
  write_meta_comments(out, config);
  out << "t,charge,energy_h,lyapunov_2,h1_seminorm,linf,gn_slack\n";
  for (const auto& r : reports) {
    out << format_double(r.time) << ',' << format_double(r.charge) << ','
        << format_double(r.energy_h) << ',' << format_double(r.lyapunov_2)
        << ',' << format_double(r.h1_seminorm) << ',' << format_double(r.linf)
        << ',' << format_double(r.gn_slack) << '\n';
  }
}

TrajectoryCsvWriter::TrajectoryCsvWriter(std::ostream& out,
                                         const ConfigMap& config)
    : out_(out) {
  write_meta_comments(out_, config);
  out_ << "step,t,node,x,re,im\n";
}

void TrajectoryCsvWriter::snapshot(std::int64_t step, double t,
                                   const GridFunction& u) {
  for (int l = 0; l < u.n_nodes(); ++l) {
    out_ << step << ',' << format_double(t) << ',' << l << ','
         << format_double(u.grid().node(l)) << ','
         << format_double(u[l].real()) << ',' << format_double(u[l].imag())
         << '\n';
  }
}

namespace {

long config_long(const ConfigMap& config, const char* key) {
  const auto it = config.find(key);
  return it == config.end() ? 0 : std::stol(it->second);
}

double config_double(const ConfigMap& config, const char* key) {
  const auto it = config.find(key);
  return it == config.end() ? 0.0 : std::stod(it->second);
}

}  // namespace

TrajectoryBinaryWriter::TrajectoryBinaryWriter(std::ostream& out,
                                               const ConfigMap& config)
    : out_(out) {
  out_.write("SNSTRJ01", 8);
  write_raw(out_, config_hash(config));
  write_raw(out_, static_cast<std::uint64_t>(config_long(config, "n")));
  write_raw(out_, config_double(config, "dt"));
  write_raw(out_, static_cast<std::int32_t>(config_long(config, "lambda")));
  write_raw(out_, static_cast<std::uint32_t>(config_long(config, "modes")));
  write_raw(out_, static_cast<std::uint64_t>(config_long(config, "seed")));
}

void TrajectoryBinaryWriter::snapshot(std::int64_t step, double t,
                                      const GridFunction& u) {
  write_raw(out_, static_cast<std::uint64_t>(step));
  write_raw(out_, t);
  for (const auto& v : u.values()) {
    write_raw(out_, v.real());
    write_raw(out_, v.imag());
  }
}

void write_noise_audit_header(std::ostream& out, const ConfigMap& config) {
  write_meta_comments(out, config);
  out << "step,k,xi\n";
}

void write_noise_audit_rows(std::ostream& out, std::int64_t step,
                            std::span<const double> draws) {
  for (std::size_t k = 0; k < draws.size(); ++k) {
    out << step << ',' << (k + 1) << ',' << format_double(draws[k]) << '\n';
  }
}

void write_convergence_csv(std::ostream& out, const ConvergenceRecord& record,
                           const ConfigMap& config) {
  write_meta_comments(out, config);
  out << "h,error,stderr\n";
  for (std::size_t i = 0; i < record.h.size(); ++i) {
    out << format_double(record.h[i]) << ',' << format_double(record.error[i])
        << ',' << format_double(record.std_error[i]) << '\n';
  }
  if (record.fit_valid) {
    out << "# fitted_order=" << format_double(record.fit.slope);
    if (record.fit.has_ci) {
      out << " ci95=[" << format_double(record.fit.ci_low) << ','
          << format_double(record.fit.ci_high) << ']';
    }
    out << '\n';
  }
  out << "# samples=" << record.samples << " excluded=" << record.excluded
      << " exclusion_fraction=" << format_double(record.exclusion_fraction)
      << " valid=" << (record.valid ? 1 : 0) << '\n';
}

std::string convergence_json(const ConvergenceRecord& record,
                             const ConfigMap& config) {
  nlohmann::json j;
  j["meta"] = meta_json(config);
  j["coarse_n"] = record.coarse_n;
  j["fine_n"] = record.fine_n;
  j["h"] = record.h;
  j["error"] = record.error;
  j["std_error"] = record.std_error;
  if (record.fit_valid) j["fit"] = fit_json(record.fit);
  j["samples"] = record.samples;
  j["excluded"] = record.excluded;
  j["exclusion_fraction"] = record.exclusion_fraction;
  j["valid"] = record.valid;
  j["max_charge_rel_drift"] = record.max_charge_rel_drift;
  j["min_energy_slack"] = record.min_energy_slack;
  j["initial"] = record.initial_name;
  return j.dump(2) + "\n";
}

std::string convergence_summary(const ConvergenceRecord& record) {
  std::ostringstream out;
  out << "coupled strong-error study: " << record.samples << " samples, "
      << record.excluded << " excluded ("
      << format_double(100.0 * record.exclusion_fraction) << "%)"
      << (record.valid ? "" : "  ** exclusion fraction above 5%, record "
                              "flagged invalid **")
      << "\n";
  out << "reference grid N=" << record.fine_n << ", dt="
      << format_double(record.dt) << ", T=" << format_double(record.t_final)
      << ", lambda=" << record.lambda << ", K=" << record.truncation << "\n\n";
  out << "      h            error          stderr\n";
  for (std::size_t i = 0; i < record.h.size(); ++i) {
    out << "  " << format_double(record.h[i]) << "  "
        << format_double(record.error[i]) << "  "
        << format_double(record.std_error[i]) << "\n";
  }
  if (record.fit_valid) {
    out << "\nfitted order: " << format_double(record.fit.slope);
    if (record.fit.has_ci) {
      out << "   (95% bootstrap CI [" << format_double(record.fit.ci_low)
          << ", " << format_double(record.fit.ci_high) << "])";
    }
    out << "\n";
  }
  out << "max relative charge drift: "
      << format_double(record.max_charge_rel_drift) << "\n";
  out << "min energy sandwich slack: "
      << format_double(record.min_energy_slack) << "\n";
  return out.str();
}

void write_residual_csv(std::ostream& out, const ResidualReport& report,
                        const ConfigMap& config) {
  write_meta_comments(out, config);
  out << "n,h,linf\n";
  for (std::size_t i = 0; i < report.h.size(); ++i) {
    out << report.n_interior[i] << ',' << format_double(report.h[i]) << ','
        << format_double(report.linf[i]) << '\n';
  }
  if (report.fit_valid) {
    out << "# fitted_order=" << format_double(report.fit.slope) << '\n';
  }
}

std::string residual_json(const ResidualReport& report,
                          const ConfigMap& config) {
  nlohmann::json j;
  j["meta"] = meta_json(config);
  j["profile"] = report.profile;
  j["n"] = report.n_interior;
  j["h"] = report.h;
  j["linf"] = report.linf;
  if (report.fit_valid) j["fit"] = fit_json(report.fit);
  return j.dump(2) + "\n";
}

void write_dependence_csv(std::ostream& out, std::span<const double> deltas,
                          std::span<const DependencePoint> points,
                          const RateFit& fit, bool fit_valid,
                          const ConfigMap& config) {
  write_meta_comments(out, config);
  out << "delta,input_distance,error,stderr,excluded\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << format_double(deltas[i]) << ','
        << format_double(points[i].input_distance) << ','
        << format_double(points[i].output_error) << ','
        << format_double(points[i].std_error) << ',' << points[i].excluded
        << '\n';
  }
  if (fit_valid) {
    out << "# fitted_slope=" << format_double(fit.slope) << '\n';
  }
}

std::string dependence_json(std::span<const double> deltas,
                            std::span<const DependencePoint> points,
                            const RateFit& fit, bool fit_valid,
                            const ConfigMap& config) {
  nlohmann::json j;
  j["meta"] = meta_json(config);
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    nlohmann::json row;
    row["delta"] = deltas[i];
    row["input_distance"] = points[i].input_distance;
    row["error"] = points[i].output_error;
    row["std_error"] = points[i].std_error;
    row["samples"] = points[i].samples;
    row["excluded"] = points[i].excluded;
    rows.push_back(row);
  }
  j["points"] = rows;
  if (fit_valid) j["fit"] = fit_json(fit);
  return j.dump(2) + "\n";
}

void write_noise_scaling_csv(std::ostream& out,
                             const NoiseScalingResult& result,
                             const ConfigMap& config) {
  write_meta_comments(out, config);
  out << "eps,error,stderr\n";
  for (std::size_t i = 0; i < result.eps.size(); ++i) {
    out << format_double(result.eps[i]) << ','
        << format_double(result.error[i]) << ','
        << format_double(result.std_error[i]) << '\n';
  }
  if (result.fit_valid) {
    out << "# fitted_slope=" << format_double(result.fit.slope);
    if (result.fit.has_ci) {
      out << " ci95=[" << format_double(result.fit.ci_low) << ','
          << format_double(result.fit.ci_high) << ']';
    }
    out << '\n';
  }
  out << "# samples=" << result.samples << " excluded=" << result.excluded
      << '\n';
}

std::string noise_scaling_json(const NoiseScalingResult& result,
                               const ConfigMap& config) {
  nlohmann::json j;
  j["meta"] = meta_json(config);
  j["eps"] = result.eps;
  j["error"] = result.error;
  j["std_error"] = result.std_error;
  if (result.fit_valid) j["fit"] = fit_json(result.fit);
  j["samples"] = result.samples;
  j["excluded"] = result.excluded;
  return j.dump(2) + "\n";
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "sns";
  j["version"] = kToolVersion;
  j["command"] = command;
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [key, value] : config) cfg[key] = value;
  j["config"] = cfg;
  j["config_hash"] = hex64(config_hash(config));
  j["workers"] = workers;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  auto files = nlohmann::json::array();
  for (const auto& [name, digest] : outputs) {
    nlohmann::json f;
    f["file"] = name;
    f["fnv1a64"] = digest;
    files.push_back(f);
  }
  j["outputs"] = files;
  return j.dump(2) + "\n";
}

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf.data());
}

}  // namespace sns
