#include "nlh/io.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace nlh {

namespace fs = std::filesystem;

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

namespace {

double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw CliError(fmt::format("{}: '{}' is not a number", what, text), 2);
  return v;
}

struct ParamField {
  const char* key;
  double ModelParams::*member;
};

constexpr ParamField kParamFields[] = {
    {"gamma", &ModelParams::gamma}, {"lambda1", &ModelParams::lambda1}, {"lambda2", &ModelParams::lambda2},
    {"y0", &ModelParams::y0},       {"q_a", &ModelParams::q_a},         {"q_r", &ModelParams::q_r},
    {"q_al", &ModelParams::q_al},   {"s_a", &ModelParams::s_a},         {"s_r", &ModelParams::s_r},
    {"s_al", &ModelParams::s_al},   {"m_a", &ModelParams::m_a},         {"m_r", &ModelParams::m_r},
    {"m_al", &ModelParams::m_al},   {"A", &ModelParams::A},             {"L", &ModelParams::L},
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void apply_assignments(const std::vector<std::pair<std::string, double>>& kv, ModelParams& p) {
  bool touched_width[3] = {false, false, false};
  bool touched_range[3] = {false, false, false};
  for (const auto& [k, v] : kv) {
    apply_param(k, v, p);
    if (k == "m_a") touched_width[0] = true;
    if (k == "m_r") touched_width[1] = true;
    if (k == "m_al") touched_width[2] = true;
    if (k == "s_a") touched_range[0] = true;
    if (k == "s_r") touched_range[1] = true;
    if (k == "s_al") touched_range[2] = true;
  }
  if (touched_range[0] && !touched_width[0]) p.m_a = p.s_a / 8.0;
  if (touched_range[1] && !touched_width[1]) p.m_r = p.s_r / 8.0;
  if (touched_range[2] && !touched_width[2]) p.m_al = p.s_al / 8.0;
}

std::pair<std::string, double> split_assignment(const std::string& text, const std::string& where) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError(fmt::format("{}: expected key=value, got '{}'", where, text));
  const std::string key = trim(text.substr(0, eq));
  const std::string val = trim(text.substr(eq + 1));
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
  if (ec != std::errc() || ptr != val.data() + val.size() || val.empty())
    throw ConfigError(fmt::format("{}: bad value for {}: '{}'", where, key, val));
  return {key, v};
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

InitialConditionSpec parse_ic(const std::string& text) {
  InitialConditionSpec ic;
  if (text == "sin02") {
    ic.kind = InitialKind::Sin02;
  } else if (text == "sin04") {
    ic.kind = InitialKind::Sin04;
  } else if (text == "rand") {
    ic.kind = InitialKind::UniformRandom;
  } else if (text.rfind("file:", 0) == 0 && text.size() > 5) {
    ic.kind = InitialKind::Custom;
    ic.profile_path = text.substr(5);
    ic.profile = load_profile_file(ic.profile_path);
  } else {
    throw CliError(fmt::format("--ic: expected sin02, sin04, rand or file:PATH, got '{}'", text), 2);
  }
  return ic;
}

std::vector<SweepPoint> parse_sweep_steps(const std::string& text) {
  std::vector<SweepPoint> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.empty() || parts.size() > 2)
      throw CliError(fmt::format("--sweep-steps: expected dx[:dt] items, got '{}'", item), 2);
    SweepPoint p;
    p.dx = parse_double(parts[0], "--sweep-steps");
    p.dt = parts.size() == 2 ? parse_double(parts[1], "--sweep-steps") : 2.0 * p.dx;
    out.push_back(p);
  }
  return out;
}

std::vector<double> parse_amplitudes(const std::string& text) {
  if (text == "default") return default_amplitude_set();
  const auto parts = split(text, ':');
  if (parts.size() == 3)
    return amplitude_range(parse_double(parts[0], "--sweep-amplitudes"), parse_double(parts[1], "--sweep-amplitudes"),
                           parse_double(parts[2], "--sweep-amplitudes"));
  std::vector<double> out;
  for (const auto& a : split(text, ',')) out.push_back(parse_double(a, "--sweep-amplitudes"));
  if (out.empty()) throw CliError("--sweep-amplitudes: empty list", 2);
  return out;
}

}  // namespace

void apply_param(const std::string& key, double value, ModelParams& params) {
  for (const auto& f : kParamFields)
    if (key == f.key) {
      params.*(f.member) = value;
      return;
    }
  std::string names;
  for (const auto& f : kParamFields) names += std::string(names.empty() ? "" : ", ") + f.key;
  throw ConfigError(fmt::format("unknown parameter '{}' (expected one of: {})", key, names));
}

void apply_params_file(const std::string& path, ModelParams& params) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open parameter file", path));
  std::vector<std::pair<std::string, double>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    kv.push_back(split_assignment(line, fmt::format("{}:{}", path, lineno)));
  }
  apply_assignments(kv, params);
}

CliRequest parse_cli(const std::vector<std::string>& args) {
  CliRequest req;
  RunConfig& c = req.config;
  auto& th = c.thresholds;

  CLI::App app{"Nonlocal hyperbolic aggregation model solver"};
  app.name("nlh");

  std::string scheme(scheme_name(c.scheme));
  std::string ic = "sin02";
  std::optional<double> courant;
  std::string params_file;
  std::vector<std::string> sets;
  std::string sweep_amplitudes;
  std::string sweep_steps;
  std::string sweep_points;
  std::vector<double> snapshot_times;

  app.add_option("--scheme", scheme, fmt::format("Numerical scheme: {}", scheme_name_list()))->capture_default_str();
  app.add_option("--dx", c.dx, "Space step")->capture_default_str();
  auto* dt_opt = app.add_option("--dt", c.dt, "Time step")->capture_default_str();
  app.add_option("--courant", courant, "Set dt from the Courant number gamma*dt/dx")->excludes(dt_opt);
  app.add_option("--amplitude", c.ic.amplitude, "Initial perturbation amplitude")->capture_default_str();
  app.add_option("--ic", ic, "Initial condition: sin02 | sin04 | rand | file:PATH")->capture_default_str();
  app.add_option("--T", c.T, "Final time")->capture_default_str();
  app.add_option("--seed", c.ic.seed, "Seed for the rand initial condition")->capture_default_str();
  app.add_option("--out-dir", req.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", c.threads, "Threads for the nonlocal quadrature")->capture_default_str();
  app.add_option("--checkpoint-every", c.checkpoint_interval, "Steps between checkpoints (0 = off)")
      ->capture_default_str();
  app.add_option("--resume", req.resume_from, "Resume from a checkpoint file");
  app.add_option("--max-steps", req.max_steps, "Interrupt after this many steps and checkpoint");
  app.add_option("--snapshot-times", snapshot_times, "Extra profile snapshot times")->delimiter(',');
  app.add_option("--params", params_file, "key=value parameter file");
  app.add_option("--set", sets, "Override one model parameter, key=value");
  app.add_option("--sweep-amplitudes", sweep_amplitudes, "Amplitude sweep: a:b:step, a,b,c or 'default'");
  app.add_option("--sweep-steps", sweep_steps, "Step sweep: dx[:dt],... (dt defaults to 2*dx)");
  app.add_option("--sweep-points", sweep_points, "Explicit sweep: amplitude:dx:dt,...")
      ->excludes("--sweep-amplitudes")
      ->excludes("--sweep-steps");
  app.add_option("--workers", req.workers, "Concurrent runs in a sweep")->capture_default_str();
  app.add_option("--log-every", req.log_every, "Log t and E(t) every N samples")->capture_default_str();

  app.add_option("--tol-transient", th.transient_threshold, "Transient threshold on E")->capture_default_str();
  app.add_option("--tol-steady", th.steady_threshold, "Steady-state threshold on E")->capture_default_str();
  app.add_option("--tol-stop-factor", th.stop_factor, "Stop at factor * t0")->capture_default_str();
  app.add_option("--tol-window", th.minimum_window, "Local minimum window (odd)")->capture_default_str();
  app.add_option("--tol-tail-fraction", th.tail_fraction, "Tail fraction for non-convergence")
      ->capture_default_str();
  app.add_option("--tol-band-ratio", th.band_ratio, "Max/min ratio of a non-convergent band")
      ->capture_default_str();
  app.add_option("--tol-tail-decay", th.max_tail_decay, "Largest tail decay (decades) of a band")
      ->capture_default_str();
  app.add_option("--tol-symmetry", th.symmetry_tol, "Reflection residual tolerance")->capture_default_str();
  app.add_option("--tol-peak-margin", th.peak_margin, "Peak margin as a fraction of max - min")
      ->capture_default_str();
  app.add_option("--tol-aggregation-gap", th.aggregation_gap, "Min gap between aggregations (fraction of cells)")
      ->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw CliError(app.help(), 0);
  } catch (const CLI::ParseError& e) {
    throw CliError(e.what(), 2);
  }

  try {
    const auto id = parse_scheme(scheme);
    if (!id) throw CliError(fmt::format("unknown scheme '{}'; valid schemes: {}", scheme, scheme_name_list()), 2);
    c.scheme = *id;

    const double amplitude = c.ic.amplitude;
    const std::uint64_t seed = c.ic.seed;
    c.ic = parse_ic(ic);
    c.ic.amplitude = amplitude;
    c.ic.seed = seed;

    if (!params_file.empty()) apply_params_file(params_file, c.params);
    std::vector<std::pair<std::string, double>> kv;
    for (const auto& s : sets) kv.push_back(split_assignment(s, "--set"));
    apply_assignments(kv, c.params);

    if (courant) {
      // dt rounded to 15 digits so e.g. 0.2 at dx = 2^-7 gives exactly 2^-6.
      const double raw = *courant * c.dx / c.params.gamma;
      c.dt = parse_double(fmt::format("{:.15g}", raw), "--courant");
    }
    c.snapshot_times = snapshot_times;

    std::vector<double> amps;
    if (!sweep_amplitudes.empty()) amps = parse_amplitudes(sweep_amplitudes);
    std::vector<SweepPoint> steps;
    if (!sweep_steps.empty()) steps = parse_sweep_steps(sweep_steps);
    if (!sweep_points.empty()) {
      for (const auto& item : split(sweep_points, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 3) throw CliError(fmt::format("--sweep-points: expected a:dx:dt, got '{}'", item), 2);
        req.sweep_points.push_back({parse_double(parts[0], "--sweep-points"), parse_double(parts[1], "--sweep-points"),
                                    parse_double(parts[2], "--sweep-points")});
      }
    } else if (!amps.empty() || !steps.empty()) {
      if (amps.empty()) amps.push_back(c.ic.amplitude);
      if (steps.empty()) steps.push_back({0.0, c.dx, c.dt});
      for (const auto& s : steps)
        for (double a : amps) req.sweep_points.push_back({a, s.dx, s.dt});
    }
    if (req.workers < 1) throw CliError("--workers must be >= 1", 2);
    if (req.log_every < 0) throw CliError("--log-every must be >= 0", 2);

    c.validate();
    for (const auto& p : req.sweep_points) {
      RunConfig probe = c;
      probe.ic.amplitude = p.amplitude;
      probe.dx = p.dx;
      probe.dt = p.dt;
      probe.snapshot_times.clear();
      probe.validate();
    }
  } catch (const ConfigError& e) {
    throw CliError(e.what(), 2);
  }
  return req;
}

std::vector<std::string> render_cli_args(const CliRequest& r) {
  const RunConfig& c = r.config;
  const auto& th = c.thresholds;
  std::vector<std::string> a;
  auto opt = [&a](const char* flag, std::string value) {
    a.emplace_back(flag);
    a.push_back(std::move(value));
  };
  opt("--scheme", std::string(scheme_name(c.scheme)));
  opt("--dx", format_double(c.dx));
  opt("--dt", format_double(c.dt));
  opt("--T", format_double(c.T));
  opt("--amplitude", format_double(c.ic.amplitude));
  opt("--ic", c.ic.kind == InitialKind::Custom ? "file:" + c.ic.profile_path : std::string(to_string(c.ic.kind)));
  opt("--seed", std::to_string(c.ic.seed));
  opt("--out-dir", r.out_dir);
  opt("--threads", std::to_string(c.threads));
  opt("--checkpoint-every", std::to_string(c.checkpoint_interval));
  if (!r.resume_from.empty()) opt("--resume", r.resume_from);
  if (r.max_steps >= 0) opt("--max-steps", std::to_string(r.max_steps));
  if (!c.snapshot_times.empty()) {
    std::string s;
    for (double t : c.snapshot_times) s += (s.empty() ? "" : ",") + format_double(t);
    opt("--snapshot-times", s);
  }
  for (const auto& f : kParamFields) opt("--set", fmt::format("{}={}", f.key, format_double(c.params.*(f.member))));
  if (r.is_sweep()) {
    std::string pts;
    for (const auto& p : r.sweep_points)
      pts += fmt::format("{}{}:{}:{}", pts.empty() ? "" : ",", format_double(p.amplitude), format_double(p.dx),
                         format_double(p.dt));
    opt("--sweep-points", pts);
  }
  opt("--workers", std::to_string(r.workers));
  opt("--log-every", std::to_string(r.log_every));
  opt("--tol-transient", format_double(th.transient_threshold));
  opt("--tol-steady", format_double(th.steady_threshold));
  opt("--tol-stop-factor", format_double(th.stop_factor));
  opt("--tol-window", std::to_string(th.minimum_window));
  opt("--tol-tail-fraction", format_double(th.tail_fraction));
  opt("--tol-band-ratio", format_double(th.band_ratio));
  opt("--tol-tail-decay", format_double(th.max_tail_decay));
  opt("--tol-symmetry", format_double(th.symmetry_tol));
  opt("--tol-peak-margin", format_double(th.peak_margin));
  opt("--tol-aggregation-gap", format_double(th.aggregation_gap));
  return a;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::error_code ec;
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent, ec);
  if (ec) throw IoError(fmt::format("{}: cannot create directory: {}", parent.string(), ec.message()));
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(fmt::format("{}: cannot open for writing", path));
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError(fmt::format("{}: write failed", path));
}

}  // namespace

void write_error_series(const std::string& path, const std::string& hash, const ErrorSeries& series) {
  auto out = open_out(path);
  out << "# config_hash: " << hash << "\n";
  out << "t,E\n";
  for (const auto& s : series.samples) out << s.t << ',' << format_double(s.e) << '\n';
  finish(out, path);
}

void write_profiles(const std::string& path, const std::string& hash, const std::vector<Snapshot>& snapshots,
                    const GridSpec& grid) {
  auto out = open_out(path);
  out << "# config_hash: " << hash << "\n";
  out << "t,step,x,u_plus,u_minus,u\n";
  for (const auto& snap : snapshots) {
    const auto& s = snap.state;
    const double t = static_cast<double>(s.time_index) * grid.dt;
    for (std::size_t i = 0; i < s.size(); ++i)
      out << format_double(t) << ',' << s.time_index << ',' << format_double(grid.cell_center(i)) << ','
          << format_double(s.u_plus[i]) << ',' << format_double(s.u_minus[i]) << ','
          << format_double(s.u_plus[i] + s.u_minus[i]) << '\n';
  }
  finish(out, path);
}

std::string verdict_json(const RunConfig& c, const RunRecord& r) {
  using nlohmann::json;
  const GridSpec grid = c.grid();
  json j;
  j["schema"] = "nlh-verdict/1";
  j["config_hash"] = r.config_hash;
  j["config"] = {
      {"scheme", scheme_name(c.scheme)},
      {"dx", c.dx},
      {"dt", c.dt},
      {"T", c.T},
      {"nx", grid.nx},
      {"courant", grid.courant(c.params.gamma)},
      {"initial_condition",
       {{"kind", to_string(c.ic.kind)},
        {"amplitude", c.ic.amplitude},
        {"seed", c.ic.seed},
        {"profile_path", c.ic.profile_path}}},
      {"params",
       {{"gamma", c.params.gamma},
        {"lambda1", c.params.lambda1},
        {"lambda2", c.params.lambda2},
        {"y0", c.params.y0},
        {"q_a", c.params.q_a},
        {"q_r", c.params.q_r},
        {"q_al", c.params.q_al},
        {"s_a", c.params.s_a},
        {"s_r", c.params.s_r},
        {"s_al", c.params.s_al},
        {"m_a", c.params.m_a},
        {"m_r", c.params.m_r},
        {"m_al", c.params.m_al},
        {"A", c.params.A},
        {"L", c.params.L}}},
  };
  j["verdict"] = {
      {"stop_reason", to_string(r.verdict.stop_reason)},
      {"solution_kind", to_string(r.verdict.solution_kind)},
      {"symmetry", to_string(r.verdict.symmetry)},
      {"label", symmetry_label(r.symmetry)},
      {"peak_count", r.verdict.peak_count},
      {"aggregation_count", r.verdict.aggregation_count},
      {"aggregation_peaks", r.symmetry.aggregation_peaks},
      {"symmetry_residual", r.symmetry.residual},
      {"symmetry_axis", r.symmetry.axis},
  };
  json minima = json::array();
  for (const auto& v : r.minima.verdicts) minima.push_back({{"t", v.t}, {"E", v.e}, {"kind", to_string(v.kind)}});
  j["minima"] = minima;
  j["t0"] = r.series.t0 ? json(*r.series.t0) : json(nullptr);
  j["steady_from"] = r.minima.steady_from ? json(*r.minima.steady_from) : json(nullptr);
  j["band"] = {{"flagged", r.band.flagged},
               {"min", r.band.band_min},
               {"max", r.band.band_max},
               {"tail_trend", r.band.tail_trend}};
  j["health"] = {
      {"first_negative_step",
       r.health.first_negative_step ? json(*r.health.first_negative_step) : json(nullptr)},
      {"min_density", r.health.min_density},
      {"non_finite", r.health.non_finite},
      {"abort_message", r.health.abort_message},
  };
  j["run"] = {
      {"steps", r.steps},
      {"final_time", r.final_time(c.dt)},
      {"samples", r.series.samples.size()},
      {"completed", r.completed},
      {"wall_seconds", r.wall_seconds},
      {"initial_mass", r.initial_mass},
      {"final_mass", r.final_mass},
      {"kernel_mass_defect", {{"repulsion", r.kernel_defects[0]},
                              {"attraction", r.kernel_defects[1]},
                              {"alignment", r.kernel_defects[2]}}},
  };
  return j.dump(2) + "\n";
}

void write_verdict(const std::string& path, const RunConfig& config, const RunRecord& record) {
  auto out = open_out(path);
  out << verdict_json(config, record);
  finish(out, path);
}

void write_sweep_table(const std::string& path, const std::string& hash, const std::vector<SweepRow>& rows) {
  auto out = open_out(path);
  out << "# config_hash: " << hash << "\n";
  out << "index,amplitude,dx,dt,run_hash,ok,stop_reason,solution_kind,symmetry,label,peaks,aggregations,l1,"
         "stop_time,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '\n', ' ');
    std::replace(err.begin(), err.end(), ',', ';');
    out << r.index << ',' << format_double(r.point.amplitude) << ',' << format_double(r.point.dx) << ','
        << format_double(r.point.dt) << ',' << r.config_hash << ',' << (r.ok ? 1 : 0) << ','
        << (r.ok ? to_string(r.verdict.stop_reason) : "") << ','
        << (r.ok ? to_string(r.verdict.solution_kind) : "") << ','
        << (r.ok ? to_string(r.verdict.symmetry) : "") << ',' << r.label << ',' << r.verdict.peak_count << ','
        << r.verdict.aggregation_count << ',' << format_double(r.l1) << ',' << format_double(r.stop_time) << ','
        << err << '\n';
  }
  finish(out, path);
}

std::string emit_run(const std::string& out_dir, const RunConfig& config, const RunRecord& record) {
  const fs::path dir = fs::path(out_dir) / record.config_hash;
  write_error_series((dir / kErrorSeriesFile).string(), record.config_hash, record.series);
  write_profiles((dir / kProfileFile).string(), record.config_hash, record.snapshots, config.grid());
  write_verdict((dir / kVerdictFile).string(), config, record);
  return dir.string();
}

}  // namespace nlh
