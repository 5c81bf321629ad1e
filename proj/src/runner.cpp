#include "nlh/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "nlh/checkpoint.hpp"

namespace nlh {

std::string_view to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::Sin02: return "sin02";
    case InitialKind::Sin04: return "sin04";
    case InitialKind::UniformRandom: return "rand";
    case InitialKind::Custom: return "file";
  }
  return "?";
}

PortableRng::PortableRng(std::uint64_t seed) : engine_(seed) {}

double PortableRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::string PortableRng::serialize() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

PortableRng PortableRng::deserialize(const std::string& text) {
  PortableRng rng;
  std::istringstream is(text);
  is >> rng.engine_;
  if (!is) throw ConfigError("PortableRng: malformed state text");
  return rng;
}

namespace {

// RNG state right after the initial condition has been drawn.
std::string initial_rng_state(const InitialConditionSpec& ic, std::size_t nx) {
  PortableRng rng(ic.seed);
  if (ic.kind == InitialKind::UniformRandom)
    for (std::size_t i = 0; i < nx; ++i) rng.uniform();
  return rng.serialize();
}

}  // namespace

PopulationState make_initial_state(const InitialConditionSpec& ic, const GridSpec& grid) {
  if (!(ic.amplitude >= 0.0) || !std::isfinite(ic.amplitude))
    throw ConfigError(fmt::format("initial amplitude must be finite and >= 0, got {}", ic.amplitude));
  const std::size_t nx = grid.nx;
  Field u(nx);
  switch (ic.kind) {
    case InitialKind::Sin02:
    case InitialKind::Sin04: {
      const double k = ic.kind == InitialKind::Sin02 ? 0.2 : 0.4;
      for (std::size_t i = 0; i < nx; ++i)
        u[i] = 2.0 + ic.amplitude * (0.5 + 0.5 * std::sin(k * std::numbers::pi * grid.cell_center(i)));
      break;
    }
    case InitialKind::UniformRandom: {
      PortableRng rng(ic.seed);
      for (std::size_t i = 0; i < nx; ++i) u[i] = 2.0 + ic.amplitude * rng.uniform();
      break;
    }
    case InitialKind::Custom:
      if (ic.profile.size() != nx)
        throw ConfigError(fmt::format("custom profile{} has {} values, grid has {} cells",
                                      ic.profile_path.empty() ? "" : " " + ic.profile_path,
                                      ic.profile.size(), nx));
      u = ic.profile;
      break;
  }
  PopulationState s;
  s.u_plus.resize(nx);
  s.u_minus.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    s.u_plus[i] = 0.5 * u[i];
    s.u_minus[i] = 0.5 * u[i];
  }
  return s;
}

Field load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("{}: cannot open profile file", path));
  Field out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || !std::isfinite(v))
        throw ConfigError(fmt::format("{}:{}: bad value '{}'", path, lineno, tok));
      out.push_back(v);
    }
  }
  if (out.empty()) throw ConfigError(fmt::format("{}: profile file has no values", path));
  return out;
}

GridSpec RunConfig::grid() const { return GridSpec::make(params, dx, dt, T); }

void RunConfig::validate() const {
  params.validate();
  thresholds.validate();
  const GridSpec g = grid();
  if (dt > 1.0)
    throw ConfigError(fmt::format("dt = {} exceeds 1; E(t) is sampled at every integer time", dt));
  if (!(ic.amplitude >= 0.0) || !std::isfinite(ic.amplitude))
    throw ConfigError(fmt::format("initial amplitude must be finite and >= 0, got {}", ic.amplitude));
  if (ic.kind == InitialKind::Custom && ic.profile.size() != g.nx)
    throw ConfigError(fmt::format("custom profile has {} values, grid has {} cells", ic.profile.size(), g.nx));
  if (checkpoint_interval < 0) throw ConfigError("checkpoint interval must be >= 0");
  if (threads < 1) throw ConfigError("thread count must be >= 1");
  for (double t : snapshot_times)
    if (!(t >= 0.0 && t <= T)) throw ConfigError(fmt::format("snapshot time {} outside [0, T]", t));
}

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string canonical_config_text(const RunConfig& c) {
  std::string s;
  auto put = [&s](std::string_view key, double v) { s += fmt::format("{}={:.17g}\n", key, v); };
  const auto& p = c.params;
  put("gamma", p.gamma);
  put("lambda1", p.lambda1);
  put("lambda2", p.lambda2);
  put("y0", p.y0);
  put("q_a", p.q_a);
  put("q_r", p.q_r);
  put("q_al", p.q_al);
  put("s_a", p.s_a);
  put("s_r", p.s_r);
  put("s_al", p.s_al);
  put("m_a", p.m_a);
  put("m_r", p.m_r);
  put("m_al", p.m_al);
  put("A", p.A);
  put("L", p.L);
  put("dx", c.dx);
  put("dt", c.dt);
  put("T", c.T);
  s += fmt::format("scheme={}\n", scheme_name(c.scheme));
  s += fmt::format("ic={}\n", to_string(c.ic.kind));
  put("amplitude", c.ic.amplitude);
  s += fmt::format("seed={}\n", c.ic.seed);
  if (c.ic.kind == InitialKind::Custom) {
    std::string bytes;
    for (double v : c.ic.profile) bytes += fmt::format("{:.17g},", v);
    s += fmt::format("profile={:016x}\n", fnv1a(bytes));
  }
  const auto& t = c.thresholds;
  put("transient_threshold", t.transient_threshold);
  put("steady_threshold", t.steady_threshold);
  put("stop_factor", t.stop_factor);
  s += fmt::format("minimum_window={}\n", t.minimum_window);
  put("tail_fraction", t.tail_fraction);
  put("band_ratio", t.band_ratio);
  put("max_tail_decay", t.max_tail_decay);
  put("symmetry_tol", t.symmetry_tol);
  put("peak_margin", t.peak_margin);
  put("aggregation_gap", t.aggregation_gap);
  return s;
}

std::string config_hash(const RunConfig& config) {
  return fmt::format("{:016x}", fnv1a(canonical_config_text(config)));
}

std::int64_t step_for_time(double t, double dt) { return snapped_floor_div(t, dt); }

namespace {

void track_health(const PopulationState& s, HealthFlags& h) {
  double lo = h.min_density;
  for (std::size_t i = 0; i < s.size(); ++i) lo = std::min({lo, s.u_plus[i], s.u_minus[i]});
  h.min_density = lo;
  if (!h.first_negative_step && lo < -1e-12) h.first_negative_step = s.time_index;
}

struct SnapshotPlan {
  std::vector<std::pair<std::int64_t, double>> steps;  // (step, requested time)

  SnapshotPlan(const RunConfig& c) {
    std::vector<double> times = {0.0, 0.5 * c.T};
    times.insert(times.end(), c.snapshot_times.begin(), c.snapshot_times.end());
    for (double t : times) {
      const std::int64_t k = step_for_time(t, c.dt);
      if (std::none_of(steps.begin(), steps.end(), [k](const auto& e) { return e.first == k; }))
        steps.emplace_back(k, t);
    }
    std::sort(steps.begin(), steps.end());
  }

  void capture(const PopulationState& s, std::vector<Snapshot>& out) const {
    for (const auto& [k, t] : steps)
      if (k == s.time_index &&
          std::none_of(out.begin(), out.end(), [&](const Snapshot& x) { return x.state.time_index == k; }))
        out.push_back({t, s});
  }
};

}  // namespace

RunRecord run_simulation(const RunConfig& config, const RunOptions& options) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();
  const GridSpec grid = config.grid();
  const KernelTable kernels = build_kernel_table(config.params, grid);
  const auto& th = config.thresholds;

  RunRecord rec;
  rec.config_hash = config_hash(config);
  rec.kernel_defects[0] = kernels.repulsion.mass_defect;
  rec.kernel_defects[1] = kernels.attraction.mass_defect;
  rec.kernel_defects[2] = kernels.alignment.mass_defect;

  PopulationState state;
  std::string rng_state;
  if (!options.resume_from.empty()) {
    Checkpoint ck = read_checkpoint(options.resume_from);
    if (ck.config_hash != rec.config_hash)
      throw CheckpointError(fmt::format("{}: checkpoint belongs to config {}, not {}", options.resume_from,
                                        ck.config_hash, rec.config_hash));
    if (ck.state.size() != grid.nx)
      throw CheckpointError(fmt::format("{}: checkpoint has {} cells, grid has {}", options.resume_from,
                                        ck.state.size(), grid.nx));
    state = std::move(ck.state);
    rec.series = std::move(ck.series);
    rec.snapshots = std::move(ck.snapshots);
    rec.health = ck.health;
    rec.initial_mass = ck.initial_mass;
    rng_state = std::move(ck.rng_state);
  } else {
    state = make_initial_state(config.ic, grid);
    rng_state = initial_rng_state(config.ic, grid.nx);
    rec.initial_mass = total_mass(state, grid.dx);
    rec.health.min_density = std::numeric_limits<double>::infinity();
    track_health(state, rec.health);
  }

  const SnapshotPlan plan(config);
  plan.capture(state, rec.snapshots);

  const std::string ckpt_dir =
      options.checkpoint_dir.empty()
          ? std::string()
          : (std::filesystem::path(options.checkpoint_dir) / rec.config_hash).string();
  auto save = [&] {
    if (ckpt_dir.empty()) return;
    Checkpoint ck{rec.config_hash, state, rec.series, rec.snapshots, rec.health, rec.initial_mass, rng_state};
    write_checkpoint(ckpt_dir, ck);
  };

  StopDecision decision = StopDecision::Continue;
  if (!rec.series.empty()) decision = check_stop(rec.series, config.T, th);
  std::int64_t steps_here = 0;
  std::int64_t next_sample = rec.series.empty() ? 1 : rec.series.last_time() + 1;
  std::int64_t next_sample_step = step_for_time(static_cast<double>(next_sample), config.dt);

  while (decision == StopDecision::Continue && state.time_index < grid.nt) {
    if (options.max_steps >= 0 && steps_here >= options.max_steps) {
      rec.completed = false;
      break;
    }
    PopulationState next;
    try {
      next = step(config.scheme, state, config.params, grid, kernels, config.threads);
    } catch (const NonFiniteError& e) {
      rec.health.non_finite = true;
      rec.health.abort_message = e.what();
      break;
    }
    ++steps_here;
    track_health(next, rec.health);

    if (next.time_index == next_sample_step) {
      const Field now = next.total_density();
      const Field prev = state.total_density();
      const double e = step_error(now, prev, grid);
      rec.series.append(next_sample, e, th.steady_threshold);
      if (options.on_sample) options.on_sample(next_sample, e);
      ++next_sample;
      next_sample_step = step_for_time(static_cast<double>(next_sample), config.dt);
      decision = check_stop(rec.series, config.T, th);
    }
    state = std::move(next);
    plan.capture(state, rec.snapshots);
    if (config.checkpoint_interval > 0 && state.time_index % config.checkpoint_interval == 0) save();
  }
  if (!rec.completed) save();

  rec.verdict.stop_reason =
      decision == StopDecision::SteadyStateStop ? StopReason::SteadyStateStop : StopReason::FinalTimeReached;
  rec.minima = classify_minimum(rec.series, th);
  rec.series.local_minima = rec.minima.local_minima;
  rec.band = detect_nonconvergence(rec.series, th);
  rec.verdict.solution_kind = summarize_solution(rec.minima, rec.band, rec.verdict.stop_reason);
  if (!rec.completed || rec.health.non_finite) rec.verdict.solution_kind = SolutionKind::Undetermined;

  const Field u = state.total_density();
  rec.symmetry = classify_symmetry(u, th);
  rec.verdict.symmetry = rec.symmetry.symmetry;
  rec.verdict.peak_count = rec.symmetry.peak_count;
  rec.verdict.aggregation_count = rec.symmetry.aggregation_count;

  if (rec.snapshots.empty() || rec.snapshots.back().state.time_index != state.time_index)
    rec.snapshots.push_back({static_cast<double>(state.time_index) * config.dt, state});
  std::sort(rec.snapshots.begin(), rec.snapshots.end(),
            [](const Snapshot& a, const Snapshot& b) { return a.state.time_index < b.state.time_index; });

  rec.final_mass = total_mass(state, grid.dx);
  rec.steps = state.time_index;
  rec.final_state = std::move(state);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return rec;
}

std::vector<double> amplitude_range(double first, double last, double step) {
  if (!(step > 0.0) || !std::isfinite(first) || !std::isfinite(last) || last < first)
    throw ConfigError(fmt::format("bad amplitude range {}:{}:{}", first, last, step));
  const auto n = static_cast<std::int64_t>(std::floor((last - first) / step + 1e-9));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (std::int64_t i = 0; i <= n; ++i) {
    const double v = first + static_cast<double>(i) * step;
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

std::vector<double> default_amplitude_set() {
  std::vector<double> out = {0.001};
  for (int n = 1; n <= 360; ++n) out.push_back(n / 10.0);
  return out;
}

std::vector<SweepRow> sweep(const RunConfig& base, std::span<const SweepPoint> points, int workers,
                            const std::function<void(const SweepRow&)>& on_row) {
  if (points.empty()) throw ConfigError("sweep needs at least one configuration");
  std::vector<SweepRow> rows(points.size());
  std::vector<char> done(points.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t emitted = 0;

  auto run_one = [&](std::size_t i) {
    SweepRow row;
    row.index = i;
    row.point = points[i];
    RunConfig cfg = base;
    cfg.ic.amplitude = points[i].amplitude;
    cfg.dx = points[i].dx;
    cfg.dt = points[i].dt;
    try {
      row.config_hash = config_hash(cfg);
      const RunRecord rec = run_simulation(cfg);
      row.ok = !rec.health.non_finite;
      row.error = rec.health.abort_message;
      row.verdict = rec.verdict;
      row.label = symmetry_label(rec.symmetry);
      row.l1 = l1_norm(rec.final_state.total_density(), cfg.grid());
      row.stop_time = rec.final_time(cfg.dt);
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    std::lock_guard lock(mu);
    rows[i] = std::move(row);
    done[i] = 1;
    while (emitted < rows.size() && done[emitted]) {
      if (on_row) on_row(rows[emitted]);
      ++emitted;
    }
  };

  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) run_one(i);
  };
  const int n = std::clamp(workers, 1, static_cast<int>(points.size()));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace nlh
