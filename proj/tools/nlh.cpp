// nlh: run or sweep the nonlocal hyperbolic aggregation model.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fmt/format.h>
#include <string>
#include <vector>

#include "nlh/checkpoint.hpp"
#include "nlh/io.hpp"

namespace {

int run_single(const nlh::CliRequest& req) {
  const auto& cfg = req.config;
  nlh::RunOptions opts;
  if (cfg.checkpoint_interval > 0 || req.max_steps >= 0) opts.checkpoint_dir = req.out_dir;
  opts.resume_from = req.resume_from;
  opts.max_steps = req.max_steps;
  if (req.log_every > 0)
    opts.on_sample = [every = req.log_every](std::int64_t t, double e) {
      if (t % every == 0) fmt::print("t={} E={:.6e}\n", t, e);
      std::fflush(stdout);
    };

  const std::string hash = nlh::config_hash(cfg);
  fmt::print("config {} scheme={} dx={} dt={} T={} amplitude={} ic={}\n", hash, nlh::scheme_name(cfg.scheme),
             cfg.dx, cfg.dt, cfg.T, cfg.ic.amplitude, nlh::to_string(cfg.ic.kind));
  const nlh::RunRecord rec = nlh::run_simulation(cfg, opts);
  const std::string dir = nlh::emit_run(req.out_dir, cfg, rec);

  if (!rec.completed) {
    fmt::print("interrupted at step {}; resume with --resume {}\n", rec.steps,
               nlh::checkpoint_path((std::filesystem::path(req.out_dir) / hash).string(), rec.steps));
  }
  fmt::print("stop={} solution={} symmetry={} peaks={} aggregations={} t_final={} wall={:.1f}s\n",
             nlh::to_string(rec.verdict.stop_reason), nlh::to_string(rec.verdict.solution_kind),
             nlh::symmetry_label(rec.symmetry), rec.verdict.peak_count, rec.verdict.aggregation_count,
             rec.final_time(cfg.dt), rec.wall_seconds);
  fmt::print("outputs in {}\n", dir);
  if (rec.health.non_finite) {
    fmt::print(stderr, "run aborted: {}\n", rec.health.abort_message);
    return 3;
  }
  return 0;
}

int run_sweep(const nlh::CliRequest& req) {
  const std::string hash = nlh::config_hash(req.config);
  const auto path = std::filesystem::path(req.out_dir) / ("sweep-" + hash) / nlh::kSweepFile;
  fmt::print("sweep of {} runs, {} workers, base config {}\n", req.sweep_points.size(), req.workers, hash);
  const auto rows = nlh::sweep(req.config, req.sweep_points, req.workers, [](const nlh::SweepRow& r) {
    if (r.ok)
      fmt::print("[{}] A={} dx={} dt={} -> {} {}\n", r.index, r.point.amplitude, r.point.dx, r.point.dt,
                 nlh::to_string(r.verdict.solution_kind), r.label);
    else
      fmt::print("[{}] A={} dx={} dt={} -> error: {}\n", r.index, r.point.amplitude, r.point.dx, r.point.dt,
                 r.error);
    std::fflush(stdout);
  });
  nlh::write_sweep_table(path.string(), hash, rows);
  fmt::print("sweep table {}\n", path.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const nlh::CliRequest req = nlh::parse_cli(args);
    return req.is_sweep() ? run_sweep(req) : run_single(req);
  } catch (const nlh::CliError& e) {
    if (e.exit_code() == 0) {
      fmt::print("{}", e.what());
      return 0;
    }
    fmt::print(stderr, "error: {}\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}
