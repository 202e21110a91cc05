// ecosched: trace-driven sweep runner. Writes one metrics CSV row per
// (urgency share, arrival factor, policy, DVS mode).

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecosched/catalog.hpp"
#include "ecosched/experiment.hpp"
#include "ecosched/meta_scheduler.hpp"
#include "ecosched/workload.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ecosched;

struct Options {
  std::optional<std::string> trace;
  std::optional<std::size_t> synthetic;
  std::optional<std::string> sites;
  std::vector<std::string> policies;
  std::vector<std::string> dvs;
  std::vector<double> hu_percents;
  std::vector<double> arrival_factors;
  std::optional<std::string> vary;
  double cycle_interval = 50.0;
  std::size_t max_jobs = 1000;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> plot_data;
  std::optional<std::string> dump_jobs;
  std::optional<std::string> dump_schedule;
  bool bounds = false;
  bool retry_rejected = false;
  unsigned threads = 1;
};

void add_options(CLI::App& app, Options& o) {
  auto* trace = app.add_option("--trace", o.trace, "SWF trace (plain or gzip)")
                    ->envname("ECOSCHED_TRACE");
  auto* synthetic =
      app.add_option("--synthetic", o.synthetic, "Generate an N-job synthetic trace instead")
          ->envname("ECOSCHED_SYNTHETIC")
          ->check(CLI::PositiveNumber);
  trace->excludes(synthetic);
  app.add_option("--sites", o.sites, "JSON site catalog (defaults to the built-in catalog)")
      ->envname("ECOSCHED_SITES");
  app.add_option("--policy", o.policies,
                 "gmce, gmp, mce-mce, mp-mp, mce-mp or edf-est (repeatable)")
      ->envname("ECOSCHED_POLICY")
      ->delimiter(',');
  app.add_option("--dvs", o.dvs, "our-dvs, prev-dvs or no-dvs (repeatable)")
      ->envname("ECOSCHED_DVS")
      ->delimiter(',');
  app.add_option("--hu-percent", o.hu_percents, "Comma-separated HU shares in percent")
      ->envname("ECOSCHED_HU_PERCENT")
      ->delimiter(',');
  app.add_option("--arrival-factor", o.arrival_factors, "Comma-separated arrival factors")
      ->envname("ECOSCHED_ARRIVAL_FACTOR")
      ->delimiter(',');
  app.add_option("--vary", o.vary, "{carbon|price|efficiency}:{low|mid|high}")
      ->envname("ECOSCHED_VARY");
  app.add_option("--cycle-interval", o.cycle_interval, "Scheduling cycle in seconds")
      ->envname("ECOSCHED_CYCLE_INTERVAL")
      ->capture_default_str();
  app.add_option("--max-jobs", o.max_jobs, "Use the first N trace records")
      ->envname("ECOSCHED_MAX_JOBS")
      ->capture_default_str();
  app.add_option("--seed", o.seed, "RNG seed")->envname("ECOSCHED_SEED")->required();
  app.add_option("--out", o.out, "Metrics CSV path (stdout when omitted)")
      ->envname("ECOSCHED_OUT");
  app.add_option("--plot-data", o.plot_data, "Directory for per-figure CSV tables")
      ->envname("ECOSCHED_PLOT_DATA");
  app.add_option("--dump-jobs", o.dump_jobs, "Directory for the synthesized job lists")
      ->envname("ECOSCHED_DUMP_JOBS");
  app.add_option("--dump-schedule", o.dump_schedule, "Directory for per-run reservation CSVs")
      ->envname("ECOSCHED_DUMP_SCHEDULE");
  app.add_flag("--bounds", o.bounds, "Fill the lb_avg_carbon and ub_avg_profit columns")
      ->envname("ECOSCHED_BOUNDS");
  app.add_flag("--retry-rejected", o.retry_rejected,
               "Keep rejected jobs queued while their deadline allows")
      ->envname("ECOSCHED_RETRY_REJECTED");
  app.add_option("--threads", o.threads, "Sweep points run in parallel")
      ->envname("ECOSCHED_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

experiment::ExperimentConfig make_config(const Options& o) {
  experiment::ExperimentConfig c;
  if (o.trace) {
    c.trace_path = *o.trace;
  } else if (o.synthetic) {
    workload::SyntheticTraceParams params;
    params.n_jobs = *o.synthetic;
    c.trace = workload::synthetic_trace(params, *o.seed);
  } else {
    throw InvalidArgument("one of --trace or --synthetic is required");
  }
  c.sites = o.sites ? load_sites_file(*o.sites) : builtin_catalog();
  if (!o.policies.empty()) {
    c.policies.clear();
    for (const auto& p : o.policies) c.policies.push_back(parse_mapping_policy(p));
  }
  if (!o.dvs.empty()) {
    c.dvs_modes.clear();
    for (const auto& d : o.dvs) c.dvs_modes.push_back(parse_dvs_mode(d));
  }
  if (!o.hu_percents.empty()) c.hu_percents = o.hu_percents;
  if (!o.arrival_factors.empty()) c.arrival_factors = o.arrival_factors;
  if (o.vary) c.variation = experiment::parse_variation(*o.vary);
  c.cycle_interval = o.cycle_interval;
  c.max_jobs = o.max_jobs;
  c.seed = o.seed;
  c.include_bounds = o.bounds;
  c.retry_rejected = o.retry_rejected;
  c.threads = o.threads;
  if (o.dump_schedule) c.schedule_dump_dir = fs::path(*o.dump_schedule);
  c.validate();
  return c;
}

void dump_jobs(const experiment::ExperimentConfig& c, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<std::pair<double, double>> points;
  if (c.variation) {
    points.emplace_back(experiment::kVariationHuPercent, experiment::kVariationArrivalFactor);
  } else {
    for (double hu : c.hu_percents) {
      for (double af : c.arrival_factors) points.emplace_back(hu, af);
    }
  }
  for (const auto& [hu, af] : points) {
    char name[96];
    std::snprintf(name, sizeof(name), "jobs_hu%g_af%g.csv", hu, af);
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    workload::write_jobs_csv(experiment::sweep_jobs(c, hu, af), out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy- and carbon-aware meta-scheduling experiments"};
  app.set_version_flag("--version", "ecosched 0.1.0");
  Options options;
  add_options(app, options);
  CLI11_PARSE(app, argc, argv);

  try {
    const experiment::ExperimentConfig config = make_config(options);
    if (options.dump_jobs) dump_jobs(config, *options.dump_jobs);

    const experiment::MetricsReport report = experiment::run(config);
    if (options.out) {
      experiment::emit_csv(report, *options.out);
    } else {
      experiment::write_csv(report, std::cout);
    }
    if (options.plot_data) {
      for (const auto& path : experiment::write_plot_data(report, *options.plot_data)) {
        std::cerr << "wrote " << path.string() << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "ecosched: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
