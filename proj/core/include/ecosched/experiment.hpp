#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecosched/meta_scheduler.hpp"
#include "ecosched/types.hpp"
#include "ecosched/workload.hpp"

namespace ecosched::experiment {

/// Stream ids for experiment-level draws (workload streams use 1 and 2).
inline constexpr std::uint64_t kCopStream = 3;
inline constexpr std::uint64_t kVariationStream = 4;

inline constexpr double kCopLow = 0.6;
inline constexpr double kCopHigh = 3.5;

/// One-factor variation of the site catalog.
struct Variation {
  enum class Factor { CarbonRate, EnergyPrice, Efficiency };
  enum class Spread { Low, Mid, High };

  Factor factor = Factor::CarbonRate;
  Spread spread = Spread::Low;

  [[nodiscard]] double mean() const;
  [[nodiscard]] double stddev() const;
  /// "carbon:low", "price:mid", "efficiency:high".
  [[nodiscard]] std::string label() const;

  friend bool operator==(const Variation&, const Variation&) = default;
};

/// Parses "carbon|price|efficiency:low|mid|high".
[[nodiscard]] Variation parse_variation(std::string_view text);

/// Efficiency COP / (COP + 1) inverted back to a COP.
[[nodiscard]] double cop_from_efficiency(double efficiency);

/// Arrival factor and HU share at which variation experiments run.
inline constexpr double kVariationArrivalFactor = 100.0;
inline constexpr double kVariationHuPercent = 40.0;

struct ExperimentConfig {
  std::optional<std::filesystem::path> trace_path;
  /// Used instead of reading `trace_path` when non-empty.
  std::vector<workload::TraceRecord> trace;
  std::size_t max_jobs = 1000;

  std::vector<double> hu_percents{0, 20, 40, 60, 80, 100};
  std::vector<double> arrival_factors{10, 100, 1000, 10000};
  std::vector<MappingPolicy> policies{MappingPolicy::Gmce, MappingPolicy::Gmp,
                                      MappingPolicy::MceMce, MappingPolicy::MpMp,
                                      MappingPolicy::MceMp};
  std::vector<DvsMode> dvs_modes{DvsMode::OurDvs};
  Seconds cycle_interval = 50.0;
  std::optional<std::uint64_t> seed;

  /// Sites without a COP get one drawn from Uniform[0.6, 3.5] per seed.
  std::vector<CloudSite> sites;
  std::optional<Variation> variation;
  bool include_bounds = false;
  bool retry_rejected = false;
  workload::DeadlineParams deadline_params;
  unsigned threads = 1;
  /// When set, every run writes its reservations to a CSV in this directory.
  std::optional<std::filesystem::path> schedule_dump_dir;

  /// Throws InvalidArgument describing the first problem found.
  void validate() const;
};

struct MetricsRow {
  std::string policy;
  std::string dvs_mode;
  double hu_percent = 0.0;
  double arrival_factor = 0.0;
  double total_carbon_kg = 0.0;
  std::optional<double> avg_carbon_per_workload;
  double total_profit = 0.0;
  double total_energy_cost = 0.0;
  double total_energy_kwh = 0.0;
  double workload_cpu_seconds = 0.0;
  std::uint64_t jobs_accepted = 0;
  std::uint64_t jobs_rejected = 0;
  std::optional<double> lb_avg_carbon;
  std::optional<double> ub_avg_profit;
  std::uint64_t seed = 0;
  std::string scenario;    // "base" or the variation label
  std::string jobs_hash;   // FNV-1a of the job list the run consumed
  std::string sites_hash;  // FNV-1a of the sites (with COP) the run consumed

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

/// CSV column names in output order.
[[nodiscard]] std::span<const std::string_view> csv_columns();

/// Sites with COP filled in from Uniform[0.6, 3.5] where absent.
[[nodiscard]] std::vector<CloudSite> sample_cops(std::span<const CloudSite> sites,
                                                 std::uint64_t seed);

/// Sites with one factor resampled from its normal distribution, truncated
/// by redraw (positive values; efficiency inside (0, 1)).
[[nodiscard]] std::vector<CloudSite> vary_sites(std::span<const CloudSite> sites,
                                                const Variation& variation, std::uint64_t seed);

[[nodiscard]] std::string hash_jobs(std::span<const Job> jobs);
[[nodiscard]] std::string hash_sites(std::span<const CloudSite> sites);

/// Job list of one sweep point: the trace (truncated to max_jobs) with
/// arrivals scaled and deadlines synthesized from the config seed.
[[nodiscard]] std::vector<Job> sweep_jobs(const ExperimentConfig& config, double hu_percent,
                                          double arrival_factor);

/// Executes the full sweep: hu_percent (outer) x arrival factor x policy x
/// DVS mode (inner). Every policy at a sweep point sees the same jobs and
/// sites. Delegates to variation_experiment when `config.variation` is set.
[[nodiscard]] MetricsReport run(const ExperimentConfig& config);

/// Runs the configured policies on a catalog with one varied factor at
/// arrival factor 100 and 40% HU jobs.
[[nodiscard]] MetricsReport variation_experiment(const ExperimentConfig& config,
                                                 const Variation& variation);

/// Six significant digits, deterministic row order.
void write_csv(const MetricsReport& report, std::ostream& out);
void emit_csv(const MetricsReport& report, const std::filesystem::path& path);
[[nodiscard]] MetricsReport parse_csv(std::istream& in);

/// Per-figure tables: an x column and one series per policy/DVS label.
/// Returns the paths written.
std::vector<std::filesystem::path> write_plot_data(const MetricsReport& report,
                                                   const std::filesystem::path& dir);

}  // namespace ecosched::experiment
