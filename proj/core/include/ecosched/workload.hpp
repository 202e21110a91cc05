#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecosched/types.hpp"

namespace ecosched::workload {

using Rng = std::mt19937_64;

/// Deterministic family of independent generators.
///
/// Generator `for_index(i)` is seeded from (seed, stream, i) through
/// std::seed_seq, so per-record draws do not depend on processing order.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  [[nodiscard]] Rng for_index(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

/// Stream ids used when building a job list from a trace.
inline constexpr std::uint64_t kUrgencyStream = 1;
inline constexpr std::uint64_t kDeadlineStream = 2;

struct TraceRecord {
  std::int64_t job_id = 0;
  Seconds submit_time = 0.0;
  Seconds runtime = 0.0;
  int n_procs = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Thrown on a malformed SWF line; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads Standard Workload Format records.
///
/// Keeps fields 1 (job id), 2 (submit), 4 (run time) and 5 (allocated
/// processors). Records with non-positive runtime or processor count are
/// dropped. Lines starting with ';' and blank lines are skipped.
[[nodiscard]] std::vector<TraceRecord> parse_swf(std::istream& in);

/// Loads a plain or gzip-compressed SWF file.
[[nodiscard]] std::vector<TraceRecord> load_swf_file(const std::filesystem::path& path);

/// Writes records as 18-field SWF lines; unused fields are -1.
void write_swf(std::span<const TraceRecord> records, std::ostream& out);

/// Divides every submit time by `factor`.
[[nodiscard]] std::vector<TraceRecord> scale_arrivals(std::span<const TraceRecord> records,
                                                      double factor);

struct UrgentRecord {
  TraceRecord record;
  Urgency urgency = Urgency::Low;
};

/// Each record is HU with probability hu_percent / 100, drawn from
/// `rng.for_index(position)`.
[[nodiscard]] std::vector<UrgentRecord> assign_urgency(std::span<const TraceRecord> records,
                                                       double hu_percent, const RngStream& rng);

/// Deadline/runtime factor distributions. Values are variances, not standard
/// deviations.
struct DeadlineParams {
  double hu_mean = 4.0;
  double hu_variance = 2.0;
  double ratio_high_low = 3.0;
  double lu_mean = 12.0;
  double lu_variance = 6.0;

  void validate() const;
};

/// Draws a deadline factor for the class from a normal distribution,
/// redrawing until the value is at least 1.
[[nodiscard]] double draw_deadline_factor(Urgency urgency, const DeadlineParams& params, Rng& rng);

/// Job with deadline = submit + factor * runtime and gamma = 1.
[[nodiscard]] Job make_job(const TraceRecord& record, Urgency urgency, double factor);

[[nodiscard]] Job synthesize_deadline(const TraceRecord& record, Urgency urgency,
                                      const DeadlineParams& params, Rng& rng);

/// Full pipeline: urgency from stream kUrgencyStream, deadline from
/// kDeadlineStream, both indexed by record position.
[[nodiscard]] std::vector<Job> build_jobs(std::span<const TraceRecord> records, double hu_percent,
                                          const DeadlineParams& params, std::uint64_t seed);

/// Debug dump: job_id,submit,n_cpus,runtime,deadline,urgency
void write_jobs_csv(std::span<const Job> jobs, std::ostream& out);

/// Parameters of the built-in synthetic trace generator, loosely shaped after
/// a busy capability cluster (power-of-two widths, log-normal runtimes).
struct SyntheticTraceParams {
  std::size_t n_jobs = 500;
  Seconds mean_interarrival = 120.0;
  double runtime_log_mean = 7.6;  // exp(7.6) ~ 33 min median
  double runtime_log_sd = 1.1;
  Seconds min_runtime = 60.0;
  Seconds max_runtime = 12.0 * 3600.0;
  int max_procs_log2 = 7;  // widths 1 .. 128
};

[[nodiscard]] std::vector<TraceRecord> synthetic_trace(const SyntheticTraceParams& params,
                                                       std::uint64_t seed);

}  // namespace ecosched::workload
