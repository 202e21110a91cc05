#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecosched/site_schedule.hpp"
#include "ecosched/types.hpp"

namespace ecosched {

enum class MappingPolicy { Gmce, Gmp, MceMce, MpMp, MceMp, EdfEst };

[[nodiscard]] std::string_view to_string(MappingPolicy policy);
[[nodiscard]] MappingPolicy parse_mapping_policy(std::string_view name);

/// Every mapping policy, in the order results are reported.
inline constexpr MappingPolicy kAllPolicies[] = {MappingPolicy::Gmce,   MappingPolicy::Gmp,
                                                 MappingPolicy::MceMce, MappingPolicy::MpMp,
                                                 MappingPolicy::MceMp,  MappingPolicy::EdfEst};
inline constexpr DvsMode kAllDvsModes[] = {DvsMode::OurDvs, DvsMode::PrevDvs,
                                           DvsMode::WithoutDvs};

struct PolicyId {
  MappingPolicy mapping = MappingPolicy::Gmce;
  DvsMode dvs = DvsMode::OurDvs;

  friend bool operator==(const PolicyId&, const PolicyId&) = default;
};

/// "gmce/our-dvs" style label.
[[nodiscard]] std::string to_string(const PolicyId& id);

struct Placement {
  Job job;
  std::size_t site_index = 0;
  Reservation reservation;
  EnergyOutcome outcome;
};

struct CycleOutcome {
  std::vector<Placement> placements;  // in commit order
  std::vector<Job> rejected;
};

/// Called when a job is rejected, with the site states it was judged against.
using RejectObserver = std::function<void(const Job&, std::span<const SiteSchedule>)>;

enum class FitnessKind { Carbon, Profit };

/// Carbon (kg) or profit ($) the site would yield for `job` under `mode`,
/// evaluated at the frequency a dry-run of the DVS procedure grants.
/// Empty when no ladder level meets the deadline.
[[nodiscard]] std::optional<double> placement_fitness(const Job& job, const SiteSchedule& sched,
                                                      DvsMode mode, FitnessKind kind);

/// Greedy mapping: jobs by (deadline, id), sites by ascending `site_key`
/// (ties by site index); each job goes to the first site that admits it.
CycleOutcome greedy_map(std::span<const Job> queue, std::span<SiteSchedule> sites,
                        const std::function<double(const CloudSite&)>& site_key, DvsMode mode,
                        const RejectObserver& on_reject = {});

/// Objective used in one phase of a two-phase mapping.
struct PhaseObjective {
  FitnessKind kind = FitnessKind::Carbon;
  bool maximize = false;
};

inline constexpr PhaseObjective kMinCarbon{FitnessKind::Carbon, false};
inline constexpr PhaseObjective kMaxProfit{FitnessKind::Profit, true};

/// Callbacks driving the generic two-phase (Min-Min style) selection loop.
struct TwoPhaseProblem {
  std::size_t n_jobs = 0;
  std::size_t n_sites = 0;
  /// Phase-one score of (job, site); empty when the pair is infeasible.
  std::function<std::optional<double>(std::size_t, std::size_t)> first;
  /// Phase-two score of a (job, site) pair found in phase one.
  std::function<double(std::size_t, std::size_t)> second;
  bool first_maximize = false;
  bool second_maximize = false;
  /// Commits the pair; false leaves the job in the pool for re-evaluation.
  std::function<bool(std::size_t, std::size_t)> commit;
  /// Called for each job dropped because no site is feasible.
  std::function<void(std::size_t)> reject;
  /// Ordering keys for tie-breaks (ascending). Defaults to the index.
  std::function<std::int64_t(std::size_t)> job_key;
};

/// Runs: (1) best site per unmapped job by `first`, dropping jobs with none;
/// (2) extremal pair by `second`, ties by (job key, site index); (3) commit;
/// (4) repeat. Scores of a site are recomputed only after a commit to it.
void solve_two_phase(const TwoPhaseProblem& problem);

CycleOutcome two_phase_map(std::span<const Job> queue, std::span<SiteSchedule> sites,
                           PhaseObjective first, PhaseObjective second, DvsMode mode,
                           const RejectObserver& on_reject = {});

/// Jobs by (deadline, id); per job, sites by earliest start of its f_max
/// duration (ties by site index); first admitting site wins.
CycleOutcome edf_est_map(std::span<const Job> queue, std::span<SiteSchedule> sites, DvsMode mode,
                         const RejectObserver& on_reject = {});

/// One scheduling cycle over the queued jobs under `policy`.
CycleOutcome schedule_cycle(std::span<const Job> queue, std::span<SiteSchedule> sites,
                            const PolicyId& policy, const RejectObserver& on_reject = {});

struct SimulationOptions {
  Seconds cycle_interval = 50.0;
  /// Keep rejected jobs queued for later cycles while their deadline allows.
  bool retry_rejected = false;
  RejectObserver on_reject;
};

struct SimulationReport {
  double total_carbon_kg = 0.0;
  Dollars total_profit = 0.0;
  Dollars total_energy_cost = 0.0;
  Joules total_energy_j = 0.0;
  double workload_cpu_seconds = 0.0;  // sum of n_j * e_j over accepted jobs
  std::size_t jobs_accepted = 0;
  std::size_t jobs_rejected = 0;
  std::vector<Placement> placements;

  /// Carbon per CPU-second of executed workload; empty when nothing ran.
  [[nodiscard]] std::optional<double> avg_carbon() const;
  [[nodiscard]] std::optional<double> avg_profit() const;
  [[nodiscard]] double acceptance_rate() const;
};

/// Cycle-driven simulation. `jobs` must be sorted by submit time. Sites must
/// carry a COP.
[[nodiscard]] SimulationReport simulate(std::span<const Job> jobs,
                                        std::span<const CloudSite> sites, const PolicyId& policy,
                                        const SimulationOptions& options = {});

/// Reservation dump: job_id,site,start,end,n_cpus,frequency
void write_reservations_csv(std::span<const Placement> placements, std::ostream& out);

}  // namespace ecosched
