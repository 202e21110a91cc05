#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>

#include "ecosched/types.hpp"

namespace ecosched::bounds {

/// Moldable-job capacity of one site from a common start time.
///
/// Jobs are pure CPU-second areas whose height may be reshaped up to the
/// machine width. A set of jobs fits iff, for every deadline D in the set,
/// the work due by D is at most cpu_count * (D - origin); this is the
/// earliest-deadline-first, zero-fragmentation packing.
class FluidCapacity {
 public:
  FluidCapacity(int total_cpus, Seconds origin);

  [[nodiscard]] int total_cpus() const { return total_cpus_; }
  [[nodiscard]] Seconds origin() const { return origin_; }

  /// CPU-seconds committed to jobs with deadline <= t.
  [[nodiscard]] double committed_before(Seconds t) const;

  /// Whether `work` CPU-seconds due at `deadline` still fit.
  [[nodiscard]] bool fits(double work, Seconds deadline) const;

  /// Accepts and debits the job when it fits.
  bool fluid_fit(const Job& job);

 private:
  int total_cpus_;
  Seconds origin_;
  std::map<Seconds, double> work_by_deadline_;
};

struct BoundsResult {
  double twl = 0.0;         // CPU-seconds
  double tce = 0.0;         // kg
  Dollars tp = 0.0;
  std::size_t scheduled_jobs = 0;
  std::size_t dropped_jobs = 0;

  [[nodiscard]] std::optional<double> avg_carbon() const;
  [[nodiscard]] std::optional<double> avg_profit() const;
};

/// How the profit increment of an accepted job is accounted.
enum class ProfitFormula {
  /// n_j * T_opt * p_i - energy cost at the optimal frequency.
  PricedRevenue,
  /// n_j * T_opt * (1 - c_i * P_opt * (1 + COP) / COP), energy in kWh,
  /// i.e. a unit execution price.
  Literal,
};

/// Lower bound on average carbon: EDF jobs, sites by carbon efficiency.
[[nodiscard]] BoundsResult lower_bound_carbon(std::span<const Job> jobs,
                                              std::span<const CloudSite> sites);

/// Upper bound on average profit: EDF jobs, sites by energy-cost efficiency.
[[nodiscard]] BoundsResult upper_bound_profit(std::span<const Job> jobs,
                                              std::span<const CloudSite> sites,
                                              ProfitFormula formula = ProfitFormula::PricedRevenue);

}  // namespace ecosched::bounds
