#pragma once

#include <array>
#include <cstddef>

#include "ecosched/types.hpp"

// Closed-form power, time, energy and money model of a site, plus the
// energy-optimal operating frequency used by DVS scheduling.
namespace ecosched::energy {

/// CPU power draw at frequency `f`: beta + alpha * f^3 watts.
[[nodiscard]] double cpu_power(const CloudSite& site, GHz f);

/// Execution time at frequency `f` of a job that takes `base_runtime` at f_max.
[[nodiscard]] Seconds exec_time(Seconds base_runtime, double gamma, GHz f, GHz f_max);

/// CPU energy of `job` on `site` at `f`, summed over all of its CPUs.
[[nodiscard]] Joules cpu_energy(const CloudSite& site, const Job& job, GHz f);

/// CPU energy plus the cooling energy implied by the site's COP.
[[nodiscard]] Joules total_energy(const CloudSite& site, Joules cpu_energy);

[[nodiscard]] Dollars energy_cost(const CloudSite& site, Joules total_energy);

/// kg of CO2 emitted for `total_energy` drawn at the site.
[[nodiscard]] double carbon_emission(const CloudSite& site, Joules total_energy);

/// Revenue at the site's execution price minus the energy cost. May be negative.
[[nodiscard]] Dollars profit(const CloudSite& site, const Job& job, Dollars energy_cost);

[[nodiscard]] EnergyOutcome evaluate_placement(const CloudSite& site, const Job& job, GHz f);

/// Per-CPU energy per unit of base runtime as a function of frequency:
/// (beta + alpha f^3) * (gamma (f_max / f - 1) + 1). Exposed for oracles.
[[nodiscard]] double unit_energy(const CloudSite& site, double gamma, GHz f);

/// Unclamped energy-optimal frequency for a job of CPU-boundness `gamma`.
///
/// gamma == 1 uses the closed form cbrt(beta / (2 alpha)); gamma == 0 returns
/// f_min since energy then grows with f. Otherwise the minimum of unit_energy
/// is located by bisection on the sign of its derivative, which has exactly one
/// positive root when beta > 0. Throws if no minimum can be bracketed.
[[nodiscard]] GHz optimal_frequency(const CloudSite& site, double gamma);

[[nodiscard]] GHz clamp_frequency(const CloudSite& site, GHz f);

struct FrequencyLadder {
  static constexpr std::size_t kLevels = 5;
  std::array<GHz, kLevels> levels{};

  [[nodiscard]] GHz lowest() const { return levels.front(); }
  [[nodiscard]] GHz highest() const { return levels.back(); }
};

/// Five evenly spaced levels from f_min to f_max inclusive.
[[nodiscard]] FrequencyLadder frequency_ladder(const CloudSite& site);

struct LadderLevel {
  std::size_t index = 0;
  GHz frequency = 0.0;
};

/// Closest ladder level to `f`; an exact tie picks the higher level.
[[nodiscard]] LadderLevel nearest_level(const FrequencyLadder& ladder, GHz f);

/// Site ordering scalars. Smaller is more efficient.
[[nodiscard]] double carbon_efficiency_key(const CloudSite& site);
[[nodiscard]] double cost_efficiency_key(const CloudSite& site);

}  // namespace ecosched::energy
