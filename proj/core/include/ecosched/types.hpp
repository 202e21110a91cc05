#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ecosched {

/// Seconds on the simulation clock.
using Seconds = double;
/// CPU frequency in GHz.
using GHz = double;
using Joules = double;
using Dollars = double;

inline constexpr double kJoulesPerKWh = 3.6e6;

/// Fraction of f_max used as the lowest operating frequency of catalog sites.
inline constexpr double kMinFrequencyRatio = 0.375;

/// Execution price of 40 cents per CPU-hour, expressed per CPU-second.
inline constexpr Dollars kDefaultExecPrice = 0.40 / 3600.0;

/// Raised when a value violates a domain invariant.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One data center. Holds the per-site parameters the meta-scheduler consumes.
///
/// `cop` stays empty until the caller samples one; every energy routine that
/// needs cooling efficiency rejects a site without it.
struct CloudSite {
  std::string id;
  double carbon_rate = 0.0;   // kg CO2 / kWh
  double energy_price = 0.0;  // $ / kWh
  std::optional<double> cop;  // coefficient of performance
  double beta = 0.0;          // static power, W
  double alpha = 0.0;         // W / GHz^3
  GHz f_max = 0.0;
  GHz f_min = 0.0;
  Dollars exec_price = kDefaultExecPrice;  // $ / CPU-second
  int cpu_count = 0;

  /// COP value; throws InvalidArgument if it has not been set.
  [[nodiscard]] double cop_value() const;

  [[nodiscard]] CloudSite with_cop(double value) const;

  friend bool operator==(const CloudSite&, const CloudSite&) = default;
};

/// Throws InvalidArgument naming the first violated field invariant.
void validate(const CloudSite& site);

enum class Urgency : std::uint8_t { High, Low };

[[nodiscard]] std::string_view to_string(Urgency urgency);

struct Job {
  std::int64_t id = 0;
  Seconds submit_time = 0.0;
  int n_cpus = 1;
  Seconds base_runtime = 0.0;  // runtime at f_max
  Seconds deadline = 0.0;      // absolute
  double gamma = 1.0;          // CPU-boundness in [0, 1]
  Urgency urgency = Urgency::Low;

  friend bool operator==(const Job&, const Job&) = default;
};

void validate(const Job& job);

struct TimeSlot {
  Seconds start = 0.0;
  Seconds end = 0.0;
  int free_cpus = 0;

  friend bool operator==(const TimeSlot&, const TimeSlot&) = default;
};

struct Reservation {
  std::int64_t job_id = 0;
  std::string site_id;
  Seconds start = 0.0;
  Seconds end = 0.0;
  int n_cpus = 0;
  GHz frequency = 0.0;

  friend bool operator==(const Reservation&, const Reservation&) = default;
};

/// Energy and money resulting from running one job on one site at one frequency.
struct EnergyOutcome {
  Joules cpu_energy_j = 0.0;
  Joules total_energy_j = 0.0;
  Dollars energy_cost = 0.0;
  double carbon_kg = 0.0;
  Dollars profit = 0.0;

  friend bool operator==(const EnergyOutcome&, const EnergyOutcome&) = default;
};

}  // namespace ecosched
