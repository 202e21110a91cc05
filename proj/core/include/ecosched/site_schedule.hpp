#pragma once

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ecosched/energy.hpp"
#include "ecosched/types.hpp"

namespace ecosched {

/// How the local scheduler picks a job's operating frequency.
enum class DvsMode {
  OurDvs,      // start at the ladder level nearest the energy optimum, escalate
  PrevDvs,     // start at f_min, escalate
  WithoutDvs,  // f_max only
};

[[nodiscard]] std::string_view to_string(DvsMode mode);
[[nodiscard]] DvsMode parse_dvs_mode(std::string_view name);

enum class AdmissionStatus {
  Admitted,
  DeadlineMiss,  // fits the machine but cannot finish by the deadline
  Capacity,      // needs more CPUs than the site has
};

struct Admission {
  AdmissionStatus status = AdmissionStatus::Capacity;
  std::optional<Reservation> reservation;

  [[nodiscard]] bool admitted() const { return status == AdmissionStatus::Admitted; }
};

/// Conservative-backfilling schedule of one site.
///
/// Free capacity is a piecewise-constant profile keyed by breakpoint time;
/// the last segment extends to infinity. A reservation, once committed, is
/// never moved by later admissions.
class SiteSchedule {
 public:
  explicit SiteSchedule(CloudSite site, Seconds clock = 0.0);

  [[nodiscard]] const CloudSite& site() const { return site_; }
  [[nodiscard]] Seconds clock() const { return clock_; }
  [[nodiscard]] const energy::FrequencyLadder& ladder() const { return ladder_; }

  /// Reservations that have not yet been returned by advance_clock.
  [[nodiscard]] const std::vector<Reservation>& reservations() const { return active_; }

  /// Maximal constant-capacity intervals covering [clock, horizon].
  [[nodiscard]] std::vector<TimeSlot> free_slots(Seconds horizon) const;

  /// Free CPUs at time t >= clock.
  [[nodiscard]] int free_at(Seconds t) const;

  /// Earliest t >= clock with at least n_cpus free throughout [t, t + duration).
  /// Throws InvalidArgument when n_cpus exceeds the machine.
  [[nodiscard]] Seconds earliest_start(int n_cpus, Seconds duration) const;

  /// Reservation the site would grant `job` at frequency `f`, without committing.
  [[nodiscard]] Admission plan(const Job& job, GHz f) const;

  /// Reservation the site would grant under a DVS mode, without committing.
  [[nodiscard]] Admission plan(const Job& job, DvsMode mode) const;

  /// plan() followed by commit() when admitted.
  Admission try_reserve(const Job& job, GHz f);
  Admission dvs_select(const Job& job);
  Admission prev_dvs_select(const Job& job);
  Admission no_dvs_select(const Job& job);
  Admission select(const Job& job, DvsMode mode);

  /// Adds a reservation produced by plan() on this schedule's current state.
  void commit(const Reservation& reservation);

  /// Moves the clock forward and returns reservations with end <= t.
  std::vector<Reservation> advance_clock(Seconds t);

  /// Ladder index where the escalation of `mode` starts for `job`.
  [[nodiscard]] std::size_t start_level(const Job& job, DvsMode mode) const;

  /// True when the profile equals one rebuilt from the active reservations.
  [[nodiscard]] bool consistent() const;

 private:
  using Profile = std::map<Seconds, int>;

  [[nodiscard]] Profile::const_iterator segment_at(Seconds t) const;
  void split_at(Seconds t);

  CloudSite site_;
  energy::FrequencyLadder ladder_;
  Seconds clock_;
  Profile profile_;
  std::vector<Reservation> active_;
};

}  // namespace ecosched
