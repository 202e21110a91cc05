#include "ecosched/site_schedule.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace ecosched {

std::string_view to_string(DvsMode mode) {
  switch (mode) {
    case DvsMode::OurDvs:
      return "our-dvs";
    case DvsMode::PrevDvs:
      return "prev-dvs";
    case DvsMode::WithoutDvs:
      return "no-dvs";
  }
  return "?";
}

DvsMode parse_dvs_mode(std::string_view name) {
  if (name == "our-dvs") return DvsMode::OurDvs;
  if (name == "prev-dvs") return DvsMode::PrevDvs;
  if (name == "no-dvs") return DvsMode::WithoutDvs;
  throw InvalidArgument("unknown DVS mode '" + std::string(name) +
                        "' (expected our-dvs, prev-dvs or no-dvs)");
}

SiteSchedule::SiteSchedule(CloudSite site, Seconds clock)
    : site_(std::move(site)), clock_(clock) {
  validate(site_);
  ladder_ = energy::frequency_ladder(site_);
  profile_.emplace(clock_, site_.cpu_count);
}

SiteSchedule::Profile::const_iterator SiteSchedule::segment_at(Seconds t) const {
  auto it = profile_.upper_bound(t);
  // The first breakpoint never lies after the clock.
  return std::prev(it);
}

int SiteSchedule::free_at(Seconds t) const {
  return segment_at(std::max(t, clock_))->second;
}

std::vector<TimeSlot> SiteSchedule::free_slots(Seconds horizon) const {
  std::vector<TimeSlot> slots;
  for (auto it = segment_at(clock_); it != profile_.end() && it->first < horizon; ++it) {
    const Seconds start = std::max(it->first, clock_);
    const auto next = std::next(it);
    const Seconds end = next == profile_.end() ? horizon : std::min(next->first, horizon);
    if (!(start < end)) continue;
    if (!slots.empty() && slots.back().free_cpus == it->second) {
      slots.back().end = end;
    } else {
      slots.push_back({start, end, it->second});
    }
  }
  return slots;
}

Seconds SiteSchedule::earliest_start(int n_cpus, Seconds duration) const {
  if (n_cpus > site_.cpu_count) {
    throw InvalidArgument("earliest_start: job needs " + std::to_string(n_cpus) +
                          " CPUs but site '" + site_.id + "' has " +
                          std::to_string(site_.cpu_count));
  }
  Seconds start = clock_;
  auto first = segment_at(clock_);
  for (;;) {
    const Seconds end = start + duration;
    auto it = first;
    while (it != profile_.end() && it->first < end && it->second >= n_cpus) {
      ++it;
    }
    if (it == profile_.end() || it->first >= end) {
      return start;
    }
    // `it` blocks the window; the next candidate is where it ends. The final
    // segment always has the whole machine free, so this terminates.
    first = std::next(it);
    start = first->first;
  }
}

std::size_t SiteSchedule::start_level(const Job& job, DvsMode mode) const {
  switch (mode) {
    case DvsMode::OurDvs: {
      const GHz opt = energy::clamp_frequency(site_, energy::optimal_frequency(site_, job.gamma));
      return energy::nearest_level(ladder_, opt).index;
    }
    case DvsMode::PrevDvs:
      return 0;
    case DvsMode::WithoutDvs:
      return energy::FrequencyLadder::kLevels - 1;
  }
  return energy::FrequencyLadder::kLevels - 1;
}

Admission SiteSchedule::plan(const Job& job, GHz f) const {
  if (job.n_cpus > site_.cpu_count) {
    return {AdmissionStatus::Capacity, std::nullopt};
  }
  if (f < site_.f_min * (1.0 - 1e-12) || f > site_.f_max) {
    throw InvalidArgument("plan: frequency outside the operating range of site '" + site_.id +
                          "'");
  }
  const Seconds duration = energy::exec_time(job.base_runtime, job.gamma, f, site_.f_max);
  if (clock_ + duration > job.deadline) {
    return {AdmissionStatus::DeadlineMiss, std::nullopt};
  }
  const Seconds start = earliest_start(job.n_cpus, duration);
  const Seconds end = start + duration;
  if (end > job.deadline) {
    return {AdmissionStatus::DeadlineMiss, std::nullopt};
  }
  return {AdmissionStatus::Admitted, Reservation{job.id, site_.id, start, end, job.n_cpus, f}};
}

Admission SiteSchedule::plan(const Job& job, DvsMode mode) const {
  if (job.n_cpus > site_.cpu_count) {
    return {AdmissionStatus::Capacity, std::nullopt};
  }
  // Nothing can beat f_max started right now.
  if (clock_ + job.base_runtime > job.deadline) {
    return {AdmissionStatus::DeadlineMiss, std::nullopt};
  }
  for (std::size_t level = start_level(job, mode); level < ladder_.levels.size(); ++level) {
    Admission a = plan(job, ladder_.levels[level]);
    if (a.admitted()) {
      return a;
    }
  }
  return {AdmissionStatus::DeadlineMiss, std::nullopt};
}

void SiteSchedule::split_at(Seconds t) {
  auto it = segment_at(t);
  if (it->first != t) {
    profile_.emplace_hint(std::next(it), t, it->second);
  }
}

void SiteSchedule::commit(const Reservation& r) {
  if (r.start < clock_) {
    throw std::logic_error("commit: reservation starts before the clock");
  }
  if (!(r.start < r.end)) {
    throw std::logic_error("commit: empty reservation");
  }
  split_at(r.start);
  split_at(r.end);
  auto first = profile_.find(r.start);
  auto last = profile_.find(r.end);
  for (auto it = first; it != last; ++it) {
    if (it->second < r.n_cpus) {
      throw std::logic_error("commit: reservation for job " + std::to_string(r.job_id) +
                             " overbooks site '" + site_.id + "'");
    }
  }
  for (auto it = first; it != last; ++it) {
    it->second -= r.n_cpus;
  }

  // Drop breakpoints that no longer change the capacity.
  auto it = first == profile_.begin() ? first : std::prev(first);
  while (it != profile_.end()) {
    auto next = std::next(it);
    if (next == profile_.end() || next->first > r.end) break;
    if (next->second == it->second) {
      profile_.erase(next);
    } else {
      it = next;
    }
  }
  active_.push_back(r);
}

Admission SiteSchedule::try_reserve(const Job& job, GHz f) {
  Admission a = plan(job, f);
  if (a.admitted()) commit(*a.reservation);
  return a;
}

Admission SiteSchedule::select(const Job& job, DvsMode mode) {
  Admission a = plan(job, mode);
  if (a.admitted()) commit(*a.reservation);
  return a;
}

Admission SiteSchedule::dvs_select(const Job& job) { return select(job, DvsMode::OurDvs); }
Admission SiteSchedule::prev_dvs_select(const Job& job) { return select(job, DvsMode::PrevDvs); }
Admission SiteSchedule::no_dvs_select(const Job& job) { return select(job, DvsMode::WithoutDvs); }

std::vector<Reservation> SiteSchedule::advance_clock(Seconds t) {
  if (t < clock_) {
    throw InvalidArgument("advance_clock: time cannot move backwards");
  }
  clock_ = t;

  std::vector<Reservation> done;
  auto keep = std::stable_partition(active_.begin(), active_.end(),
                                    [t](const Reservation& r) { return r.end > t; });
  done.assign(std::make_move_iterator(keep), std::make_move_iterator(active_.end()));
  active_.erase(keep, active_.end());

  const int free_now = segment_at(t)->second;
  profile_.erase(profile_.begin(), profile_.upper_bound(t));
  profile_.emplace(t, free_now);
  return done;
}

bool SiteSchedule::consistent() const {
  std::set<Seconds> times{clock_};
  for (const auto& [t, _] : profile_) {
    if (t >= clock_) times.insert(t);
  }
  for (const auto& r : active_) {
    if (r.start >= clock_) times.insert(r.start);
    if (r.end >= clock_) times.insert(r.end);
  }
  for (Seconds t : times) {
    int expected = site_.cpu_count;
    for (const auto& r : active_) {
      if (r.start <= t && t < r.end) expected -= r.n_cpus;
    }
    if (expected < 0 || free_at(t) != expected) return false;
  }
  return segment_at(clock_) == profile_.begin();
}

}  // namespace ecosched
