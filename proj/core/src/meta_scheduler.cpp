#include "ecosched/meta_scheduler.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "ecosched/energy.hpp"

namespace ecosched {

namespace {

std::vector<std::size_t> edf_order(std::span<const Job> queue) {
  std::vector<std::size_t> order(queue.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (queue[a].deadline != queue[b].deadline) return queue[a].deadline < queue[b].deadline;
    return queue[a].id < queue[b].id;
  });
  return order;
}

Placement make_placement(const Job& job, std::size_t site_index, const SiteSchedule& sched,
                         const Reservation& r) {
  return {job, site_index, r, energy::evaluate_placement(sched.site(), job, r.frequency)};
}

void reject(CycleOutcome& out, const Job& job, std::span<SiteSchedule> sites,
            const RejectObserver& on_reject) {
  if (on_reject) on_reject(job, std::span<const SiteSchedule>(sites.data(), sites.size()));
  out.rejected.push_back(job);
}

bool better(double candidate, double incumbent, bool maximize) {
  return maximize ? candidate > incumbent : candidate < incumbent;
}

}  // namespace

std::string_view to_string(MappingPolicy policy) {
  switch (policy) {
    case MappingPolicy::Gmce:
      return "gmce";
    case MappingPolicy::Gmp:
      return "gmp";
    case MappingPolicy::MceMce:
      return "mce-mce";
    case MappingPolicy::MpMp:
      return "mp-mp";
    case MappingPolicy::MceMp:
      return "mce-mp";
    case MappingPolicy::EdfEst:
      return "edf-est";
  }
  return "?";
}

MappingPolicy parse_mapping_policy(std::string_view name) {
  for (MappingPolicy p : kAllPolicies) {
    if (to_string(p) == name) return p;
  }
  throw InvalidArgument("unknown policy '" + std::string(name) +
                        "' (expected gmce, gmp, mce-mce, mp-mp, mce-mp or edf-est)");
}

std::string to_string(const PolicyId& id) {
  return std::string(to_string(id.mapping)) + "/" + std::string(to_string(id.dvs));
}

std::optional<double> placement_fitness(const Job& job, const SiteSchedule& sched, DvsMode mode,
                                        FitnessKind kind) {
  const Admission a = sched.plan(job, mode);
  if (!a.admitted()) return std::nullopt;
  const EnergyOutcome e = energy::evaluate_placement(sched.site(), job, a.reservation->frequency);
  return kind == FitnessKind::Carbon ? e.carbon_kg : e.profit;
}

CycleOutcome greedy_map(std::span<const Job> queue, std::span<SiteSchedule> sites,
                        const std::function<double(const CloudSite&)>& site_key, DvsMode mode,
                        const RejectObserver& on_reject) {
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(sites.size());
  for (std::size_t s = 0; s < sites.size(); ++s) {
    keyed.emplace_back(site_key(sites[s].site()), s);
  }
  std::sort(keyed.begin(), keyed.end());

  CycleOutcome out;
  for (std::size_t j : edf_order(queue)) {
    const Job& job = queue[j];
    bool placed = false;
    for (const auto& [key, s] : keyed) {
      const Admission a = sites[s].select(job, mode);
      if (a.admitted()) {
        out.placements.push_back(make_placement(job, s, sites[s], *a.reservation));
        placed = true;
        break;
      }
    }
    if (!placed) reject(out, job, sites, on_reject);
  }
  return out;
}

void solve_two_phase(const TwoPhaseProblem& p) {
  const std::size_t nj = p.n_jobs;
  const std::size_t ns = p.n_sites;
  auto key = [&](std::size_t j) {
    return p.job_key ? p.job_key(j) : static_cast<std::int64_t>(j);
  };

  struct Cell {
    bool fresh = false;
    bool blocked = false;  // a commit to this pair failed at the current site state
    std::optional<double> first;
    std::optional<double> second;
  };
  std::vector<Cell> cells(nj * ns);
  std::vector<bool> pending(nj, true);
  std::size_t remaining = nj;

  auto cell = [&](std::size_t j, std::size_t s) -> Cell& {
    Cell& c = cells[j * ns + s];
    if (!c.fresh) {
      c.first = c.blocked ? std::nullopt : p.first(j, s);
      c.second.reset();
      c.fresh = true;
    }
    return c;
  };
  auto invalidate_site = [&](std::size_t s, bool clear_blocks) {
    for (std::size_t j = 0; j < nj; ++j) {
      Cell& c = cells[j * ns + s];
      c.fresh = false;
      if (clear_blocks) c.blocked = false;
    }
  };

  while (remaining > 0) {
    // Step 1: best site per job.
    std::vector<std::optional<std::size_t>> best(nj);
    for (std::size_t j = 0; j < nj; ++j) {
      if (!pending[j]) continue;
      for (std::size_t s = 0; s < ns; ++s) {
        const Cell& c = cell(j, s);
        if (!c.first) continue;
        if (!best[j] || better(*c.first, *cell(j, *best[j]).first, p.first_maximize)) {
          best[j] = s;
        }
      }
      if (!best[j]) {
        pending[j] = false;
        --remaining;
        if (p.reject) p.reject(j);
      }
    }
    if (remaining == 0) break;

    // Step 2: extremal pair.
    std::optional<std::size_t> pick_job;
    double pick_value = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
      if (!pending[j]) continue;
      Cell& c = cell(j, *best[j]);
      if (!c.second) c.second = p.second(j, *best[j]);
      const double v = *c.second;
      if (!pick_job || better(v, pick_value, p.second_maximize) ||
          (v == pick_value && key(j) < key(*pick_job))) {
        pick_job = j;
        pick_value = v;
      }
    }

    // Step 3: commit and refresh the state of the site that changed.
    const std::size_t j = *pick_job;
    const std::size_t s = *best[j];
    if (p.commit(j, s)) {
      pending[j] = false;
      --remaining;
      invalidate_site(s, true);
    } else {
      Cell& c = cells[j * ns + s];
      c.blocked = true;
      c.fresh = false;
    }
  }
}

CycleOutcome two_phase_map(std::span<const Job> queue, std::span<SiteSchedule> sites,
                           PhaseObjective first, PhaseObjective second, DvsMode mode,
                           const RejectObserver& on_reject) {
  CycleOutcome out;
  TwoPhaseProblem problem;
  problem.n_jobs = queue.size();
  problem.n_sites = sites.size();
  problem.first = [&](std::size_t j, std::size_t s) {
    return placement_fitness(queue[j], sites[s], mode, first.kind);
  };
  problem.second = [&](std::size_t j, std::size_t s) {
    const auto v = placement_fitness(queue[j], sites[s], mode, second.kind);
    if (!v) throw std::logic_error("two_phase_map: phase-one pair became infeasible");
    return *v;
  };
  problem.first_maximize = first.maximize;
  problem.second_maximize = second.maximize;
  problem.commit = [&](std::size_t j, std::size_t s) {
    const Admission a = sites[s].select(queue[j], mode);
    if (!a.admitted()) return false;
    out.placements.push_back(make_placement(queue[j], s, sites[s], *a.reservation));
    return true;
  };
  problem.reject = [&](std::size_t j) { reject(out, queue[j], sites, on_reject); };
  problem.job_key = [&](std::size_t j) { return queue[j].id; };
  solve_two_phase(problem);
  return out;
}

CycleOutcome edf_est_map(std::span<const Job> queue, std::span<SiteSchedule> sites, DvsMode mode,
                         const RejectObserver& on_reject) {
  CycleOutcome out;
  for (std::size_t j : edf_order(queue)) {
    const Job& job = queue[j];
    std::vector<std::pair<Seconds, std::size_t>> by_start;
    for (std::size_t s = 0; s < sites.size(); ++s) {
      if (job.n_cpus > sites[s].site().cpu_count) continue;
      by_start.emplace_back(sites[s].earliest_start(job.n_cpus, job.base_runtime), s);
    }
    std::sort(by_start.begin(), by_start.end());

    bool placed = false;
    for (const auto& [start, s] : by_start) {
      const Admission a = sites[s].select(job, mode);
      if (a.admitted()) {
        out.placements.push_back(make_placement(job, s, sites[s], *a.reservation));
        placed = true;
        break;
      }
    }
    if (!placed) reject(out, job, sites, on_reject);
  }
  return out;
}

CycleOutcome schedule_cycle(std::span<const Job> queue, std::span<SiteSchedule> sites,
                            const PolicyId& policy, const RejectObserver& on_reject) {
  switch (policy.mapping) {
    case MappingPolicy::Gmce:
      return greedy_map(queue, sites, energy::carbon_efficiency_key, policy.dvs, on_reject);
    case MappingPolicy::Gmp:
      return greedy_map(queue, sites, energy::cost_efficiency_key, policy.dvs, on_reject);
    case MappingPolicy::MceMce:
      return two_phase_map(queue, sites, kMinCarbon, kMinCarbon, policy.dvs, on_reject);
    case MappingPolicy::MpMp:
      return two_phase_map(queue, sites, kMaxProfit, kMaxProfit, policy.dvs, on_reject);
    case MappingPolicy::MceMp:
      return two_phase_map(queue, sites, kMinCarbon, kMaxProfit, policy.dvs, on_reject);
    case MappingPolicy::EdfEst:
      return edf_est_map(queue, sites, policy.dvs, on_reject);
  }
  throw std::logic_error("schedule_cycle: unhandled policy");
}

std::optional<double> SimulationReport::avg_carbon() const {
  if (!(workload_cpu_seconds > 0.0)) return std::nullopt;
  return total_carbon_kg / workload_cpu_seconds;
}

std::optional<double> SimulationReport::avg_profit() const {
  if (!(workload_cpu_seconds > 0.0)) return std::nullopt;
  return total_profit / workload_cpu_seconds;
}

double SimulationReport::acceptance_rate() const {
  const std::size_t offered = jobs_accepted + jobs_rejected;
  return offered == 0 ? 0.0 : static_cast<double>(jobs_accepted) / static_cast<double>(offered);
}

SimulationReport simulate(std::span<const Job> jobs, std::span<const CloudSite> sites,
                          const PolicyId& policy, const SimulationOptions& options) {
  if (!(options.cycle_interval > 0.0)) {
    throw InvalidArgument("simulate: cycle interval must be > 0");
  }
  if (!std::is_sorted(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
        return a.submit_time < b.submit_time;
      })) {
    throw InvalidArgument("simulate: jobs must be sorted by submit time");
  }

  SimulationReport report;
  if (jobs.empty()) return report;

  const Seconds interval = options.cycle_interval;
  auto cycle_of = [&](Seconds t) { return static_cast<long long>(std::ceil(t / interval)); };

  long long cycle = cycle_of(jobs.front().submit_time);
  std::vector<SiteSchedule> schedules;
  schedules.reserve(sites.size());
  for (const auto& site : sites) {
    static_cast<void>(site.cop_value());  // throws when the COP is missing
    schedules.emplace_back(site, static_cast<double>(cycle) * interval);
  }

  std::vector<Job> queue;
  std::size_t next = 0;
  while (next < jobs.size() || !queue.empty()) {
    const Seconds now = static_cast<double>(cycle) * interval;
    for (auto& s : schedules) s.advance_clock(now);
    while (next < jobs.size() && jobs[next].submit_time <= now) {
      queue.push_back(jobs[next++]);
    }

    if (!queue.empty()) {
      CycleOutcome out = schedule_cycle(queue, schedules, policy, options.on_reject);
      for (auto& p : out.placements) {
        report.total_carbon_kg += p.outcome.carbon_kg;
        report.total_profit += p.outcome.profit;
        report.total_energy_cost += p.outcome.energy_cost;
        report.total_energy_j += p.outcome.total_energy_j;
        report.workload_cpu_seconds += static_cast<double>(p.job.n_cpus) * p.job.base_runtime;
        ++report.jobs_accepted;
        report.placements.push_back(std::move(p));
      }
      queue.clear();
      for (auto& job : out.rejected) {
        const bool may_fit_later = now + interval + job.base_runtime <= job.deadline;
        if (options.retry_rejected && may_fit_later) {
          queue.push_back(std::move(job));
        } else {
          ++report.jobs_rejected;
        }
      }
    }

    ++cycle;
    if (queue.empty() && next < jobs.size()) {
      cycle = std::max(cycle, cycle_of(jobs[next].submit_time));
    }
  }
  return report;
}

void write_reservations_csv(std::span<const Placement> placements, std::ostream& out) {
  auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  out << "job_id,site,start,end,n_cpus,frequency\n";
  for (const auto& p : placements) {
    const Reservation& r = p.reservation;
    out << r.job_id << ",\"" << r.site_id << "\"," << num(r.start) << ',' << num(r.end) << ','
        << r.n_cpus << ',' << num(r.frequency) << '\n';
  }
}

}  // namespace ecosched
