#include "ecosched/bounds.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include "ecosched/energy.hpp"

namespace ecosched::bounds {

FluidCapacity::FluidCapacity(int total_cpus, Seconds origin)
    : total_cpus_(total_cpus), origin_(origin) {
  if (total_cpus < 1) {
    throw InvalidArgument("FluidCapacity: total_cpus must be >= 1");
  }
}

double FluidCapacity::committed_before(Seconds t) const {
  double sum = 0.0;
  for (auto it = work_by_deadline_.begin(); it != work_by_deadline_.end() && it->first <= t; ++it) {
    sum += it->second;
  }
  return sum;
}

bool FluidCapacity::fits(double work, Seconds deadline) const {
  const double width = static_cast<double>(total_cpus_);
  if (work > width * (deadline - origin_)) return false;
  double due = 0.0;
  for (const auto& [d, w] : work_by_deadline_) {
    due += w;
    const double extra = d >= deadline ? work : 0.0;
    if (due + extra > width * (d - origin_)) return false;
  }
  return committed_before(deadline) + work <= width * (deadline - origin_);
}

bool FluidCapacity::fluid_fit(const Job& job) {
  const double work = static_cast<double>(job.n_cpus) * job.base_runtime;
  if (!fits(work, job.deadline)) return false;
  work_by_deadline_[job.deadline] += work;
  return true;
}

std::optional<double> BoundsResult::avg_carbon() const {
  if (!(twl > 0.0)) return std::nullopt;
  return tce / twl;
}

std::optional<double> BoundsResult::avg_profit() const {
  if (!(twl > 0.0)) return std::nullopt;
  return tp / twl;
}

namespace {

struct OptimalRun {
  Seconds duration;  // runtime at the clamped optimum
  double power;      // W per CPU at the clamped optimum
};

OptimalRun optimal_run(const CloudSite& site, const Job& job) {
  const GHz f =
      energy::clamp_frequency(site, energy::optimal_frequency(site, job.gamma));
  return {energy::exec_time(job.base_runtime, job.gamma, f, site.f_max),
          energy::cpu_power(site, f)};
}

using Accumulate = std::function<void(BoundsResult&, const CloudSite&, const Job&)>;

BoundsResult pack(std::span<const Job> jobs, std::span<const CloudSite> sites,
                  const std::function<double(const CloudSite&)>& site_key,
                  const Accumulate& accumulate) {
  BoundsResult result;
  if (jobs.empty()) return result;

  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t s = 0; s < sites.size(); ++s) order.emplace_back(site_key(sites[s]), s);
  std::sort(order.begin(), order.end());

  std::vector<std::size_t> job_order(jobs.size());
  std::iota(job_order.begin(), job_order.end(), std::size_t{0});
  std::stable_sort(job_order.begin(), job_order.end(), [&](std::size_t a, std::size_t b) {
    if (jobs[a].deadline != jobs[b].deadline) return jobs[a].deadline < jobs[b].deadline;
    return jobs[a].id < jobs[b].id;
  });

  // Every job is known up front: all capacity opens at the earliest submit.
  Seconds origin = jobs.front().submit_time;
  for (const auto& j : jobs) origin = std::min(origin, j.submit_time);

  std::vector<FluidCapacity> capacity;
  capacity.reserve(sites.size());
  for (const auto& site : sites) capacity.emplace_back(site.cpu_count, origin);

  for (std::size_t j : job_order) {
    const Job& job = jobs[j];
    bool placed = false;
    for (const auto& [key, s] : order) {
      if (capacity[s].fluid_fit(job)) {
        result.twl += static_cast<double>(job.n_cpus) * job.base_runtime;
        accumulate(result, sites[s], job);
        ++result.scheduled_jobs;
        placed = true;
        break;
      }
    }
    if (!placed) ++result.dropped_jobs;
  }
  return result;
}

}  // namespace

BoundsResult lower_bound_carbon(std::span<const Job> jobs, std::span<const CloudSite> sites) {
  return pack(jobs, sites, energy::carbon_efficiency_key,
              [](BoundsResult& r, const CloudSite& site, const Job& job) {
                const OptimalRun run = optimal_run(site, job);
                const Joules cpu = static_cast<double>(job.n_cpus) * run.duration * run.power;
                r.tce += energy::carbon_emission(site, energy::total_energy(site, cpu));
              });
}

BoundsResult upper_bound_profit(std::span<const Job> jobs, std::span<const CloudSite> sites,
                                ProfitFormula formula) {
  return pack(jobs, sites, energy::cost_efficiency_key,
              [formula](BoundsResult& r, const CloudSite& site, const Job& job) {
                const OptimalRun run = optimal_run(site, job);
                const double cpu_seconds = static_cast<double>(job.n_cpus) * run.duration;
                const Dollars cost =
                    energy::energy_cost(site, energy::total_energy(site, cpu_seconds * run.power));
                if (formula == ProfitFormula::PricedRevenue) {
                  r.tp += cpu_seconds * site.exec_price - cost;
                } else {
                  r.tp += cpu_seconds - cost;
                }
              });
}

}  // namespace ecosched::bounds
