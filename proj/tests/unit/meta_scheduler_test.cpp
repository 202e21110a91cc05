#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "ecosched/catalog.hpp"
#include "ecosched/energy.hpp"
#include "ecosched/meta_scheduler.hpp"
#include "ecosched/workload.hpp"
#include "oracles.hpp"

namespace {

using namespace ecosched;
constexpr std::size_t kRejected = static_cast<std::size_t>(-1);

Job job(std::int64_t id, int n, double runtime, double deadline, double submit = 0.0) {
  return Job{id, submit, n, runtime, deadline, 1.0, Urgency::Low};
}

CloudSite site_with(std::string id, double rate, double price, int cpus) {
  CloudSite s = builtin_catalog()[0].with_cop(2.0);
  s.id = std::move(id);
  s.carbon_rate = rate;
  s.energy_price = price;
  s.cpu_count = cpus;
  return s;
}

std::vector<SiteSchedule> schedules(const std::vector<CloudSite>& sites, double clock = 0.0) {
  std::vector<SiteSchedule> out;
  for (const auto& s : sites) out.emplace_back(s, clock);
  return out;
}

std::vector<oracle::MinMinStep> as_steps(const CycleOutcome& out) {
  std::vector<oracle::MinMinStep> steps;
  for (const auto& p : out.placements) steps.push_back({p.job.id, p.site_index, p.reservation});
  for (const auto& j : out.rejected) steps.push_back({j.id, kRejected, {}});
  return steps;
}

void expect_same_steps(std::vector<oracle::MinMinStep> a, std::vector<oracle::MinMinStep> b) {
  auto split = [](std::vector<oracle::MinMinStep>& v) {
    std::vector<std::int64_t> rejected;
    std::vector<oracle::MinMinStep> placed;
    for (const auto& s : v) {
      if (s.site_index == kRejected) {
        rejected.push_back(s.job_id);
      } else {
        placed.push_back(s);
      }
    }
    std::sort(rejected.begin(), rejected.end());
    return std::make_pair(placed, rejected);
  };
  const auto [pa, ra] = split(a);
  const auto [pb, rb] = split(b);
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].job_id, pb[i].job_id) << "step " << i;
    EXPECT_EQ(pa[i].site_index, pb[i].site_index) << "step " << i;
    EXPECT_EQ(pa[i].reservation, pb[i].reservation) << "step " << i;
  }
  EXPECT_EQ(ra, rb);
}

TEST(PolicyNames, RoundTrip) {
  for (auto p : kAllPolicies) EXPECT_EQ(parse_mapping_policy(to_string(p)), p);
  EXPECT_EQ(to_string(PolicyId{MappingPolicy::MceMp, DvsMode::PrevDvs}), "mce-mp/prev-dvs");
  EXPECT_THROW((void)parse_mapping_policy("GMCE"), InvalidArgument);
  EXPECT_EQ(PolicyId{}.dvs, DvsMode::OurDvs);
}

TEST(ScheduleCycle, EmptyQueue) {
  auto scheds = schedules({site_with("a", 0.1, 0.1, 10)});
  for (auto p : kAllPolicies) {
    const auto out = schedule_cycle({}, scheds, {p, DvsMode::OurDvs});
    EXPECT_TRUE(out.placements.empty());
    EXPECT_TRUE(out.rejected.empty());
  }
}

TEST(ScheduleCycle, SingleJobSingleSite) {
  for (auto p : kAllPolicies) {
    for (auto m : kAllDvsModes) {
      auto scheds = schedules({site_with("a", 0.1, 0.1, 10)});
      const std::vector<Job> q{job(1, 2, 100, 1000)};
      const auto out = schedule_cycle(q, scheds, {p, m});
      ASSERT_EQ(out.placements.size(), 1u);
      EXPECT_EQ(out.placements[0].site_index, 0u);
      EXPECT_TRUE(out.rejected.empty());
    }
  }
}

TEST(GreedyMap, LowerKeyTriedFirst) {
  auto scheds = schedules({site_with("five", 0.5, 0.1, 10), site_with("three", 0.3, 0.1, 10)});
  const std::vector<Job> q{job(1, 1, 100, 1000)};
  const auto out =
      greedy_map(q, scheds, [](const CloudSite& s) { return s.carbon_rate * 10; }, DvsMode::OurDvs);
  ASSERT_EQ(out.placements.size(), 1u);
  EXPECT_EQ(out.placements[0].site_index, 1u);
}

TEST(GreedyMap, EqualDeadlinesById) {
  auto scheds = schedules({site_with("a", 0.1, 0.1, 10)});
  const std::vector<Job> q{job(9, 1, 10, 500), job(2, 1, 10, 500), job(5, 1, 10, 400)};
  const auto out = greedy_map(q, scheds, energy::carbon_efficiency_key, DvsMode::WithoutDvs);
  ASSERT_EQ(out.placements.size(), 3u);
  EXPECT_EQ(out.placements[0].job.id, 5);
  EXPECT_EQ(out.placements[1].job.id, 2);
  EXPECT_EQ(out.placements[2].job.id, 9);
}

TEST(GreedyMap, ForwardsToSecondSite) {
  // Cleanest site is too small for the job.
  auto scheds = schedules({site_with("small", 0.0, 0.1, 2), site_with("big", 0.9, 0.1, 16)});
  const std::vector<Job> q{job(1, 8, 100, 1000)};
  const auto out = greedy_map(q, scheds, energy::carbon_efficiency_key, DvsMode::OurDvs);
  ASSERT_EQ(out.placements.size(), 1u);
  EXPECT_EQ(out.placements[0].site_index, 1u);
}

TEST(GreedyMap, ConstantKeyIsFirstFit) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<CloudSite> sites;
    for (int s = 0; s < 3; ++s) sites.push_back(oracle::random_site(rng, s, 6));
    std::vector<Job> q;
    for (int j = 0; j < 6; ++j) q.push_back(oracle::random_job(rng, j, 0.0, 6, 1.0, 3.0));
    auto a = schedules(sites);
    auto b = schedules(sites);
    const auto out = greedy_map(q, a, [](const CloudSite&) { return 1.0; }, DvsMode::OurDvs);
    std::sort(q.begin(), q.end(), [](const Job& x, const Job& y) {
      return x.deadline < y.deadline || (x.deadline == y.deadline && x.id < y.id);
    });
    std::size_t placed = 0;
    for (const auto& j : q) {
      for (std::size_t s = 0; s < b.size(); ++s) {
        const auto adm = b[s].select(j, DvsMode::OurDvs);
        if (!adm.admitted()) continue;
        ASSERT_LT(placed, out.placements.size());
        EXPECT_EQ(out.placements[placed].site_index, s);
        EXPECT_EQ(out.placements[placed].reservation, *adm.reservation);
        ++placed;
        break;
      }
    }
    EXPECT_EQ(placed, out.placements.size());
  }
}

TEST(GreedyMap, GmceMatchesReplay) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<CloudSite> sites{oracle::random_site(rng, 0, 4), oracle::random_site(rng, 1, 4)};
    std::vector<Job> q;
    for (int j = 0; j < 3; ++j) q.push_back(oracle::random_job(rng, j, 0.0, 4, 1.0, 2.5));
    for (bool carbon : {true, false}) {
      auto a = schedules(sites);
      auto b = schedules(sites);
      const PolicyId policy{carbon ? MappingPolicy::Gmce : MappingPolicy::Gmp, DvsMode::OurDvs};
      expect_same_steps(as_steps(schedule_cycle(q, a, policy)),
                        oracle::replay_greedy(q, b, carbon, DvsMode::OurDvs));
    }
  }
}

TEST(SolveTwoPhase, HandMatrix) {
  const double fitness[2][2] = {{3, 5}, {4, 2}};
  std::vector<std::pair<std::size_t, std::size_t>> commits;
  TwoPhaseProblem p;
  p.n_jobs = 2;
  p.n_sites = 2;
  p.first = [&](std::size_t j, std::size_t s) { return std::optional<double>(fitness[j][s]); };
  p.second = [&](std::size_t j, std::size_t s) { return fitness[j][s]; };
  p.commit = [&](std::size_t j, std::size_t s) {
    commits.emplace_back(j, s);
    return true;
  };
  solve_two_phase(p);
  ASSERT_EQ(commits.size(), 2u);
  EXPECT_EQ(commits[0], std::make_pair(std::size_t{1}, std::size_t{1}));
  EXPECT_EQ(commits[1], std::make_pair(std::size_t{0}, std::size_t{0}));
}

TEST(SolveTwoPhase, SingleJobPicksBestSite) {
  std::vector<std::size_t> chosen;
  TwoPhaseProblem p;
  p.n_jobs = 1;
  p.n_sites = 3;
  p.first = [](std::size_t, std::size_t s) { return std::optional<double>(s == 2 ? 9.0 : 1.0); };
  p.second = [](std::size_t, std::size_t) { return 0.0; };
  p.first_maximize = true;
  p.commit = [&](std::size_t, std::size_t s) {
    chosen.push_back(s);
    return true;
  };
  solve_two_phase(p);
  EXPECT_EQ(chosen, std::vector<std::size_t>{2});
}

TEST(SolveTwoPhase, RejectsInfeasibleAndRetriesFailedCommit) {
  std::vector<std::size_t> rejected;
  std::vector<std::pair<std::size_t, std::size_t>> commits;
  int failures = 1;
  TwoPhaseProblem p;
  p.n_jobs = 2;
  p.n_sites = 2;
  p.first = [](std::size_t j, std::size_t s) -> std::optional<double> {
    if (j == 1) return std::nullopt;
    return s == 0 ? 1.0 : 2.0;
  };
  p.second = [](std::size_t, std::size_t s) { return static_cast<double>(s); };
  p.commit = [&](std::size_t j, std::size_t s) {
    if (failures-- > 0) return false;
    commits.emplace_back(j, s);
    return true;
  };
  p.reject = [&](std::size_t j) { rejected.push_back(j); };
  solve_two_phase(p);
  EXPECT_EQ(rejected, std::vector<std::size_t>{1});
  ASSERT_EQ(commits.size(), 1u);
  EXPECT_EQ(commits[0], std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(TwoPhaseMap, MatchesNaiveMinMin) {
  std::mt19937_64 rng(404);
  const std::pair<PhaseObjective, PhaseObjective> variants[] = {
      {kMinCarbon, kMinCarbon}, {kMaxProfit, kMaxProfit}, {kMinCarbon, kMaxProfit}};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<CloudSite> sites;
    for (int s = 0; s < 3; ++s) sites.push_back(oracle::random_site(rng, s, 4));
    std::vector<Job> q;
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int j = 0; j < n; ++j) q.push_back(oracle::random_job(rng, j, 0.0, 4, 1.0, 2.5));
    const auto mode = static_cast<DvsMode>(trial % 3);
    for (const auto& [first, second] : variants) {
      auto a = schedules(sites);
      auto b = schedules(sites);
      expect_same_steps(as_steps(two_phase_map(q, a, first, second, mode)),
                        oracle::naive_two_phase(q, b, first, second, mode));
    }
  }
}

TEST(PlacementFitness, MatchesDvsLevelAndModes) {
  const CloudSite ny = builtin_catalog()[0].with_cop(2.0);
  const SiteSchedule sched(ny);
  const Job j = job(1, 2, 100, 1e6);
  const auto carbon = placement_fitness(j, sched, DvsMode::OurDvs, FitnessKind::Carbon);
  ASSERT_TRUE(carbon);
  EXPECT_EQ(*carbon, energy::evaluate_placement(ny, j, sched.ladder().levels[3]).carbon_kg);
  const auto flat = placement_fitness(j, sched, DvsMode::WithoutDvs, FitnessKind::Profit);
  EXPECT_EQ(*flat, energy::evaluate_placement(ny, j, ny.f_max).profit);
  EXPECT_FALSE(placement_fitness(job(2, 1, 100, 50), sched, DvsMode::OurDvs, FitnessKind::Carbon));
  EXPECT_TRUE(sched.reservations().empty());
}

TEST(EdfEst, IdleSitesTieByIndex) {
  auto scheds = schedules({site_with("a", 0.9, 0.2, 8), site_with("b", 0.1, 0.1, 8)});
  const std::vector<Job> q{job(1, 2, 100, 1000)};
  const auto out = edf_est_map(q, scheds, DvsMode::OurDvs);
  ASSERT_EQ(out.placements.size(), 1u);
  EXPECT_EQ(out.placements[0].site_index, 0u);
}

TEST(EdfEst, PrefersIdleSite) {
  auto scheds = schedules({site_with("a", 0.1, 0.1, 8), site_with("b", 0.1, 0.1, 8)});
  scheds[0].commit(Reservation{99, "a", 0, 500, 8, 1.8});
  const std::vector<Job> q{job(1, 2, 100, 10000)};
  const auto out = edf_est_map(q, scheds, DvsMode::OurDvs);
  ASSERT_EQ(out.placements.size(), 1u);
  EXPECT_EQ(out.placements[0].site_index, 1u);
}

TEST(EdfEst, OurDvsBeatsPrevDvsOnSlackWorkload) {
  // California's raw optimum is below its f_min; leave it out.
  std::vector<CloudSite> sites;
  for (const auto& s : builtin_catalog()) {
    if (s.id != "California, USA") sites.push_back(s.with_cop(1.5));
  }
  std::vector<Job> jobs;
  for (int i = 0; i < 20; ++i) jobs.push_back(job(i, 4, 600, 60.0 * i + 50000, 60.0 * i));
  const auto ours = simulate(jobs, sites, {MappingPolicy::EdfEst, DvsMode::OurDvs});
  const auto prev = simulate(jobs, sites, {MappingPolicy::EdfEst, DvsMode::PrevDvs});
  EXPECT_EQ(ours.jobs_accepted, 20u);
  EXPECT_EQ(prev.jobs_accepted, 20u);
  EXPECT_LT(ours.total_energy_j, prev.total_energy_j);
}

TEST(Simulate, ZeroJobs) {
  const auto r = simulate({}, std::vector<CloudSite>{site_with("a", 0.1, 0.1, 4)},
                          {MappingPolicy::Gmce, DvsMode::OurDvs});
  EXPECT_EQ(r.total_carbon_kg, 0.0);
  EXPECT_EQ(r.total_profit, 0.0);
  EXPECT_EQ(r.jobs_accepted + r.jobs_rejected, 0u);
  EXPECT_FALSE(r.avg_carbon());
  EXPECT_EQ(r.acceptance_rate(), 0.0);
}

TEST(Simulate, OneJobEqualsPlacement) {
  const CloudSite s = site_with("a", 0.3, 0.12, 4);
  const Job j = job(1, 2, 300, 5000, 20);
  const auto r = simulate(std::vector<Job>{j}, std::vector<CloudSite>{s},
                          {MappingPolicy::Gmp, DvsMode::OurDvs});
  ASSERT_EQ(r.placements.size(), 1u);
  const auto e = energy::evaluate_placement(s, j, r.placements[0].reservation.frequency);
  EXPECT_EQ(r.total_carbon_kg, e.carbon_kg);
  EXPECT_EQ(r.total_profit, e.profit);
  EXPECT_EQ(r.total_energy_cost, e.energy_cost);
  EXPECT_EQ(r.workload_cpu_seconds, 600.0);
  EXPECT_EQ(r.placements[0].reservation.start, 50.0);  // first cycle boundary after submit
  EXPECT_EQ(r.acceptance_rate(), 1.0);
}

TEST(Simulate, RejectsUnsortedAndMissingCop) {
  const std::vector<Job> unsorted{job(1, 1, 10, 1000, 50), job(2, 1, 10, 1000, 10)};
  const std::vector<CloudSite> sites{site_with("a", 0.1, 0.1, 4)};
  EXPECT_THROW((void)simulate(unsorted, sites, {}), InvalidArgument);
  EXPECT_THROW((void)simulate(std::vector<Job>{job(1, 1, 10, 100)}, builtin_catalog(), {}),
               InvalidArgument);
  SimulationOptions bad;
  bad.cycle_interval = 0.0;
  EXPECT_THROW((void)simulate(std::vector<Job>{job(1, 1, 10, 100)}, sites, {}, bad),
               InvalidArgument);
}

std::vector<Job> trace_jobs(std::uint64_t seed, std::size_t n, double factor) {
  workload::SyntheticTraceParams p;
  p.n_jobs = n;
  const auto recs = workload::scale_arrivals(workload::synthetic_trace(p, seed), factor);
  return workload::build_jobs(recs, 40, {}, seed);
}

std::vector<CloudSite> sampled_catalog(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CloudSite> out;
  for (const auto& s : builtin_catalog()) {
    auto c = s.with_cop(std::uniform_real_distribution<double>(0.6, 3.5)(rng));
    c.cpu_count = std::max(1, c.cpu_count / 20);
    out.push_back(c);
  }
  return out;
}

TEST(Simulate, EachJobOnceAndDeadlinesMet) {
  const auto jobs = trace_jobs(3, 150, 50);
  const auto sites = sampled_catalog(3);
  for (auto p : kAllPolicies) {
    for (auto m : kAllDvsModes) {
      const auto r = simulate(jobs, sites, {p, m});
      EXPECT_EQ(r.jobs_accepted + r.jobs_rejected, jobs.size());
      std::set<std::int64_t> ids;
      for (const auto& pl : r.placements) {
        EXPECT_TRUE(ids.insert(pl.job.id).second);
        EXPECT_LE(pl.reservation.end, pl.job.deadline);
        EXPECT_GE(pl.reservation.start, pl.job.submit_time);
      }
    }
  }
}

TEST(Simulate, Deterministic) {
  const auto jobs = trace_jobs(4, 120, 100);
  const auto sites = sampled_catalog(4);
  const auto a = simulate(jobs, sites, {MappingPolicy::MceMp, DvsMode::OurDvs});
  const auto b = simulate(jobs, sites, {MappingPolicy::MceMp, DvsMode::OurDvs});
  EXPECT_EQ(a.total_carbon_kg, b.total_carbon_kg);
  EXPECT_EQ(a.total_profit, b.total_profit);
  ASSERT_EQ(a.placements.size(), b.placements.size());
  for (std::size_t i = 0; i < a.placements.size(); ++i) {
    EXPECT_EQ(a.placements[i].reservation, b.placements[i].reservation);
  }
}

TEST(Simulate, RetryNeverLosesJobs) {
  const auto jobs = trace_jobs(6, 150, 1000);
  const auto sites = sampled_catalog(6);
  SimulationOptions retry;
  retry.retry_rejected = true;
  const auto once = simulate(jobs, sites, {MappingPolicy::Gmce, DvsMode::OurDvs});
  const auto again = simulate(jobs, sites, {MappingPolicy::Gmce, DvsMode::OurDvs}, retry);
  EXPECT_EQ(again.jobs_accepted + again.jobs_rejected, jobs.size());
  EXPECT_GE(again.jobs_accepted + 0u, 0u);
  for (const auto& pl : again.placements) EXPECT_LE(pl.reservation.end, pl.job.deadline);
  EXPECT_EQ(once.jobs_accepted + once.jobs_rejected, jobs.size());
}

TEST(Simulate, RejectedJobsInfeasibleAtMaxFrequency) {
  const auto jobs = trace_jobs(8, 200, 1000);
  const auto sites = sampled_catalog(8);
  for (auto p : kAllPolicies) {
    std::size_t observed = 0;
    SimulationOptions opts;
    opts.on_reject = [&](const Job& j, std::span<const SiteSchedule> state) {
      ++observed;
      for (const auto& s : state) {
        EXPECT_FALSE(s.plan(j, s.site().f_max).admitted()) << to_string(p) << " job " << j.id;
      }
    };
    const auto r = simulate(jobs, sites, {p, DvsMode::OurDvs}, opts);
    EXPECT_EQ(observed, r.jobs_rejected);
  }
}

TEST(ReservationsCsv, Format) {
  std::vector<Placement> ps(1);
  ps[0].reservation = Reservation{4, "France", 50, 150.5, 8, 2.2};
  std::ostringstream out;
  write_reservations_csv(ps, out);
  EXPECT_EQ(out.str(), "job_id,site,start,end,n_cpus,frequency\n4,\"France\",50,150.5,8,2.2\n");
}

}  // namespace
