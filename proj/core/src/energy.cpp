#include "ecosched/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ecosched::energy {

namespace {

// Derivative of unit_energy with respect to f.
double unit_energy_slope(const CloudSite& site, double gamma, GHz f) {
  const double a = site.alpha;
  const double b = site.beta;
  return 3.0 * a * f * f * (1.0 - gamma + gamma * site.f_max / f) -
         gamma * site.f_max * (b + a * f * f * f) / (f * f);
}

double cooling_factor(const CloudSite& site) {
  const double cop = site.cop_value();
  if (!(cop > 0.0)) {
    throw InvalidArgument("site '" + site.id + "': COP must be > 0");
  }
  return (1.0 + cop) / cop;
}

}  // namespace

double cpu_power(const CloudSite& site, GHz f) {
  if (!(f > 0.0)) {
    throw InvalidArgument("cpu_power: frequency must be > 0");
  }
  return site.beta + site.alpha * f * f * f;
}

Seconds exec_time(Seconds base_runtime, double gamma, GHz f, GHz f_max) {
  if (!(f > 0.0) || f > f_max) {
    throw InvalidArgument("exec_time: frequency must lie in (0, f_max]");
  }
  return base_runtime * (gamma * (f_max / f - 1.0) + 1.0);
}

Joules cpu_energy(const CloudSite& site, const Job& job, GHz f) {
  const Seconds t = exec_time(job.base_runtime, job.gamma, f, site.f_max);
  return cpu_power(site, f) * static_cast<double>(job.n_cpus) * t;
}

Joules total_energy(const CloudSite& site, Joules cpu_energy) {
  const double cop = site.cop_value();
  if (!(cop > 0.0)) {
    throw InvalidArgument("site '" + site.id + "': COP must be > 0");
  }
  return (1.0 + 1.0 / cop) * cpu_energy;
}

Dollars energy_cost(const CloudSite& site, Joules total_energy) {
  return total_energy / kJoulesPerKWh * site.energy_price;
}

double carbon_emission(const CloudSite& site, Joules total_energy) {
  return total_energy / kJoulesPerKWh * site.carbon_rate;
}

Dollars profit(const CloudSite& site, const Job& job, Dollars energy_cost) {
  return job.base_runtime * static_cast<double>(job.n_cpus) * site.exec_price - energy_cost;
}

EnergyOutcome evaluate_placement(const CloudSite& site, const Job& job, GHz f) {
  EnergyOutcome out;
  out.cpu_energy_j = cpu_energy(site, job, f);
  out.total_energy_j = total_energy(site, out.cpu_energy_j);
  out.energy_cost = energy_cost(site, out.total_energy_j);
  out.carbon_kg = carbon_emission(site, out.total_energy_j);
  out.profit = profit(site, job, out.energy_cost);
  return out;
}

double unit_energy(const CloudSite& site, double gamma, GHz f) {
  return (site.beta + site.alpha * f * f * f) * (gamma * (site.f_max / f - 1.0) + 1.0);
}

GHz optimal_frequency(const CloudSite& site, double gamma) {
  if (!(site.alpha > 0.0)) {
    throw InvalidArgument("optimal_frequency: alpha must be > 0");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw InvalidArgument("optimal_frequency: gamma must lie in [0, 1]");
  }
  if (gamma == 1.0) {
    return std::cbrt(site.beta / (2.0 * site.alpha));
  }
  if (gamma == 0.0) {
    return site.f_min;
  }

  // The slope is negative near zero iff beta > 0, and multiplying it by f^2
  // gives 3a(1-g) f^4 + 2 a g fmax f^3 - g fmax b, increasing on f > 0.
  GHz lo = site.f_max * 1e-9;
  if (!(unit_energy_slope(site, gamma, lo) < 0.0)) {
    throw std::runtime_error("optimal_frequency: energy of site '" + site.id +
                             "' has no interior minimum to bracket");
  }
  GHz hi = site.f_max;
  for (int i = 0; unit_energy_slope(site, gamma, hi) <= 0.0; ++i) {
    if (i == 200) {
      throw std::runtime_error("optimal_frequency: failed to bracket minimum for site '" +
                               site.id + "'");
    }
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-12) {
    const GHz mid = 0.5 * (lo + hi);
    if (unit_energy_slope(site, gamma, mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

GHz clamp_frequency(const CloudSite& site, GHz f) {
  return std::min(std::max(f, site.f_min), site.f_max);
}

FrequencyLadder frequency_ladder(const CloudSite& site) {
  FrequencyLadder ladder;
  const double step = (site.f_max - site.f_min) / static_cast<double>(FrequencyLadder::kLevels - 1);
  for (std::size_t i = 0; i < FrequencyLadder::kLevels; ++i) {
    ladder.levels[i] = site.f_min + step * static_cast<double>(i);
  }
  ladder.levels.back() = site.f_max;
  return ladder;
}

LadderLevel nearest_level(const FrequencyLadder& ladder, GHz f) {
  LadderLevel best{0, ladder.levels[0]};
  double best_distance = std::abs(ladder.levels[0] - f);
  for (std::size_t i = 1; i < ladder.levels.size(); ++i) {
    const double d = std::abs(ladder.levels[i] - f);
    // Ladder is ascending, so `<=` resolves exact ties toward the higher level.
    if (d <= best_distance + 1e-12 * std::max(1.0, std::abs(f))) {
      best = {i, ladder.levels[i]};
      best_distance = std::min(best_distance, d);
    }
  }
  return best;
}

double carbon_efficiency_key(const CloudSite& site) {
  return site.carbon_rate * (site.beta / site.f_max + site.alpha * site.f_max * site.f_max) *
         cooling_factor(site);
}

double cost_efficiency_key(const CloudSite& site) {
  return site.energy_price * (site.beta / site.f_max + site.alpha * site.f_max * site.f_max) *
         cooling_factor(site);
}

}  // namespace ecosched::energy
