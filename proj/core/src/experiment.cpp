#include "ecosched/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ecosched/bounds.hpp"
#include "ecosched/catalog.hpp"

namespace ecosched::experiment {

namespace {

constexpr std::array<std::string_view, 18> kColumns = {
    "policy",          "dvs_mode",          "hu_percent",           "arrival_factor",
    "total_carbon_kg", "avg_carbon_per_workload", "total_profit",   "total_energy_cost",
    "total_energy_kwh", "workload_cpu_seconds", "jobs_accepted",    "jobs_rejected",
    "lb_avg_carbon",   "ub_avg_profit",     "seed",                 "scenario",
    "jobs_hash",       "sites_hash"};

class Fnv1a {
 public:
  void add(const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= bytes[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void add_value(const T& value) {
    add(&value, sizeof(value));
  }
  void add_string(std::string_view s) {
    add_value(s.size());
    add(s.data(), s.size());
  }
  [[nodiscard]] std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, state_);
    return buf;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string fmt6(const std::optional<double>& v) { return v ? fmt6(*v) : std::string(); }

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("metrics CSV line " + std::to_string(line) + ": bad number '" + s +
                             "'");
  }
}

std::uint64_t parse_u64(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("metrics CSV line " + std::to_string(line) + ": bad integer '" + s +
                             "'");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct SweepPoint {
  std::string scenario;
  double hu_percent;
  double arrival_factor;
  std::vector<Job> jobs;
  std::vector<CloudSite> sites;
};

std::vector<workload::TraceRecord> load_trace(const ExperimentConfig& config) {
  std::vector<workload::TraceRecord> records =
      config.trace.empty() ? workload::load_swf_file(*config.trace_path) : config.trace;
  if (records.size() > config.max_jobs) records.resize(config.max_jobs);
  return records;
}

std::vector<Job> jobs_for(std::span<const workload::TraceRecord> records, double hu_percent,
                          double arrival_factor, const ExperimentConfig& config) {
  const auto scaled = workload::scale_arrivals(records, arrival_factor);
  auto jobs = workload::build_jobs(scaled, hu_percent, config.deadline_params, *config.seed);
  std::stable_sort(jobs.begin(), jobs.end(),
                   [](const Job& a, const Job& b) { return a.submit_time < b.submit_time; });
  return jobs;
}

std::vector<MetricsRow> run_point(const SweepPoint& point, const ExperimentConfig& config) {
  const std::string jobs_hash = hash_jobs(point.jobs);
  const std::string sites_hash = hash_sites(point.sites);

  std::optional<double> lb;
  std::optional<double> ub;
  if (config.include_bounds) {
    lb = bounds::lower_bound_carbon(point.jobs, point.sites).avg_carbon();
    ub = bounds::upper_bound_profit(point.jobs, point.sites).avg_profit();
  }

  SimulationOptions options;
  options.cycle_interval = config.cycle_interval;
  options.retry_rejected = config.retry_rejected;

  std::vector<MetricsRow> rows;
  for (MappingPolicy mapping : config.policies) {
    for (DvsMode dvs : config.dvs_modes) {
      const PolicyId policy{mapping, dvs};
      const SimulationReport sim = simulate(point.jobs, point.sites, policy, options);
      if (config.schedule_dump_dir) {
        std::filesystem::create_directories(*config.schedule_dump_dir);
        std::string name = "schedule_" + point.scenario + "_" + std::string(to_string(mapping)) +
                           "_" + std::string(to_string(dvs)) + "_hu" + fmt6(point.hu_percent) +
                           "_af" + fmt6(point.arrival_factor) + ".csv";
        std::replace(name.begin(), name.end(), ':', '-');
        const auto path = *config.schedule_dump_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
        write_reservations_csv(sim.placements, out);
      }
      MetricsRow row;
      row.policy = std::string(to_string(mapping));
      row.dvs_mode = std::string(to_string(dvs));
      row.hu_percent = point.hu_percent;
      row.arrival_factor = point.arrival_factor;
      row.total_carbon_kg = sim.total_carbon_kg;
      row.avg_carbon_per_workload = sim.avg_carbon();
      row.total_profit = sim.total_profit;
      row.total_energy_cost = sim.total_energy_cost;
      row.total_energy_kwh = sim.total_energy_j / kJoulesPerKWh;
      row.workload_cpu_seconds = sim.workload_cpu_seconds;
      row.jobs_accepted = sim.jobs_accepted;
      row.jobs_rejected = sim.jobs_rejected;
      row.lb_avg_carbon = lb;
      row.ub_avg_profit = ub;
      row.seed = *config.seed;
      row.scenario = point.scenario;
      row.jobs_hash = jobs_hash;
      row.sites_hash = sites_hash;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

MetricsReport run_points(const std::vector<SweepPoint>& points, const ExperimentConfig& config) {
  std::vector<std::vector<MetricsRow>> results(points.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(points.size())));

  if (workers == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) results[i] = run_point(points[i], config);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
          try {
            results[i] = run_point(points[i], config);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  MetricsReport report;
  for (auto& rows : results) {
    std::move(rows.begin(), rows.end(), std::back_inserter(report.rows));
  }
  return report;
}

}  // namespace

double Variation::mean() const {
  switch (factor) {
    case Factor::CarbonRate:
      return 0.2;
    case Factor::EnergyPrice:
      return 0.1;
    case Factor::Efficiency:
      return 0.4;
  }
  return 0.0;
}

double Variation::stddev() const {
  static constexpr double table[3][3] = {
      {0.05, 0.2, 0.4},    // carbon rate
      {0.01, 0.02, 0.05},  // energy price
      {0.05, 0.12, 0.2},   // efficiency
  };
  return table[static_cast<int>(factor)][static_cast<int>(spread)];
}

std::string Variation::label() const {
  static constexpr std::string_view factors[] = {"carbon", "price", "efficiency"};
  static constexpr std::string_view spreads[] = {"low", "mid", "high"};
  return std::string(factors[static_cast<int>(factor)]) + ":" +
         std::string(spreads[static_cast<int>(spread)]);
}

Variation parse_variation(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InvalidArgument("variation '" + std::string(text) + "' must look like FACTOR:CLASS");
  }
  const auto factor = text.substr(0, colon);
  const auto spread = text.substr(colon + 1);
  Variation v;
  if (factor == "carbon") {
    v.factor = Variation::Factor::CarbonRate;
  } else if (factor == "price") {
    v.factor = Variation::Factor::EnergyPrice;
  } else if (factor == "efficiency") {
    v.factor = Variation::Factor::Efficiency;
  } else {
    throw InvalidArgument("unknown variation factor '" + std::string(factor) +
                          "' (expected carbon, price or efficiency)");
  }
  if (spread == "low") {
    v.spread = Variation::Spread::Low;
  } else if (spread == "mid") {
    v.spread = Variation::Spread::Mid;
  } else if (spread == "high") {
    v.spread = Variation::Spread::High;
  } else {
    throw InvalidArgument("unknown variation class '" + std::string(spread) +
                          "' (expected low, mid or high)");
  }
  return v;
}

double cop_from_efficiency(double efficiency) {
  if (!(efficiency > 0.0 && efficiency < 1.0)) {
    throw InvalidArgument("efficiency must lie in (0, 1)");
  }
  return efficiency / (1.0 - efficiency);
}

void ExperimentConfig::validate() const {
  if (!seed) throw InvalidArgument("a seed is required");
  if (trace.empty() && !trace_path) throw InvalidArgument("a trace is required");
  if (trace.empty() && !std::filesystem::exists(*trace_path)) {
    throw InvalidArgument("trace '" + trace_path->string() + "' does not exist");
  }
  if (max_jobs == 0) throw InvalidArgument("max_jobs must be >= 1");
  if (hu_percents.empty()) throw InvalidArgument("hu_percent list is empty");
  for (double h : hu_percents) {
    if (!(h >= 0.0 && h <= 100.0)) throw InvalidArgument("hu_percent must lie in [0, 100]");
  }
  if (arrival_factors.empty()) throw InvalidArgument("arrival factor list is empty");
  for (double a : arrival_factors) {
    if (!(a > 0.0)) throw InvalidArgument("arrival factors must be > 0");
  }
  if (policies.empty()) throw InvalidArgument("policy list is empty");
  if (dvs_modes.empty()) throw InvalidArgument("DVS mode list is empty");
  if (!(cycle_interval > 0.0)) throw InvalidArgument("cycle interval must be > 0");
  if (sites.empty()) throw InvalidArgument("site list is empty");
  for (const auto& s : sites) ecosched::validate(s);
  deadline_params.validate();
}

std::span<const std::string_view> csv_columns() { return kColumns; }

std::vector<CloudSite> sample_cops(std::span<const CloudSite> sites, std::uint64_t seed) {
  const workload::RngStream stream(seed, kCopStream);
  std::vector<CloudSite> out(sites.begin(), sites.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].cop) continue;
    auto gen = stream.for_index(i);
    std::uniform_real_distribution<double> cop(kCopLow, kCopHigh);
    out[i] = out[i].with_cop(cop(gen));
  }
  return out;
}

std::vector<CloudSite> vary_sites(std::span<const CloudSite> sites, const Variation& variation,
                                  std::uint64_t seed) {
  const workload::RngStream stream(seed, kVariationStream);
  std::vector<CloudSite> out(sites.begin(), sites.end());
  const double sd = variation.stddev();
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto gen = stream.for_index(i);
    std::normal_distribution<double> dist(variation.mean(), sd);
    auto draw = [&](auto accept) {
      double v = dist(gen);
      while (!accept(v)) v = dist(gen);
      return v;
    };
    switch (variation.factor) {
      case Variation::Factor::CarbonRate:
        out[i].carbon_rate = sd == 0.0 ? variation.mean() : draw([](double v) { return v > 0; });
        break;
      case Variation::Factor::EnergyPrice:
        out[i].energy_price = sd == 0.0 ? variation.mean() : draw([](double v) { return v > 0; });
        break;
      case Variation::Factor::Efficiency: {
        const double eff =
            sd == 0.0 ? variation.mean() : draw([](double v) { return v > 0 && v < 1; });
        out[i].cop = cop_from_efficiency(eff);
        break;
      }
    }
    ecosched::validate(out[i]);
  }
  return out;
}

std::string hash_jobs(std::span<const Job> jobs) {
  Fnv1a h;
  h.add_value(jobs.size());
  for (const auto& j : jobs) {
    h.add_value(j.id);
    h.add_value(j.submit_time);
    h.add_value(j.n_cpus);
    h.add_value(j.base_runtime);
    h.add_value(j.deadline);
    h.add_value(j.gamma);
    h.add_value(static_cast<std::uint8_t>(j.urgency));
  }
  return h.hex();
}

std::string hash_sites(std::span<const CloudSite> sites) {
  Fnv1a h;
  h.add_value(sites.size());
  for (const auto& s : sites) {
    h.add_string(s.id);
    for (double v : {s.carbon_rate, s.energy_price, s.cop.value_or(0.0), s.beta, s.alpha, s.f_max,
                     s.f_min, s.exec_price}) {
      h.add_value(v);
    }
    h.add_value(s.cpu_count);
  }
  return h.hex();
}

std::vector<Job> sweep_jobs(const ExperimentConfig& config, double hu_percent,
                            double arrival_factor) {
  config.validate();
  return jobs_for(load_trace(config), hu_percent, arrival_factor, config);
}

MetricsReport run(const ExperimentConfig& config) {
  config.validate();
  if (config.variation) return variation_experiment(config, *config.variation);

  const auto records = load_trace(config);
  const auto sites = sample_cops(config.sites, *config.seed);

  std::vector<SweepPoint> points;
  for (double hu : config.hu_percents) {
    for (double factor : config.arrival_factors) {
      points.push_back({"base", hu, factor, jobs_for(records, hu, factor, config), sites});
    }
  }
  return run_points(points, config);
}

MetricsReport variation_experiment(const ExperimentConfig& config, const Variation& variation) {
  config.validate();
  const auto records = load_trace(config);
  const auto sites = sample_cops(vary_sites(config.sites, variation, *config.seed), *config.seed);
  std::vector<SweepPoint> points{
      {variation.label(), kVariationHuPercent, kVariationArrivalFactor,
       jobs_for(records, kVariationHuPercent, kVariationArrivalFactor, config), sites}};
  return run_points(points, config);
}

void write_csv(const MetricsReport& report, std::ostream& out) {
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    out << (i ? "," : "") << kColumns[i];
  }
  out << '\n';
  for (const auto& r : report.rows) {
    out << r.policy << ',' << r.dvs_mode << ',' << fmt6(r.hu_percent) << ','
        << fmt6(r.arrival_factor) << ',' << fmt6(r.total_carbon_kg) << ','
        << fmt6(r.avg_carbon_per_workload) << ',' << fmt6(r.total_profit) << ','
        << fmt6(r.total_energy_cost) << ',' << fmt6(r.total_energy_kwh) << ','
        << fmt6(r.workload_cpu_seconds) << ',' << r.jobs_accepted << ',' << r.jobs_rejected << ','
        << fmt6(r.lb_avg_carbon) << ',' << fmt6(r.ub_avg_profit) << ',' << r.seed << ','
        << r.scenario << ',' << r.jobs_hash << ',' << r.sites_hash << '\n';
  }
}

void emit_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  }
  write_csv(report, out);
  out.flush();
  if (!out) {
    throw std::runtime_error("failed writing '" + path.string() + "'");
  }
}

MetricsReport parse_csv(std::istream& in) {
  MetricsReport report;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error("metrics CSV: missing header");
  ++line_no;
  const auto header = split_csv(line);
  if (!std::equal(header.begin(), header.end(), kColumns.begin(), kColumns.end())) {
    throw std::runtime_error("metrics CSV: unexpected header");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != kColumns.size()) {
      throw std::runtime_error("metrics CSV line " + std::to_string(line_no) + ": expected " +
                               std::to_string(kColumns.size()) + " fields");
    }
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return parse_double(s, line_no);
    };
    MetricsRow r;
    r.policy = f[0];
    r.dvs_mode = f[1];
    r.hu_percent = parse_double(f[2], line_no);
    r.arrival_factor = parse_double(f[3], line_no);
    r.total_carbon_kg = parse_double(f[4], line_no);
    r.avg_carbon_per_workload = opt(f[5]);
    r.total_profit = parse_double(f[6], line_no);
    r.total_energy_cost = parse_double(f[7], line_no);
    r.total_energy_kwh = parse_double(f[8], line_no);
    r.workload_cpu_seconds = parse_double(f[9], line_no);
    r.jobs_accepted = parse_u64(f[10], line_no);
    r.jobs_rejected = parse_u64(f[11], line_no);
    r.lb_avg_carbon = opt(f[12]);
    r.ub_avg_profit = opt(f[13]);
    r.seed = parse_u64(f[14], line_no);
    r.scenario = f[15];
    r.jobs_hash = f[16];
    r.sites_hash = f[17];
    report.rows.push_back(std::move(r));
  }
  return report;
}

std::vector<std::filesystem::path> write_plot_data(const MetricsReport& report,
                                                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  struct Metric {
    std::string_view name;
    std::optional<double> (*value)(const MetricsRow&);
  };
  static constexpr Metric metrics[] = {
      {"total_carbon_kg", [](const MetricsRow& r) -> std::optional<double> {
         return r.total_carbon_kg;
       }},
      {"total_profit", [](const MetricsRow& r) -> std::optional<double> { return r.total_profit; }},
      {"total_energy_cost",
       [](const MetricsRow& r) -> std::optional<double> { return r.total_energy_cost; }},
      {"workload_cpu_seconds",
       [](const MetricsRow& r) -> std::optional<double> { return r.workload_cpu_seconds; }},
      {"avg_carbon_per_workload",
       [](const MetricsRow& r) -> std::optional<double> { return r.avg_carbon_per_workload; }},
      {"avg_profit_per_workload", [](const MetricsRow& r) -> std::optional<double> {
         if (!(r.workload_cpu_seconds > 0.0)) return std::nullopt;
         return r.total_profit / r.workload_cpu_seconds;
       }},
  };

  // Table key: file stem -> (x label -> (series -> value)), with x/series in first-seen order.
  struct Table {
    std::string x_name;
    std::vector<std::string> xs;
    std::vector<std::string> series;
    std::map<std::pair<std::string, std::string>, std::string> cells;
  };
  std::map<std::string, Table> tables;
  std::vector<std::string> table_order;

  auto put = [&](const std::string& stem, const std::string& x_name, const std::string& x,
                 const std::string& series, const std::optional<double>& v) {
    auto [it, inserted] = tables.try_emplace(stem);
    if (inserted) {
      table_order.push_back(stem);
      it->second.x_name = x_name;
    }
    Table& t = it->second;
    if (std::find(t.xs.begin(), t.xs.end(), x) == t.xs.end()) t.xs.push_back(x);
    if (std::find(t.series.begin(), t.series.end(), series) == t.series.end()) {
      t.series.push_back(series);
    }
    t.cells[{x, series}] = fmt6(v);
  };

  for (const auto& r : report.rows) {
    const std::string series = r.policy + "/" + r.dvs_mode;
    for (const auto& m : metrics) {
      const auto v = m.value(r);
      std::vector<std::tuple<std::string, std::string, std::string>> views;
      if (r.scenario == "base") {
        views.emplace_back(std::string(m.name) + "_vs_urgency_af" + fmt6(r.arrival_factor),
                           "hu_percent", fmt6(r.hu_percent));
        views.emplace_back(std::string(m.name) + "_vs_arrival_hu" + fmt6(r.hu_percent),
                           "arrival_factor", fmt6(r.arrival_factor));
      } else {
        views.emplace_back(std::string(m.name) + "_vs_variation", "scenario", r.scenario);
      }
      for (const auto& [stem, x_name, x] : views) {
        put(stem, x_name, x, series, v);
        if (m.name == "avg_carbon_per_workload" && r.lb_avg_carbon) {
          put(stem, x_name, x, "lower-bound", r.lb_avg_carbon);
        }
        if (m.name == "avg_profit_per_workload" && r.ub_avg_profit) {
          put(stem, x_name, x, "upper-bound", r.ub_avg_profit);
        }
      }
    }
  }

  std::vector<std::filesystem::path> written;
  for (const auto& stem : table_order) {
    const Table& t = tables.at(stem);
    const auto path = dir / (stem + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << t.x_name;
    for (const auto& s : t.series) out << ',' << s;
    out << '\n';
    for (const auto& x : t.xs) {
      out << x;
      for (const auto& s : t.series) {
        auto it = t.cells.find({x, s});
        out << ',' << (it == t.cells.end() ? std::string() : it->second);
      }
      out << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace ecosched::experiment
