#include "ecosched/workload.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>

namespace ecosched::workload {

namespace {

constexpr std::size_t kSwfFields = 18;

bool parse_number(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::string read_gz(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), "rb"), &gzclose);
  if (!file) {
    throw std::runtime_error("cannot open trace '" + path.string() + "'");
  }
  std::string data;
  std::array<char, 1 << 16> buf{};
  int n = 0;
  while ((n = gzread(file.get(), buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
    data.append(buf.data(), static_cast<std::size_t>(n));
  }
  if (n < 0) {
    int err = 0;
    const char* msg = gzerror(file.get(), &err);
    throw std::runtime_error("error reading trace '" + path.string() + "': " + msg);
  }
  return data;
}

}  // namespace

Rng RngStream::for_index(std::uint64_t index) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("SWF line " + std::to_string(line) + ": " + what), line_(line) {}

std::vector<TraceRecord> parse_swf(std::istream& in) {
  std::vector<TraceRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == ';') {
      continue;
    }

    std::istringstream fields(line);
    std::string token;
    std::array<double, kSwfFields> values{};
    std::size_t count = 0;
    while (fields >> token) {
      if (count == kSwfFields) {
        throw ParseError(line_no, "more than 18 fields");
      }
      if (!parse_number(token, values[count])) {
        throw ParseError(line_no, "non-numeric field '" + token + "'");
      }
      ++count;
    }
    if (count != kSwfFields) {
      throw ParseError(line_no, "expected 18 fields, found " + std::to_string(count));
    }

    const double runtime = values[3];
    const double procs = values[4];
    if (runtime <= 0.0 || procs <= 0.0) {
      continue;
    }
    TraceRecord r;
    r.job_id = static_cast<std::int64_t>(values[0]);
    r.submit_time = std::max(0.0, values[1]);
    r.runtime = runtime;
    r.n_procs = static_cast<int>(procs);
    records.push_back(r);
  }
  return records;
}

std::vector<TraceRecord> load_swf_file(const std::filesystem::path& path) {
  std::istringstream in(read_gz(path));
  return parse_swf(in);
}

void write_swf(std::span<const TraceRecord> records, std::ostream& out) {
  out << "; Version: 2.2\n; Note: generated by ecosched\n";
  for (const auto& r : records) {
    out << r.job_id << ' ' << r.submit_time << " -1 " << r.runtime << ' ' << r.n_procs;
    for (std::size_t i = 5; i < kSwfFields; ++i) out << " -1";
    out << '\n';
  }
}

std::vector<TraceRecord> scale_arrivals(std::span<const TraceRecord> records, double factor) {
  if (!(factor > 0.0)) {
    throw InvalidArgument("scale_arrivals: factor must be > 0");
  }
  std::vector<TraceRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    r.submit_time /= factor;
  }
  return out;
}

std::vector<UrgentRecord> assign_urgency(std::span<const TraceRecord> records, double hu_percent,
                                         const RngStream& rng) {
  if (!(hu_percent >= 0.0 && hu_percent <= 100.0)) {
    throw InvalidArgument("assign_urgency: hu_percent must lie in [0, 100]");
  }
  std::vector<UrgentRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    Rng gen = rng.for_index(i);
    std::bernoulli_distribution is_high(hu_percent / 100.0);
    out.push_back({records[i], is_high(gen) ? Urgency::High : Urgency::Low});
  }
  return out;
}

void DeadlineParams::validate() const {
  if (!(hu_mean > 0 && hu_variance > 0 && ratio_high_low > 0 && lu_mean > 0 && lu_variance > 0)) {
    throw InvalidArgument("deadline parameters must all be positive");
  }
  if (std::abs(lu_mean - ratio_high_low * hu_mean) > 1e-9 * lu_mean) {
    throw InvalidArgument("deadline parameters: lu_mean must equal ratio_high_low * hu_mean");
  }
}

double draw_deadline_factor(Urgency urgency, const DeadlineParams& params, Rng& rng) {
  const bool high = urgency == Urgency::High;
  std::normal_distribution<double> dist(high ? params.hu_mean : params.lu_mean,
                                        std::sqrt(high ? params.hu_variance : params.lu_variance));
  double factor = dist(rng);
  while (factor < 1.0) {
    factor = dist(rng);
  }
  return factor;
}

Job make_job(const TraceRecord& record, Urgency urgency, double factor) {
  Job job;
  job.id = record.job_id;
  job.submit_time = record.submit_time;
  job.n_cpus = record.n_procs;
  job.base_runtime = record.runtime;
  job.deadline = record.submit_time + factor * record.runtime;
  job.gamma = 1.0;
  job.urgency = urgency;
  return job;
}

Job synthesize_deadline(const TraceRecord& record, Urgency urgency, const DeadlineParams& params,
                        Rng& rng) {
  return make_job(record, urgency, draw_deadline_factor(urgency, params, rng));
}

std::vector<Job> build_jobs(std::span<const TraceRecord> records, double hu_percent,
                            const DeadlineParams& params, std::uint64_t seed) {
  params.validate();
  const auto urgent = assign_urgency(records, hu_percent, RngStream(seed, kUrgencyStream));
  const RngStream deadlines(seed, kDeadlineStream);
  std::vector<Job> jobs;
  jobs.reserve(urgent.size());
  for (std::size_t i = 0; i < urgent.size(); ++i) {
    Rng gen = deadlines.for_index(i);
    jobs.push_back(synthesize_deadline(urgent[i].record, urgent[i].urgency, params, gen));
  }
  return jobs;
}

void write_jobs_csv(std::span<const Job> jobs, std::ostream& out) {
  out << "job_id,submit,n_cpus,runtime,deadline,urgency\n";
  const auto old_precision = out.precision(17);
  for (const auto& j : jobs) {
    out << j.id << ',' << j.submit_time << ',' << j.n_cpus << ',' << j.base_runtime << ','
        << j.deadline << ',' << to_string(j.urgency) << '\n';
  }
  out.precision(old_precision);
}

std::vector<TraceRecord> synthetic_trace(const SyntheticTraceParams& params, std::uint64_t seed) {
  Rng gen(seed);
  std::exponential_distribution<double> gap(1.0 / params.mean_interarrival);
  std::lognormal_distribution<double> runtime(params.runtime_log_mean, params.runtime_log_sd);
  std::uniform_int_distribution<int> width_log2(0, params.max_procs_log2);

  std::vector<TraceRecord> records;
  records.reserve(params.n_jobs);
  double clock = 0.0;
  for (std::size_t i = 0; i < params.n_jobs; ++i) {
    TraceRecord r;
    r.job_id = static_cast<std::int64_t>(i + 1);
    r.submit_time = std::round(clock);
    r.runtime = std::round(std::clamp(runtime(gen), params.min_runtime, params.max_runtime));
    r.n_procs = 1 << width_log2(gen);
    records.push_back(r);
    clock += gap(gen);
  }
  return records;
}

}  // namespace ecosched::workload
