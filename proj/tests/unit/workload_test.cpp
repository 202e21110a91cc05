#include <gtest/gtest.h>
#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ecosched/workload.hpp"

namespace {

using namespace ecosched;
namespace wl = ecosched::workload;

std::string swf_line(long id, long submit, long runtime, long procs) {
  std::ostringstream s;
  s << id << ' ' << submit << " 0 " << runtime << ' ' << procs
    << " -1 -1 -1 -1 -1 1 1 1 -1 1 -1 -1 -1";
  return s.str();
}

TEST(ParseSwf, ExtractsFields) {
  std::istringstream in(swf_line(1, 0, 3600, 64) + "\n");
  const auto r = wl::parse_swf(in);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], (wl::TraceRecord{1, 0.0, 3600.0, 64}));
}

TEST(ParseSwf, SkipsCommentsBlankAndUnknownRuntime) {
  std::istringstream in("; UnixStartTime: 1000\n;\n\n" + swf_line(1, 0, -1, 8) + "\n" +
                        swf_line(2, 5, 100, 0) + "\n" + swf_line(3, 7, 50, 2) + "\n");
  const auto r = wl::parse_swf(in);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].job_id, 3);
}

TEST(ParseSwf, EmptyTrace) {
  std::istringstream in("");
  EXPECT_TRUE(wl::parse_swf(in).empty());
}

TEST(ParseSwf, MalformedLineReportsLineNumber) {
  std::istringstream in("; header\n" + swf_line(1, 0, 10, 1) + "\n1 2 3\n");
  try {
    (void)wl::parse_swf(in);
    FAIL();
  } catch (const wl::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream bad(swf_line(1, 0, 10, 1).replace(0, 1, "x") + "\n");
  EXPECT_THROW((void)wl::parse_swf(bad), wl::ParseError);
}

TEST(ParseSwf, PreservesOrderAndRoundTrips) {
  const std::vector<wl::TraceRecord> recs{{5, 10, 20, 4}, {3, 2, 30, 1}, {9, 40, 1, 128}};
  std::stringstream buf;
  wl::write_swf(recs, buf);
  EXPECT_EQ(wl::parse_swf(buf), recs);
}

TEST(LoadSwf, PlainAndGzipAgree) {
  const auto dir = std::filesystem::temp_directory_path() / "ecosched_wl_test";
  std::filesystem::create_directories(dir);
  const std::vector<wl::TraceRecord> recs{{1, 0, 10, 2}, {2, 3, 40, 8}};
  std::ostringstream text;
  wl::write_swf(recs, text);
  {
    std::ofstream out(dir / "t.swf");
    out << text.str();
  }
  gzFile gz = gzopen((dir / "t.swf.gz").c_str(), "wb");
  ASSERT_NE(gz, nullptr);
  gzwrite(gz, text.str().data(), static_cast<unsigned>(text.str().size()));
  gzclose(gz);
  EXPECT_EQ(wl::load_swf_file(dir / "t.swf"), recs);
  EXPECT_EQ(wl::load_swf_file(dir / "t.swf.gz"), recs);
  EXPECT_THROW((void)wl::load_swf_file(dir / "missing.swf"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(LoadSwf, ShippedSample) {
  const auto recs = wl::load_swf_file(ECOSCHED_SAMPLE_SWF);
  EXPECT_GE(recs.size(), 200u);
  for (const auto& r : recs) {
    EXPECT_GT(r.runtime, 0.0);
    EXPECT_GE(r.n_procs, 1);
    EXPECT_GE(r.submit_time, 0.0);
  }
}

TEST(ScaleArrivals, Examples) {
  const std::vector<wl::TraceRecord> one{{1, 10, 5, 1}};
  EXPECT_EQ(wl::scale_arrivals(one, 10)[0].submit_time, 1.0);
  EXPECT_EQ(wl::scale_arrivals(one, 1)[0], one[0]);
  const std::vector<wl::TraceRecord> three{{1, 0, 5, 1}, {2, 100, 5, 1}, {3, 10000, 5, 1}};
  const auto s = wl::scale_arrivals(three, 100);
  EXPECT_EQ(s[0].submit_time, 0.0);
  EXPECT_EQ(s[1].submit_time, 1.0);
  EXPECT_EQ(s[2].submit_time, 100.0);
  EXPECT_THROW((void)wl::scale_arrivals(one, 0.0), InvalidArgument);
  EXPECT_THROW((void)wl::scale_arrivals(one, -2.0), InvalidArgument);
}

TEST(ScaleArrivals, PreservesRatios) {
  const std::vector<wl::TraceRecord> recs{{1, 0, 5, 1}, {2, 30, 5, 1}, {3, 90, 5, 1}};
  const auto s = wl::scale_arrivals(recs, 7.0);
  EXPECT_NEAR((s[2].submit_time - s[1].submit_time) / (s[1].submit_time - s[0].submit_time),
              2.0, 1e-12);
}

std::vector<wl::TraceRecord> uniform_records(std::size_t n) {
  std::vector<wl::TraceRecord> r;
  for (std::size_t i = 0; i < n; ++i) {
    r.push_back({static_cast<std::int64_t>(i), static_cast<double>(i), 100.0, 1});
  }
  return r;
}

TEST(AssignUrgency, Extremes) {
  const auto recs = uniform_records(500);
  const wl::RngStream rng(1, wl::kUrgencyStream);
  for (const auto& u : wl::assign_urgency(recs, 0, rng)) EXPECT_EQ(u.urgency, Urgency::Low);
  for (const auto& u : wl::assign_urgency(recs, 100, rng)) EXPECT_EQ(u.urgency, Urgency::High);
  EXPECT_THROW((void)wl::assign_urgency(recs, -1, rng), InvalidArgument);
  EXPECT_THROW((void)wl::assign_urgency(recs, 100.5, rng), InvalidArgument);
}

TEST(AssignUrgency, FortyPercentConcentrates) {
  const auto recs = uniform_records(10000);
  const auto u = wl::assign_urgency(recs, 40, wl::RngStream(2024, wl::kUrgencyStream));
  const auto hu = std::count_if(u.begin(), u.end(),
                                [](const auto& x) { return x.urgency == Urgency::High; });
  EXPECT_NEAR(static_cast<double>(hu) / 10000.0, 0.40, 0.02);
}

TEST(AssignUrgency, Deterministic) {
  const auto recs = uniform_records(300);
  const auto a = wl::assign_urgency(recs, 40, wl::RngStream(9, wl::kUrgencyStream));
  const auto b = wl::assign_urgency(recs, 40, wl::RngStream(9, wl::kUrgencyStream));
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(a[i].urgency, b[i].urgency);
}

TEST(Deadline, FixedFactor) {
  const Job j = wl::make_job({7, 50.0, 100.0, 4}, Urgency::High, 4.0);
  EXPECT_EQ(j.deadline, 450.0);
  EXPECT_EQ(j.gamma, 1.0);
  EXPECT_EQ(j.n_cpus, 4);
  EXPECT_EQ(j.id, 7);
}

TEST(Deadline, FactorsNeverBelowOne) {
  wl::DeadlineParams p;
  p.hu_mean = 0.3;  // most raw draws fall under 1 and must be redrawn
  p.hu_variance = 0.5;
  wl::Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    EXPECT_GE(wl::draw_deadline_factor(Urgency::High, p, rng), 1.0);
  }
}

TEST(Deadline, LowUrgencyMean) {
  const wl::DeadlineParams p;
  wl::Rng rng(77);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) sum += wl::draw_deadline_factor(Urgency::Low, p, rng);
  EXPECT_NEAR(sum / 10000.0, 12.0, 0.3);
}

TEST(Deadline, HighUrgencyVarianceIsVariance) {
  const wl::DeadlineParams p;
  wl::Rng rng(78);
  std::vector<double> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(wl::draw_deadline_factor(Urgency::High, p, rng));
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  // Truncation at 1 trims the left tail; untruncated sd would be sqrt(2).
  EXPECT_NEAR(mean, 4.0, 0.15);
  EXPECT_GT(var, 1.4);
  EXPECT_LT(var, 2.1);
}

TEST(DeadlineParams, Validation) {
  EXPECT_NO_THROW(wl::DeadlineParams{}.validate());
  wl::DeadlineParams p;
  p.lu_variance = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.lu_mean = 10.0;  // breaks lu_mean = ratio * hu_mean
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(BuildJobs, DeterministicAndValid) {
  const auto recs = wl::synthetic_trace({}, 5);
  const auto a = wl::build_jobs(recs, 40, {}, 123);
  const auto b = wl::build_jobs(recs, 40, {}, 123);
  const auto c = wl::build_jobs(recs, 40, {}, 124);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& j : a) {
    EXPECT_GE(j.deadline, j.submit_time + j.base_runtime);
    EXPECT_NO_THROW(validate(j));
  }
  std::ostringstream x;
  std::ostringstream y;
  wl::write_jobs_csv(a, x);
  wl::write_jobs_csv(b, y);
  EXPECT_EQ(x.str(), y.str());
  EXPECT_EQ(x.str().substr(0, x.str().find('\n')), "job_id,submit,n_cpus,runtime,deadline,urgency");
}

TEST(BuildJobs, PrefixStable) {
  // Per-index streams: truncating the trace does not change earlier jobs.
  const auto recs = wl::synthetic_trace({}, 5);
  const auto full = wl::build_jobs(recs, 60, {}, 8);
  const auto part =
      wl::build_jobs(std::span<const wl::TraceRecord>(recs.data(), 50), 60, {}, 8);
  for (std::size_t i = 0; i < part.size(); ++i) EXPECT_EQ(part[i], full[i]);
}

TEST(SyntheticTrace, Shape) {
  wl::SyntheticTraceParams p;
  p.n_jobs = 400;
  const auto recs = wl::synthetic_trace(p, 1);
  ASSERT_EQ(recs.size(), 400u);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_GE(recs[i].runtime, p.min_runtime);
    EXPECT_LE(recs[i].runtime, p.max_runtime);
    EXPECT_GE(recs[i].n_procs, 1);
    EXPECT_LE(recs[i].n_procs, 128);
    EXPECT_EQ(recs[i].n_procs & (recs[i].n_procs - 1), 0);
    if (i > 0) EXPECT_GE(recs[i].submit_time, recs[i - 1].submit_time);
  }
  EXPECT_EQ(wl::synthetic_trace(p, 1), recs);
}

}  // namespace
