#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <thread>

#include "genaibench/error.hpp"
#include "genaibench/monitor.hpp"
#include "test_support.hpp"

using namespace genaibench;
using genaibench::testing::fixture;
using genaibench::testing::read_file;

TEST(ParseProcStat, NoIdleDeltaIsFullLoad) {
  EXPECT_DOUBLE_EQ(parse_proc_stat("cpu 100 0 100 800", "cpu 200 0 200 800"), 100.0);
}

TEST(ParseProcStat, AllIdleIsZero) {
  EXPECT_DOUBLE_EQ(parse_proc_stat("cpu 100 0 100 800", "cpu 100 0 100 900"), 0.0);
}

TEST(ParseProcStat, FixturePair) {
  // Hand computation over the aggregate line:
  //   deltas user 100, nice 20, system 100, idle 900, iowait 20, irq 0, softirq 20
  //   total 1160, idle (idle + iowait) 920 -> 100 * 240 / 1160
  const double expected = 100.0 * 240.0 / 1160.0;
  const double got = parse_proc_stat(read_file(fixture("proc_stat_before.txt")), read_file(fixture("proc_stat_after.txt")));
  EXPECT_NEAR(got, expected, 1e-9);
}

TEST(ParseProcStat, Malformed) {
  EXPECT_THROW(parse_proc_stat("intr 1 2", "intr 3 4"), ParseError);
  EXPECT_THROW(parse_proc_stat("cpu 1 x 3 4", "cpu 2 2 3 4"), ParseError);
  EXPECT_THROW(parse_proc_stat("cpu 1 2 3 4", "cpu 1 2 3 4"), ParseError);
}

TEST(ParseDcgmLine, FixtureValues) {
  std::istringstream in(read_file(fixture("dcgm_dmon.txt")));
  std::string line;
  std::vector<MetricSample> all;
  DcgmLineParser parser;
  while (std::getline(in, line)) {
    auto got = parser.feed(line, 1.5);
    all.insert(all.end(), got.begin(), got.end());
  }
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[0], (MetricSample{1.5, MetricKind::smact, 95.0, "dcgm"}));
  EXPECT_EQ(all[1], (MetricSample{1.5, MetricKind::smocc, 40.0, "dcgm"}));
  EXPECT_EQ(all[2].kind, MetricKind::gpu_mem_bw);
  EXPECT_NEAR(all[2].value, 12.3, 1e-9);
}

TEST(ParseDcgmLine, HeaderYieldsNothing) {
  EXPECT_TRUE(parse_dcgm_line("#Entity   SMACT        SMOCC        DRAMA", 0).empty());
  EXPECT_TRUE(parse_dcgm_line("ID", 0).empty());
}

TEST(ParseDcgmLine, MalformedNumber) {
  EXPECT_THROW(parse_dcgm_line("GPU 0     0.9x0        0.400        0.123", 0), ParseError);
  DcgmLineParser parser;
  EXPECT_TRUE(parser.feed("GPU 0  oops  0.4  0.1", 0).empty());
  EXPECT_EQ(parser.skipped(), 1u);
}

TEST(ParseDcgmLine, NotAvailableFieldsAreSkipped) {
  const auto got = parse_dcgm_line("GPU 0  0.500  N/A  0.100", 0);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].kind, MetricKind::smact);
  EXPECT_EQ(got[1].kind, MetricKind::gpu_mem_bw);
}

TEST(OtherParsers, PcmMemory) {
  EXPECT_NEAR(*parse_pcm_memory_line("|--   System Memory Throughput(MB/s):     12345.67   --|"), 12.34567, 1e-12);
  EXPECT_FALSE(parse_pcm_memory_line("|-- Socket 0 --|"));
}

TEST(OtherParsers, NvidiaSmi) {
  const auto got = parse_nvsmi_line("85.31, 2048", 2.0);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0], (MetricSample{2.0, MetricKind::power_gpu, 85.31, "nvml"}));
  EXPECT_EQ(got[1], (MetricSample{2.0, MetricKind::gpu_mem_used, 2.0, "nvml"}));
  EXPECT_EQ(parse_nvsmi_line("[N/A], 1024", 0).size(), 1u);
}

TEST(OtherParsers, RaplWrap) {
  EXPECT_DOUBLE_EQ(rapl_power_watts(1'000'000, 3'000'000, 0.5, 10'000'000), 4.0);
  // 9e6 -> wraps at 1e7 -> 1e6: 2e6 uJ over 1 s
  EXPECT_DOUBLE_EQ(rapl_power_watts(9'000'000, 1'000'000, 1.0, 10'000'000), 2.0);
}

TEST(Summarize, SmallArray) {
  std::vector<MetricSample> s;
  for (double v : {10.0, 20.0, 30.0}) s.push_back({0, MetricKind::cpu_util, v, "x"});
  const auto r = summarize(s, MetricKind::cpu_util);
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->mean, 20.0);
  EXPECT_DOUBLE_EQ(r->max, 30.0);
  EXPECT_DOUBLE_EQ(r->p50, 20.0);
}

TEST(Summarize, EmptyIsExplicit) {
  EXPECT_FALSE(summarize({}, MetricKind::smact));
  std::vector<MetricSample> s{{5.0, MetricKind::smact, 1, "x"}};
  EXPECT_FALSE(summarize(s, MetricKind::smact, TimeWindow{0, 1}));
  EXPECT_FALSE(summarize(s, MetricKind::smocc));
}

TEST(Summarize, MatchesSortOracle) {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> val(0, 100);
  for (int round = 0; round < 200; ++round) {
    const int n = std::uniform_int_distribution<int>(1, 300)(rng);
    std::vector<MetricSample> s;
    std::vector<double> raw;
    for (int i = 0; i < n; ++i) {
      s.push_back({i * 0.1, MetricKind::smocc, val(rng), "x"});
      raw.push_back(s.back().value);
    }
    std::sort(raw.begin(), raw.end());
    auto rank = [&](double p) {
      // smallest value with at least p% of samples at or below it
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (100.0 * static_cast<double>(i + 1) >= p * static_cast<double>(raw.size())) return raw[i];
      }
      return raw.back();
    };
    double sum = 0;
    for (double v : raw) sum += v;
    const auto r = summarize(s, MetricKind::smocc);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->count, raw.size());
    EXPECT_DOUBLE_EQ(r->mean, sum / n);
    EXPECT_EQ(r->p50, rank(50));
    EXPECT_EQ(r->p95, rank(95));
    EXPECT_EQ(r->max, raw.back());
  }
}

TEST(Monitor, ZeroCollectors) {
  RunClock clock;
  auto m = start_monitor({}, 0.01, clock);
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  const auto r = m->stop();
  EXPECT_TRUE(r.samples.empty());
  EXPECT_TRUE(r.gaps.empty());
}

TEST(Monitor, RejectsNonPositiveInterval) {
  RunClock clock;
  EXPECT_THROW(start_monitor({}, 0.0, clock), PreconditionError);
}

TEST(Monitor, ConstantStub) {
  RunClock clock;
  std::vector<std::unique_ptr<Collector>> cs;
  cs.push_back(std::make_unique<FunctionCollector>("stub", std::vector<MetricKind>{MetricKind::cpu_util},
                                                   [](double t) {
                                                     return std::vector<MetricSample>{
                                                         {t, MetricKind::cpu_util, 42.0, "stub"}};
                                                   }));
  auto m = start_monitor(std::move(cs), 0.1, clock);
  std::this_thread::sleep_until(clock.at(1.0));
  const auto r = m->stop();
  EXPECT_GE(r.samples.size(), 9u);
  EXPECT_LE(r.samples.size(), 11u);
  for (const auto& s : r.samples) EXPECT_EQ(s.value, 42.0);
  for (std::size_t i = 1; i < r.samples.size(); ++i) EXPECT_LE(r.samples[i - 1].t, r.samples[i].t);
  EXPECT_TRUE(m->stop().samples.empty());
}

TEST(Monitor, SlowCollectorLeavesGaps) {
  RunClock clock;
  std::vector<std::unique_ptr<Collector>> cs;
  cs.push_back(std::make_unique<FunctionCollector>("slow", std::vector<MetricKind>{MetricKind::cpu_util},
                                                   [](double t) {
                                                     std::this_thread::sleep_for(std::chrono::milliseconds(300));
                                                     return std::vector<MetricSample>{
                                                         {t, MetricKind::cpu_util, 1.0, "slow"}};
                                                   }));
  auto m = start_monitor(std::move(cs), 0.1, clock);
  std::this_thread::sleep_until(clock.at(1.0));
  const auto r = m->stop();
  const double span = clock.now();
  EXPECT_GE(static_cast<double>(r.gaps.size()), 2.0 * std::floor(span - 0.35));
  for (const auto& g : r.gaps) EXPECT_EQ(g.source, "slow");
}

TEST(Monitor, InitFailureDisablesOnlyThatCollector) {
  struct Broken : Collector {
    std::string id() const override { return "broken"; }
    std::vector<MetricKind> kinds() const override { return {MetricKind::power_cpu}; }
    void init() override { throw CollectorInitError("no counters"); }
    std::vector<MetricSample> poll(double) override { return {}; }
  };
  RunClock clock;
  std::vector<std::unique_ptr<Collector>> cs;
  cs.push_back(std::make_unique<Broken>());
  cs.push_back(std::make_unique<FunctionCollector>(
      "ok", std::vector<MetricKind>{MetricKind::cpu_util},
      [](double t) { return std::vector<MetricSample>{{t, MetricKind::cpu_util, 3.0, "ok"}}; }));
  auto m = start_monitor(std::move(cs), 0.02, clock);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const auto r = m->stop();
  ASSERT_EQ(r.notes.size(), 1u);
  EXPECT_NE(r.notes[0].find("broken"), std::string::npos);
  EXPECT_FALSE(r.samples.empty());
}

TEST(Monitor, OccupancyAboveActivityIsNoted) {
  RunClock clock;
  std::vector<std::unique_ptr<Collector>> cs;
  cs.push_back(std::make_unique<FunctionCollector>(
      "skewed", std::vector<MetricKind>{MetricKind::smact, MetricKind::smocc}, [](double t) {
        return std::vector<MetricSample>{{t, MetricKind::smact, 40, "skewed"}, {t, MetricKind::smocc, 60, "skewed"}};
      }));
  auto m = start_monitor(std::move(cs), 0.02, clock);
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  const auto r = m->stop();
  ASSERT_EQ(r.notes.size(), 1u);
  EXPECT_NE(r.notes[0].find("SMOCC"), std::string::npos);
}

TEST(Collectors, ProcStatFromFiles) {
  const auto dir = genaibench::testing::scratch_dir("procstat");
  std::filesystem::copy_file(fixture("proc_stat_before.txt"), dir / "stat");
  ProcStatCollector c(dir / "stat", fixture("meminfo.txt"));
  c.init();
  std::filesystem::copy_file(fixture("proc_stat_after.txt"), dir / "stat",
                             std::filesystem::copy_options::overwrite_existing);
  const auto s = c.poll(0.5);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0].value, 100.0 * 240.0 / 1160.0, 1e-9);
  EXPECT_DOUBLE_EQ(s[1].value, (16384000.0 - 8192000.0) / (1024.0 * 1024.0));
  EXPECT_THROW(ProcStatCollector(dir / "missing").init(), CollectorInitError);
}

TEST(Collectors, RaplFromPowercapTree) {
  const auto dir = genaibench::testing::scratch_dir("rapl");
  std::filesystem::create_directories(dir / "intel-rapl:0");
  std::filesystem::create_directories(dir / "intel-rapl:0:0");
  auto write = [](const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; };
  write(dir / "intel-rapl:0" / "energy_uj", "1000000\n");
  write(dir / "intel-rapl:0" / "max_energy_range_uj", "262143328850\n");
  RaplCollector c(dir);
  c.init();
  EXPECT_TRUE(c.poll(1.0).empty());  // first reading only primes the counter
  write(dir / "intel-rapl:0" / "energy_uj", "6000000\n");
  const auto s = c.poll(2.0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s[0].value, 5.0);
  EXPECT_THROW(RaplCollector(dir / "nothing").init(), CollectorInitError);
}

TEST(Collectors, MissingToolDisablesItself) {
  StreamingToolCollector c("ghost", {MetricKind::smact}, {"/nonexistent/tool-binary"},
                           [](const std::string&, double) { return std::vector<MetricSample>{}; });
  EXPECT_THROW(c.init(), CollectorInitError);
}

TEST(Collectors, StreamingToolParsesOutput) {
  StreamingToolCollector c("echo", {MetricKind::smact}, {"/bin/sh", "-c", "printf 'GPU 0 0.5 0.25 0.1\\n'; sleep 5"},
                           [](const std::string& line, double t) { return parse_dcgm_line(line, t); });
  c.init();
  std::vector<MetricSample> got;
  for (int i = 0; i < 100 && got.empty(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    got = c.poll(0.1 * i);
  }
  c.stop();
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got[0].value, 50.0);
  EXPECT_EQ(got[1].value, 25.0);
}
