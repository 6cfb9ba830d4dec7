// Copyright 2026 The tierprof Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "report_fixtures.h"
#include "stream_fixtures.h"
#include "tierprof/error.h"
#include "tierprof/reporting.h"

namespace tierprof {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Set TIERPROF_UPDATE_GOLDENS=1 to rewrite the files after an intended change.
void expect_golden(const std::string& name, const std::string& actual) {
  const fs::path path = fs::path(TIERPROF_GOLDEN_DIR) / name;
  if (std::getenv("TIERPROF_UPDATE_GOLDENS") != nullptr) {
    std::ofstream(path, std::ios::binary) << actual;
  }
  ASSERT_TRUE(fs::exists(path)) << path;
  EXPECT_EQ(actual, read_file(path)) << name;
}

ReportSpec spec_for(ReportKind kind, std::optional<std::size_t> top = std::nullopt) {
  ReportSpec s;
  s.kind = kind;
  s.top_n = top;
  return s;
}

TEST(Golden, FunctionTable) {
  expect_golden("function_table.txt",
                render(testing::simulator_run_profile(), spec_for(ReportKind::kFunctionTable, 19)));
}

TEST(Golden, LineTable) {
  expect_golden("line_table.txt",
                render(testing::controller_sleep_profile(), spec_for(ReportKind::kLineTable)));
}

TEST(Golden, ThreadTable) {
  expect_golden("thread_table.txt",
                render(testing::concurrency_profile(), spec_for(ReportKind::kThreadTable)));
}

TEST(FunctionTable, HeaderCountsAllRowsNotJustShownOnes) {
  const std::string text =
      render(testing::simulator_run_profile(), spec_for(ReportKind::kFunctionTable, 3));
  EXPECT_EQ(text.rfind("541337 function calls (541319 primitive calls) in 77.621 seconds\n", 0), 0u);
  // header block + column line + 3 rows
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4 + 1 + 3);
}

TEST(FunctionTable, RecursiveCallsShowTotalOverPrimitive) {
  Profile p;
  p.functions = {testing::function_row("a.cc", 1, "walk", 5, 2, 0.5, 1.0)};
  const std::string text = render(p, spec_for(ReportKind::kFunctionTable));
  EXPECT_NE(text.find("      5/2    0.500    0.100    1.000    0.500 a.cc:1(walk)\n"),
            std::string::npos)
      << text;
  EXPECT_NE(text.find("5 function calls (2 primitive calls)"), std::string::npos);
}

TEST(FunctionTable, EmptyProfileRendersHeaderOnly) {
  const std::string text = render(Profile{}, spec_for(ReportKind::kFunctionTable));
  EXPECT_EQ(text,
            "0 function calls in 0.000 seconds\n\n"
            "Ordered by: cumulative time\n\n"
            "   ncalls  tottime  percall  cumtime  percall filename:lineno(function)\n");
  ReportSpec csv = spec_for(ReportKind::kFunctionTable);
  csv.format = ReportFormat::kCsv;
  EXPECT_EQ(parse_csv(render(Profile{}, csv)).size(), 1u);
}

TEST(FunctionTable, SortKeysOrderRows) {
  const Profile p = testing::simulator_run_profile();
  ReportSpec s = spec_for(ReportKind::kFunctionTable);
  for (std::string_view key : sort_keys(ReportKind::kFunctionTable)) {
    s.sort_key = std::string(key);
    const ReportDocument doc = build_document(p, s);
    ASSERT_EQ(doc.rows.size(), p.functions.size()) << key;
  }
  s.sort_key = "tottime";
  const ReportDocument doc = build_document(p, s);
  const std::size_t col = doc.column("tottime_ns");
  for (std::size_t i = 1; i < doc.rows.size(); ++i) {
    EXPECT_GE(std::get<std::int64_t>(doc.rows[i - 1][col]), std::get<std::int64_t>(doc.rows[i][col]));
  }
  EXPECT_EQ(std::get<std::string>(doc.rows[0][doc.column("symbol")]), "built-in method poll");
  EXPECT_EQ(std::get<std::string>(doc.meta_value("ordered_by")), "internal time");

  s.sort_key = "calls";  // alias of ncalls
  EXPECT_EQ(build_document(p, s).sort_key, "ncalls");
}

TEST(Reports, UnknownSortKeyIsRejected) {
  ReportSpec s = spec_for(ReportKind::kThreadTable);
  s.sort_key = "cumulative";
  try {
    build_document(testing::concurrency_profile(), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidSortKey);
  }
}

TEST(Reports, TopNLimitsRows) {
  const Profile p = testing::simulator_run_profile();
  for (std::size_t n : {0u, 1u, 5u, 100u}) {
    const ReportDocument doc = build_document(p, spec_for(ReportKind::kFunctionTable, n));
    EXPECT_EQ(doc.rows.size(), std::min(n, p.functions.size()));
  }
}

TEST(Reports, RenderingIsDeterministic) {
  const Profile p = testing::simulator_run_profile();
  for (ReportFormat f : {ReportFormat::kText, ReportFormat::kCsv, ReportFormat::kStructured}) {
    ReportSpec s = spec_for(ReportKind::kFunctionTable);
    s.format = f;
    EXPECT_EQ(render(p, s), render(p, s));
  }
}

// Every csv field reads back to the exact cell it came from.
void expect_csv_lossless(const ReportDocument& doc) {
  const auto rows = parse_csv(format_document(doc, ReportFormat::kCsv));
  ASSERT_EQ(rows.size(), doc.rows.size() + 1);
  EXPECT_EQ(rows[0], doc.columns);
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    ASSERT_EQ(rows[r + 1].size(), doc.columns.size());
    for (std::size_t c = 0; c < doc.columns.size(); ++c) {
      const std::string& field = rows[r + 1][c];
      const Cell& cell = doc.rows[r][c];
      if (const auto* i = std::get_if<std::int64_t>(&cell)) {
        EXPECT_EQ(std::stoll(field), *i);
      } else if (const auto* d = std::get_if<double>(&cell)) {
        EXPECT_EQ(std::stod(field), *d);
      } else {
        EXPECT_EQ(field, std::get<std::string>(cell));
      }
    }
  }
}

TEST(Csv, FunctionTableRoundTripRebuildsEveryStat) {
  Profile p = testing::simulator_run_profile();
  p.functions.push_back(testing::function_row("we,ird \"file\".cc", 7, " spaced, \"quoted\"\nname ",
                                              3, 1, 0.1, 0.3));
  const ReportDocument doc = build_document(p, spec_for(ReportKind::kFunctionTable));
  expect_csv_lossless(doc);

  const auto rows = parse_csv(format_document(doc, ReportFormat::kCsv));
  std::map<CodeSite, FunctionStats> back;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    auto col = [&](std::string_view name) { return rows[r][doc.column(name)]; };
    FunctionStats f;
    f.site = {col("file"), std::stoi(col("line")), col("symbol"), *parse_site_kind(col("kind"))};
    if (!col("tag").empty()) f.tag = parse_time_category(col("tag"));
    f.ncalls_total = std::stoull(col("ncalls_total"));
    f.ncalls_primitive = std::stoull(col("ncalls_primitive"));
    f.tottime_ns = std::stoll(col("tottime_ns"));
    f.cumtime_ns = std::stoll(col("cumtime_ns"));
    f.tottime_cpu_ns = std::stoll(col("tottime_cpu_ns"));
    f.cumtime_cpu_ns = std::stoll(col("cumtime_cpu_ns"));
    back[f.site] = f;
  }
  ASSERT_EQ(back.size(), p.functions.size());
  for (const FunctionStats& f : p.functions) {
    const FunctionStats& b = back.at(f.site);
    EXPECT_EQ(b.site.kind, f.site.kind);
    EXPECT_EQ(b.tag, f.tag);
    EXPECT_EQ(b.ncalls_total, f.ncalls_total);
    EXPECT_EQ(b.ncalls_primitive, f.ncalls_primitive);
    EXPECT_EQ(b.tottime_ns, f.tottime_ns);
    EXPECT_EQ(b.cumtime_ns, f.cumtime_ns);
    EXPECT_EQ(b.tottime_cpu_ns, f.tottime_cpu_ns);
    EXPECT_EQ(b.cumtime_cpu_ns, f.cumtime_cpu_ns);
  }
}

TEST(Csv, EveryKindRoundTrips) {
  expect_csv_lossless(build_document(testing::controller_sleep_profile(),
                                     spec_for(ReportKind::kLineTable)));
  expect_csv_lossless(build_document(testing::concurrency_profile(),
                                     spec_for(ReportKind::kThreadTable)));
  Profile coarse = testing::simulator_run_profile();
  ProcessInfo gc;
  gc.name = "gc";
  gc.pid = 12;
  gc.coarse = make_breakdown(200.835, 83.637, 15.797);
  coarse.processes = {gc};
  expect_csv_lossless(build_document(coarse, spec_for(ReportKind::kCoarseTable)));
  const auto findings = find_hotspots(testing::simulator_run_profile(), CategoryRules::defaults(), 1);
  expect_csv_lossless(build_document(findings, spec_for(ReportKind::kHotspotReport)));
}

TEST(Csv, RandomStringsSurviveQuoting) {
  std::mt19937_64 rng(3);
  const std::string alphabet = "ab ,\"\r\n;x";
  for (int trial = 0; trial < 200; ++trial) {
    ReportDocument doc;
    doc.columns = {"s", "n", "x"};
    for (int r = 0; r < 3; ++r) {
      std::string s;
      for (std::size_t i = rng() % 8; i > 0; --i) s += alphabet[rng() % alphabet.size()];
      doc.rows.push_back({s, static_cast<std::int64_t>(rng() % 1000) - 500,
                          static_cast<double>(rng() % 100000) / 7.0});
    }
    expect_csv_lossless(doc);
  }
}

TEST(Csv, ParserHandlesQuotesAndRejectsUnterminated) {
  const auto rows = parse_csv("a,\"b,\"\"c\"\"\"\r\n,\"\"\r\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"a", "b,\"c\""}));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"", ""}));
  EXPECT_THROW(parse_csv("\"open"), Error);
}

TEST(Structured, RoundTripsEveryKind) {
  std::vector<ReportDocument> docs = {
      build_document(testing::simulator_run_profile(), spec_for(ReportKind::kFunctionTable)),
      build_document(testing::controller_sleep_profile(), spec_for(ReportKind::kLineTable)),
      build_document(testing::concurrency_profile(), spec_for(ReportKind::kThreadTable)),
  };
  const Profile p = testing::simulator_run_profile();
  docs.push_back(build_document(compare(p, p, CategoryRules::defaults()),
                                spec_for(ReportKind::kCompareReport)));
  for (const ReportDocument& doc : docs) {
    const std::string text = format_document(doc, ReportFormat::kStructured);
    const ReportDocument back = parse_structured(text);
    EXPECT_EQ(back.kind, doc.kind);
    EXPECT_EQ(back.sort_key, doc.sort_key);
    EXPECT_EQ(back.columns, doc.columns);
    EXPECT_EQ(back.rows, doc.rows);
    EXPECT_EQ(back.meta, doc.meta);
    EXPECT_EQ(format_document(back, ReportFormat::kText), format_document(doc, ReportFormat::kText));
  }
  EXPECT_THROW(parse_structured("[]"), Error);
  EXPECT_THROW(parse_structured(R"({"format":"tierprof-report","version":99})"), Error);
}

TEST(LineTable, ScopeFilterAndUnknownScope) {
  ReportSpec s = spec_for(ReportKind::kLineTable);
  s.function_scope = "start_gc_lighthouseController";
  EXPECT_EQ(build_document(testing::controller_sleep_profile(), s).rows.size(), 9u);
  s.sort_key = "time";
  s.top_n = 1;
  const ReportDocument top = build_document(testing::controller_sleep_profile(), s);
  ASSERT_EQ(top.rows.size(), 1u);
  EXPECT_EQ(std::get<std::string>(top.rows[0][top.column("symbol")]), "sleep(5)");
  s.function_scope = "nope";
  EXPECT_THROW(build_document(testing::controller_sleep_profile(), s), Error);
}

TEST(ThreadTable, WallClockAndMultipleThreads) {
  Profile p = testing::concurrency_profile();
  ThreadStats other = p.threads[1];
  other.thread_id = 2;
  other.thread_name = "worker";
  other.ttot_wall_ns = 5'000'000'000;
  p.threads.push_back(other);
  ReportSpec s = spec_for(ReportKind::kThreadTable, 2);
  s.clock = ClockType::kWall;
  const std::string text = render(p, s);
  EXPECT_EQ(text.rfind("Clock type: WALL\n", 0), 0u) << text;
  EXPECT_NE(text.find("Thread: driver/worker (id 2)"), std::string::npos) << text;
  EXPECT_NE(text.find("5.000000"), std::string::npos);
}

TEST(CoarseTable, PercentagesAndOversubscription) {
  Profile p;
  ProcessInfo a;
  a.name = "gc";
  a.pid = 10;
  a.coarse = make_breakdown(200.835, 83.637, 15.797);
  ProcessInfo b;
  b.name = "burner";
  b.pid = 11;
  b.coarse = make_breakdown(1.0, 1.5, 0.1);
  ProcessInfo c;
  c.name = "nodata";
  c.pid = 12;
  p.processes = {a, b, c};
  const std::string text = render(p, spec_for(ReportKind::kCoarseTable));
  EXPECT_NE(text.find("41.64"), std::string::npos) << text;
  EXPECT_NE(text.find("burner"), std::string::npos);
  EXPECT_NE(text.find("* user + system CPU exceeded run time"), std::string::npos) << text;
}

TEST(HotspotReport, ListsRemediations) {
  const auto findings = find_hotspots(testing::simulator_run_profile(), CategoryRules::defaults(), 10);
  ReportSpec s = spec_for(ReportKind::kHotspotReport);
  s.threshold_pct = 10;
  const std::string text = render(std::span<const HotspotFinding>(findings), s);
  EXPECT_NE(text.find("Hotspots at or above 10.00% of attributed time: 2"), std::string::npos) << text;
  EXPECT_NE(text.find("1. IoWaitPoll"), std::string::npos) << text;
  EXPECT_NE(text.find("Remediation 1:"), std::string::npos);
  EXPECT_NE(text.find("Remediation 2:"), std::string::npos);
  const std::vector<HotspotFinding> none;
  EXPECT_EQ(render(std::span<const HotspotFinding>(none), s),
            "No hotspots at or above 10.00% of attributed time\n");
}

TEST(Reports, MismatchedKindIsAConfigError) {
  const Profile p = testing::simulator_run_profile();
  try {
    build_document(p, spec_for(ReportKind::kCompareReport));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(Emit, WritesFilesAndCreatesDirectories) {
  const fs::path dir = fs::temp_directory_path() / "tierprof_emit_test";
  fs::remove_all(dir);
  ReportSpec s;
  s.output = dir / "sub" / "report.txt";
  emit("hello\n", s);
  EXPECT_EQ(read_file(*s.output), "hello\n");
  fs::remove_all(dir);
}

TEST(RunSummary, ListsTimelineEntitiesAndFacts) {
  RunSummary run;
  run.run_id = "r1";
  run.scenario_id = "fast";
  run.levels = "all";
  run.seed = 4;
  run.timeline = {{"Idle", 0.0}, {"Running", 1.25}};
  run.entities = {{"gc", "GlobalController", 100, 0, make_breakdown(2, 0.5, 0.25)}};
  run.facts = {{"requests_sent", "80"}};
  const std::string text = render_summary(run);
  EXPECT_NE(text.find("run_id: r1\n"), std::string::npos);
  EXPECT_NE(text.find("Running"), std::string::npos);
  EXPECT_NE(text.find("1.250"), std::string::npos);
  EXPECT_NE(text.find("GlobalController"), std::string::npos);
  EXPECT_NE(text.find("requests_sent"), std::string::npos);
}

TEST(DumpIndex, ListsDumpsInDirectory) {
  const fs::path dir = fs::temp_directory_path() / "tierprof_index_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  testing::StreamBuilder s({testing::function_site("f")});
  s.enter(0, 0).exit(0, 10);
  save_dump(s.dump("b"), dir / "b.dump");
  save_dump(s.dump("a"), dir / "a.dump");
  const fs::path index = write_dump_index(dir);
  const std::string text = read_file(index);
  EXPECT_LT(text.find("a.dump"), text.find("b.dump"));
  fs::remove_all(dir);
}

}  // namespace
}  // namespace tierprof
