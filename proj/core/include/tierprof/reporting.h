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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tierprof/analysis.h"
#include "tierprof/profile_model.h"

namespace tierprof {

enum class ReportKind : std::uint8_t {
  kFunctionTable,
  kLineTable,
  kThreadTable,
  kCoarseTable,
  kHotspotReport,
  kCompareReport,
};

std::string_view to_string(ReportKind kind);
std::optional<ReportKind> parse_report_kind(std::string_view text);

enum class ReportFormat : std::uint8_t { kText, kCsv, kStructured };

std::string_view to_string(ReportFormat format);
std::optional<ReportFormat> parse_report_format(std::string_view text);

struct ReportSpec {
  ReportKind kind = ReportKind::kFunctionTable;
  // Empty selects the kind's default ordering.
  std::string sort_key;
  // Maximum number of data rows; unset means unlimited.
  std::optional<std::size_t> top_n;
  ReportFormat format = ReportFormat::kText;
  // Line tables only: restrict to one enclosing function (symbol or label).
  std::string function_scope;
  // Thread tables only.
  ClockType clock = ClockType::kCpu;
  // Hotspot reports only: the threshold the findings were computed with.
  double threshold_pct = 0;
  // Destination for emit(); unset writes to stdout.
  std::optional<std::filesystem::path> output;
};

// Sort keys accepted for `kind`; the first one is the default.
std::span<const std::string_view> sort_keys(ReportKind kind);

// Cells keep their type through every format: integers (counts and
// nanoseconds) stay integers, so csv and structured exports are exact.
using Cell = std::variant<std::int64_t, double, std::string>;

// Format-neutral table: what every renderer formats. Rows are already
// sorted and truncated.
struct ReportDocument {
  ReportKind kind = ReportKind::kFunctionTable;
  std::string sort_key;
  std::vector<std::pair<std::string, Cell>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(std::string_view name) const;  // throws Error(kParse)
  const Cell& meta_value(std::string_view key) const;  // throws Error(kParse)
};

// Throws Error(kInvalidSortKey), or Error(kConfig) when the input does not
// match `spec.kind` or a line-table scope is unknown.
ReportDocument build_document(const Profile& profile, const ReportSpec& spec);
ReportDocument build_document(std::span<const HotspotFinding> findings, const ReportSpec& spec);
ReportDocument build_document(const CompareReport& report, const ReportSpec& spec);

std::string format_document(const ReportDocument& doc, ReportFormat format);

template <typename Input>
std::string render(const Input& input, const ReportSpec& spec) {
  return format_document(build_document(input, spec), spec.format);
}

inline constexpr int kReportFormatVersion = 1;

// Inverse of the structured format.
ReportDocument parse_structured(std::string_view text);

// RFC 4180 reader for the csv format (quoted fields, doubled quotes).
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

// Writes to spec.output (creating parent directories) or stdout.
void emit(std::string_view document, const ReportSpec& spec);

struct EntitySummary {
  std::string name;
  std::string role;
  std::int64_t pid = 0;
  int exit_status = 0;
  std::optional<CoarseBreakdown> coarse;
};

struct RunSummary {
  std::string run_id;
  std::string scenario_id;
  double scale_factor = 1.0;
  std::string levels;
  std::uint64_t seed = 0;
  // Phase name and seconds since the manager started.
  std::vector<std::pair<std::string, double>> timeline;
  std::vector<EntitySummary> entities;
  // Free-form counters such as requests sent/answered, in insertion order.
  std::vector<std::pair<std::string, std::string>> facts;
};

std::string render_summary(const RunSummary& run);

// Lists every *.dump in `dir` (by file name) with its header fields into
// dir/index.tsv and returns that path. Throws Error(kIo).
std::filesystem::path write_dump_index(const std::filesystem::path& dir);

}  // namespace tierprof
