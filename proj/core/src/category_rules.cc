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

#include "tierprof/category_rules.h"

#include <fstream>
#include <sstream>

#include "text_util.h"
#include "tierprof/error.h"

namespace tierprof {

const std::string_view kDefaultCategoryRules = R"rules(# tierprof category rules: <Category> <regex>
# Matched against "file:line(symbol)"; first match wins. Instrumentation
# tags (poll, sleep, heartbeat, spawn) take precedence over these rules.
IoWaitPoll   \{poll\}|poll_once
Sleep        \{sleep\}|sleep\(
Heartbeat    heartbeat
VmLifecycle  \((start_|spawn|reap|shutdown_entities)
Kernel       \{(write|read|send|recv|accept|connect|flush)\}|send_frames|accept_connection
)rules";

CategoryRules CategoryRules::defaults() { return parse(kDefaultCategoryRules); }

CategoryRules CategoryRules::parse(std::string_view text) {
  CategoryRules rules;
  std::size_t line_no = 0;
  for (std::string_view raw : detail::split(text, '\n')) {
    ++line_no;
    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto space = line.find_first_of(" \t");
    if (space == std::string_view::npos) {
      throw Error(ErrorCode::kConfig, "rule line " + std::to_string(line_no) + ": missing pattern");
    }
    const auto category = parse_time_category(line.substr(0, space));
    if (!category) {
      throw Error(ErrorCode::kConfig, "rule line " + std::to_string(line_no) +
                                          ": unknown category '" +
                                          std::string(line.substr(0, space)) + "'");
    }
    rules.add(*category, std::string(detail::trim(line.substr(space))));
  }
  return rules;
}

CategoryRules CategoryRules::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read rules file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void CategoryRules::add(TimeCategory category, std::string pattern) {
  try {
    std::regex regex(pattern, std::regex::ECMAScript | std::regex::optimize);
    rules_.push_back({category, std::move(pattern), std::move(regex)});
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kConfig, "bad rule pattern '" + pattern + "': " + e.what());
  }
}

std::optional<TimeCategory> CategoryRules::match(const CodeSite& site) const {
  const std::string label = site_label(site);
  for (const CategoryRule& rule : rules_) {
    if (std::regex_search(label, rule.regex)) return rule.category;
  }
  return std::nullopt;
}

std::string CategoryRules::to_text() const {
  std::string out;
  for (const CategoryRule& rule : rules_) {
    out += to_string(rule.category);
    out += ' ';
    out += rule.pattern;
    out += '\n';
  }
  return out;
}

}  // namespace tierprof
