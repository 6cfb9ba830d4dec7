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

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "tierprof/types.h"

namespace tierprof {

struct CategoryRule {
  TimeCategory category;
  std::string pattern;
  std::regex regex;
};

// Ordered pattern -> category rules. Patterns are ECMAScript regexes searched
// in a site's "file:line(symbol)" label; the first match wins.
//
// File format, one rule per line, '#' starts a comment:
//   <Category> <regex...>
class CategoryRules {
 public:
  CategoryRules() = default;

  static CategoryRules defaults();
  static CategoryRules parse(std::string_view text);
  static CategoryRules load(const std::filesystem::path& path);

  std::optional<TimeCategory> match(const CodeSite& site) const;
  const std::vector<CategoryRule>& rules() const { return rules_; }
  std::string to_text() const;

  void add(TimeCategory category, std::string pattern);

 private:
  std::vector<CategoryRule> rules_;
};

// Rules matching the testbed's own site names; also shipped as
// config/category_rules.conf.
extern const std::string_view kDefaultCategoryRules;

}  // namespace tierprof
