// Copyright 2026 The pcount Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace pcount {

/// Annotated people count of one frame. customer_count excludes salespeople.
struct PeopleLabel {
  std::int64_t total_count = 0;
  std::optional<std::int64_t> customer_count;

  friend bool operator==(const PeopleLabel&, const PeopleLabel&) = default;
};

enum class LabelMode { all_people, customers_only };

/// Regression target for a label under the given mode. Throws InvariantError
/// when customers_only is requested and the customer count is missing.
std::int64_t target_count(const PeopleLabel& label, LabelMode mode);

const char* to_string(LabelMode mode);
LabelMode parse_label_mode(const std::string& text);

}  // namespace pcount
