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
#include "pcount/label.hpp"

#include "pcount/errors.hpp"

namespace pcount {

std::int64_t target_count(const PeopleLabel& label, LabelMode mode) {
  if (mode == LabelMode::all_people) return label.total_count;
  if (!label.customer_count) throw InvariantError("customers_only mode requires customer labels");
  return *label.customer_count;
}

const char* to_string(LabelMode mode) {
  return mode == LabelMode::all_people ? "all_people" : "customers_only";
}

LabelMode parse_label_mode(const std::string& text) {
  if (text == "all_people") return LabelMode::all_people;
  if (text == "customers_only") return LabelMode::customers_only;
  throw ConfigError("unknown label mode '" + text + "'");
}

}  // namespace pcount
