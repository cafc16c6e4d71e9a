// Copyright 2026 The idiomperf Authors.
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

// RFC 4180 reading and writing (CRLF or LF accepted on input, LF written).

#include <string>
#include <string_view>
#include <vector>

namespace idiomperf::csv {

using Row = std::vector<std::string>;

std::string escape(std::string_view field);
std::string format_row(const Row& row);
std::vector<Row> parse(std::string_view text);

/// Header-indexed view over parsed rows.
class Table {
 public:
  explicit Table(std::string_view text);
  const Row& header() const { return header_; }
  const std::vector<Row>& rows() const { return rows_; }
  /// Column index or -1.
  int column(std::string_view name) const;
  const std::string& get(const Row& row, std::string_view name) const;

 private:
  Row header_;
  std::vector<Row> rows_;
};

}  // namespace idiomperf::csv
