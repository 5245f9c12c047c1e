/*
 * Copyright 2026 The fedstat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <string>
#include <vector>

namespace fedstat::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Splits one CSV line. Double-quoted fields may contain commas; a doubled
// quote inside a quoted field is an escaped quote. Embedded newlines are
// not supported (flow-export style files do not use them).
std::vector<std::string> split_line(const std::string& line);

// Reads a whole file; the first non-empty line is the header. Blank lines
// are skipped, trailing '\r' is stripped. Throws a data error if the file
// cannot be opened or has no header.
Table read_file(const std::string& path);

std::string join_row(const std::vector<std::string>& fields);

}  // namespace fedstat::csv
