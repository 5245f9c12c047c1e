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

#include <json.hpp>

namespace fedstat::record {

// All on-disk records are JSON with a fixed field order. Writing goes
// through these helpers so floating point values are always rendered with
// 17 significant digits, which round-trips binary64 exactly and keeps
// rerun outputs byte-identical.
std::string fmt_double(double x);
std::string fmt_double_array(const std::vector<double>& xs);

// Parse wrapper that converts json exceptions into data errors carrying the
// offending source name.
nlohmann::json parse(const std::string& text, const std::string& source);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace fedstat::record
