// Copyright 2026 The CoDi Authors
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

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace codi {

/// Reads a whole file; throws Error(IoError) when it cannot be opened.
std::string read_file(const std::string& path);

/// Splits on '\n', dropping blank lines ('\r' tolerated before the break).
std::vector<std::string> split_lines(std::string_view text);

/// Streams output through "<path>.tmp" and renames onto `path` on commit,
/// so readers never observe a half-written file. A writer destroyed without
/// commit() removes the temporary and leaves any previous file untouched.
class AtomicFileWriter {
 public:
  explicit AtomicFileWriter(std::string path);
  ~AtomicFileWriter();

  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

  void write(std::string_view data);
  void commit();

 private:
  std::string path_;
  std::string temp_path_;
  std::ofstream out_;
  bool committed_ = false;
};

/// write + commit in one call.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace codi
