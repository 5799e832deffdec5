// Copyright 2026 The fwiki Authors. All Rights Reserved.
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

#ifndef FWIKI_UTIL_H_
#define FWIKI_UTIL_H_

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fwiki {

namespace fs = std::filesystem;

/// Filesystem failure. Infrastructure errors are exceptions throughout;
/// verification failures are data.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const fs::path& path);

/// Writes via a temporary sibling and rename, creating parent directories.
void WriteFileAtomic(const fs::path& path, std::string_view bytes);

/// Regular files under |root|, as sorted generic relative paths.
std::vector<std::string> ListFilesRecursive(const fs::path& root);

/// Where generated files go. Sandboxes install a sink that also records
/// each written file's digest in their hash index.
class FileSink {
 public:
  virtual ~FileSink() = default;
  virtual void Write(const fs::path& path, std::string_view bytes);
  virtual void Remove(const fs::path& path);
};

FileSink& DefaultSink();

std::string Trim(std::string_view s);

}  // namespace fwiki

#endif  // FWIKI_UTIL_H_
