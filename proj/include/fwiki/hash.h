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

#ifndef FWIKI_HASH_H_
#define FWIKI_HASH_H_

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace fwiki {

/// A SHA-256 content digest.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  static std::optional<Digest> FromHex(std::string_view hex);

  auto operator<=>(const Digest&) const = default;
};

Digest Sha256(std::string_view data);

/// Streaming SHA-256 for inputs that do not fit comfortably in memory.
class Sha256Stream {
 public:
  Sha256Stream();
  ~Sha256Stream();
  Sha256Stream(const Sha256Stream&) = delete;
  Sha256Stream& operator=(const Sha256Stream&) = delete;

  void Update(std::string_view data);
  Digest Finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Hashes a file's bytes. Adds the number of bytes read to |*bytes_read|
/// when it is non-null.
Digest HashFile(const std::filesystem::path& path,
                std::uint64_t* bytes_read = nullptr);

}  // namespace fwiki

#endif  // FWIKI_HASH_H_
