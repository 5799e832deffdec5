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

#ifndef FWIKI_REQUEST_H_
#define FWIKI_REQUEST_H_

#include <string>
#include <vector>

namespace fwiki {

enum class ChangeAction { kAdd, kModify, kDelete };

struct Change {
  std::string path;  // e.g. "group.fml"
  ChangeAction action = ChangeAction::kAdd;
  std::string payload;  // empty for kDelete
};

/// A proposed changeset.
struct CommitRequest {
  std::string author;
  std::string message;
  std::vector<Change> changes;
};

}  // namespace fwiki

#endif  // FWIKI_REQUEST_H_
