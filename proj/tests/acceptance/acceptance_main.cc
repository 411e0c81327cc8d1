// Copyright 2026 The EAsT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Prints one [PASS]/[FAIL] line per acceptance criterion.
//
//   east_acceptance            run all criteria
//   east_acceptance 1 4 9      run only the listed criteria
//   east_acceptance --quick    skip the long training criteria (7, 8)

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "criteria.h"

int main(int argc, char** argv) {
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      ids.assign(std::begin(east::acceptance::kQuickCriteria),
                 std::end(east::acceptance::kQuickCriteria));
      continue;
    }
    char* end = nullptr;
    const long id = std::strtol(arg.c_str(), &end, 10);
    if (end == arg.c_str() || *end != '\0' || id < 1 || id > 10) {
      std::cerr << "usage: east_acceptance [--quick] [criterion ...]\n";
      return 2;
    }
    ids.push_back(static_cast<int>(id));
  }
  if (ids.empty()) {
    ids.assign(std::begin(east::acceptance::kAllCriteria),
               std::end(east::acceptance::kAllCriteria));
  }
  return east::acceptance::RunCriteria(ids, std::cout) ? 0 : 1;
}
