// Copyright 2026 The Recon Authors
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

#ifndef RECON_TESTS_FIXTURES_HPP_
#define RECON_TESTS_FIXTURES_HPP_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace recon::testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(RECON_FIXTURE_DIR) / rel;
}

inline std::string read_fixture(const std::string& rel) {
  std::ifstream in(fixture(rel), std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace recon::testing

#endif  // RECON_TESTS_FIXTURES_HPP_
