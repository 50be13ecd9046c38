// Copyright 2026 The PsyAdv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PSYADV_TESTS_UNIT_TEST_UTIL_H_
#define PSYADV_TESTS_UNIT_TEST_UTIL_H_

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace psyadv_test {

// Fresh scratch directory under the system temp dir, wiped on entry so
// reruns start clean.  Tests in one binary run sequentially, so a per-suite
// name is enough to avoid collisions under parallel ctest.
inline std::string MakeTempDir(const std::string& suite) {
  std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("psyadv_" + suite);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

inline std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

inline void WriteFileBytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace psyadv_test

#endif  // PSYADV_TESTS_UNIT_TEST_UTIL_H_
