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

#ifndef RECON_IMAGE_HPP_
#define RECON_IMAGE_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace recon::data {

// 8-bit image, row-major HWC.
struct Image {
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::int64_t channels = 1;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const Image&, const Image&) = default;
};

// Binary (P5/P6) and plain (P2/P3) netpbm, maxval 255.
Image decode_pnm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pnm(const Image& img);
Image read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Image& img);

struct Sample {
  std::string path;  // as written in the manifest
  Image image;
  std::vector<std::string> truth;  // task-specific ground-truth tokens
};

struct Dataset {
  std::vector<Sample> samples;
};

// Manifest: one sample per line, "<relative image path> <truth tokens...>".
// Blank lines and '#' comments are skipped.
Dataset load_dataset(const std::filesystem::path& manifest);

}  // namespace recon::data

#endif  // RECON_IMAGE_HPP_
