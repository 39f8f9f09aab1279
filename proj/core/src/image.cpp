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

#include "recon/image.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "recon/error.hpp"
#include "recon/sim.hpp"

namespace recon::data {

namespace {

class PnmReader {
 public:
  explicit PnmReader(const std::vector<std::uint8_t>& b) : b_(b) {}

  std::int64_t number() {
    skip_space();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_]))
      fail(ErrorKind::MalformedFile, "netpbm: expected a number at byte " + std::to_string(pos_));
    std::int64_t v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > (1 << 24)) fail(ErrorKind::MalformedFile, "netpbm: value too large");
    }
    return v;
  }
  void skip_space() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  std::size_t pos_ = 0;
  const std::vector<std::uint8_t>& b_;
};

}  // namespace

Image decode_pnm(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P')
    fail(ErrorKind::MalformedFile, "not a netpbm image");
  const char kind = static_cast<char>(bytes[1]);
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
    fail(ErrorKind::MalformedFile, std::string("unsupported netpbm variant P") + kind);
  PnmReader r(bytes);
  r.pos_ = 2;
  Image img;
  img.channels = (kind == '3' || kind == '6') ? 3 : 1;
  img.width = r.number();
  img.height = r.number();
  const auto maxval = r.number();
  if (img.width < 1 || img.height < 1) fail(ErrorKind::MalformedFile, "netpbm: empty image");
  if (maxval != 255) fail(ErrorKind::MalformedFile, "netpbm: only maxval 255 is supported");
  const auto n = static_cast<std::size_t>(img.width * img.height * img.channels);
  img.pixels.resize(n);
  if (kind == '5' || kind == '6') {
    ++r.pos_;  // single whitespace after maxval
    if (r.pos_ + n > bytes.size()) fail(ErrorKind::MalformedFile, "netpbm: truncated pixel data");
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(r.pos_), n, img.pixels.begin());
  } else {
    for (auto& p : img.pixels) {
      const auto v = r.number();
      if (v > 255) fail(ErrorKind::MalformedFile, "netpbm: sample exceeds maxval");
      p = static_cast<std::uint8_t>(v);
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    fail(ErrorKind::MalformedFile, "netpbm supports 1 or 3 channels");
  const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

Image read_pnm(const std::filesystem::path& path) { return decode_pnm(graph::read_file_bytes(path)); }

void write_pnm(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_pnm(img);
  graph::write_file(path, std::span<const std::uint8_t>(bytes));
}

Dataset load_dataset(const std::filesystem::path& manifest) {
  const std::string text = graph::read_file_text(manifest);
  const auto root = manifest.parent_path();
  Dataset ds;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Sample s;
    if (!(ls >> s.path)) continue;
    for (std::string tok; ls >> tok;) s.truth.push_back(tok);
    s.image = read_pnm(root / s.path);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) fail(ErrorKind::EmptyDataset, "dataset " + manifest.string() + " has no samples");
  return ds;
}

}  // namespace recon::data
