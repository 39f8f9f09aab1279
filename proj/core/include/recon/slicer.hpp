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

#ifndef RECON_SLICER_HPP_
#define RECON_SLICER_HPP_

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "recon/basis.hpp"

namespace recon::slicing {

struct SliceSet {
  std::set<StmtRef> statements;
  SlicingCriterion seed;

  bool contains(StmtRef n) const { return statements.count(n) > 0; }
};

struct ProcessingSlice {
  SliceSet pre;   // backward from the framework call
  SliceSet post;  // forward from the framework call
  StmtRef site;
};

SliceSet slice_backward(const SlicingBasis& b, const SlicingCriterion& c);
SliceSet slice_forward(const SlicingBasis& b, const SlicingCriterion& c);

/// Pairs backward/forward criteria by statement and slices each site.
std::vector<ProcessingSlice> extract_processing(
    const SlicingBasis& b, const std::vector<SlicingCriterion>& criteria);

/// Human-readable listing grouped by function.
std::string format_slice_report(const SlicingBasis& b,
                                const std::vector<ProcessingSlice>& slices);

/// One `site|pre|post QUALIFIED` line per entry.
std::string format_slice_list(const SlicingBasis& b,
                              const std::vector<ProcessingSlice>& slices);

struct SliceListEntry {
  std::string site;
  std::vector<std::string> pre;
  std::vector<std::string> post;
};

std::vector<SliceListEntry> parse_slice_list(std::string_view text);

/// Rebuilds ProcessingSlices from a parsed list against `b`.
std::vector<ProcessingSlice> resolve_slice_list(
    const SlicingBasis& b, const std::vector<SliceListEntry>& entries);

}  // namespace recon::slicing

#endif  // RECON_SLICER_HPP_
