#include <algorithm>
#include <numeric>

#include "codesuggest/corpus.hpp"
#include "codesuggest/error.hpp"

namespace codesuggest::corpus {

BatchStream::BatchStream(const std::vector<EncodedFile>& files, std::size_t lanes,
                         std::size_t unroll)
    : files_(&files), lanes_(lanes), unroll_(unroll) {
  if (lanes == 0 || unroll == 0) throw Error(ErrorCode::BadConfig, "batch size and unroll must be >= 1");
  std::vector<std::size_t> order(files.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return files[a].size() > files[b].size();
  });
  lane_files_.assign(lanes, {});
  lane_positions_.assign(lanes, {});
  std::vector<std::size_t> totals(lanes, 0);
  for (std::size_t f : order) {
    if (files[f].size() == 0) continue;
    auto lane = static_cast<std::size_t>(std::min_element(totals.begin(), totals.end()) - totals.begin());
    lane_files_[lane].push_back(f);
    totals[lane] += files[f].size();
  }
  std::size_t longest = 0;
  for (std::size_t lane = 0; lane < lanes; ++lane) {
    auto& positions = lane_positions_[lane];
    positions.reserve(totals[lane]);
    for (std::size_t f : lane_files_[lane]) {
      for (std::size_t i = 0; i < files[f].size(); ++i) positions.push_back(Position{f, i});
    }
    longest = std::max(longest, positions.size());
  }
  segments_ = (longest + unroll - 1) / unroll;
}

Segment BatchStream::segment(std::size_t index) const {
  if (index >= segments_) throw Error(ErrorCode::BadConfig, "segment index out of range");
  Segment seg;
  seg.lanes = lanes_;
  seg.steps = unroll_;
  const std::size_t n = lanes_ * unroll_;
  seg.inputs.assign(n, 0);
  seg.targets.assign(n, 0);
  seg.valid.assign(n, 0);
  seg.target_mask.assign(n, 0);
  seg.reset.assign(n, 0);
  seg.intro.assign(n, 0);
  seg.intro_ids.assign(n, -1);
  seg.target_identifier.assign(n, 0);
  seg.file_index.assign(n, -1);
  for (std::size_t lane = 0; lane < lanes_; ++lane) {
    const auto& positions = lane_positions_[lane];
    for (std::size_t t = 0; t < unroll_; ++t) {
      std::size_t global = index * unroll_ + t;
      if (global >= positions.size()) break;
      const auto [f, offset] = positions[global];
      const EncodedFile& file = (*files_)[f];
      std::size_t k = seg.at(lane, t);
      seg.valid[k] = 1;
      seg.inputs[k] = file.ids[offset];
      seg.reset[k] = offset == 0;
      seg.intro[k] = file.intro[offset];
      seg.intro_ids[k] = file.intro[offset] ? file.ids[offset] : -1;
      seg.file_index[k] = static_cast<int>(f);
      if (offset + 1 < file.size()) {
        seg.target_mask[k] = 1;
        seg.targets[k] = file.ids[offset + 1];
        seg.target_identifier[k] = file.identifier[offset + 1];
      }
      seg.length = std::max(seg.length, t + 1);
    }
  }
  return seg;
}

}  // namespace codesuggest::corpus
