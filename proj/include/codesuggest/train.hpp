#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "codesuggest/corpus.hpp"
#include "codesuggest/neural.hpp"

namespace codesuggest::neural {

struct TrainOptions {
  std::size_t lanes = 30;  // B
  std::size_t unroll = 50; // L
  std::size_t epochs = 10;
  double lr = 0.7;
  double decay = 0.9;
  double clip = 5.0;
  std::uint64_t seed = 1;
  std::size_t sampled = 0;  // sampled-softmax size, 0 = full softmax
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;        // rate used during the epoch
  double loss = 0.0;      // mean per-target training loss
  std::size_t targets = 0;
  std::size_t segments = 0;
  double mean_grad_norm = 0.0;  // before clipping
};

/// Mini-batch SGD with truncated BPTT. Recurrent state and identifier
/// memory carry across segments as constants; the rate decays after every
/// epoch. Throws DivergedLoss on a non-finite loss.
std::vector<EpochLog> train(Model<float>& model, const std::vector<corpus::EncodedFile>& files,
                            const TrainOptions& options,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

/// Loss of the first segment of a fresh stream, without an update.
double first_segment_loss(Model<float>& model, const std::vector<corpus::EncodedFile>& files,
                          const TrainOptions& options);

}  // namespace codesuggest::neural
