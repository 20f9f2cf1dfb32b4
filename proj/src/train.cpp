#include "codesuggest/train.hpp"

#include <cmath>
#include <sstream>

#include "codesuggest/error.hpp"
#include "codesuggest/optim.hpp"

namespace codesuggest::neural {

namespace {

std::size_t target_count(const corpus::Segment& seg) {
  std::size_t n = 0;
  for (auto m : seg.target_mask) n += m;
  return n;
}

}  // namespace

std::vector<EpochLog> train(Model<float>& model, const std::vector<corpus::EncodedFile>& files,
                            const TrainOptions& options, const std::function<void(const EpochLog&)>& on_epoch) {
  if (options.lr <= 0.0 || options.decay <= 0.0 || options.clip <= 0.0 || options.epochs == 0) {
    throw Error(ErrorCode::BadConfig, "lr, decay, clip and epochs must be positive");
  }
  for (const auto& f : files) {
    for (int id : f.ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= model.config.vocab_size) {
        throw Error(ErrorCode::VocabMismatch, "token id " + std::to_string(id) + " outside the model vocabulary");
      }
    }
  }
  corpus::BatchStream stream(files, options.lanes, options.unroll);
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<EpochLog> logs;
  double lr = options.lr;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    DecodeState<float> state(options.lanes, model.config.hidden);
    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    double loss_sum = 0.0;
    double norm_sum = 0.0;
    for (std::size_t s = 0; s < stream.segment_count(); ++s) {
      corpus::Segment seg = stream.segment(s);
      Graph<float> graph(true);
      model.params.zero_grad();
      Var loss = segment_loss(model, graph, state, seg, true, rng, options.sampled);
      if (!loss.valid()) continue;
      double value = graph.scalar(loss);
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", segment " << s << " of " << stream.segment_count()
            << ", lr " << lr;
        throw Error(ErrorCode::DivergedLoss, msg.str());
      }
      graph.backward(loss);
      norm_sum += tensor::clip_by_global_norm(model.params, options.clip);
      tensor::sgd_step(model.params, lr);
      std::size_t n = target_count(seg);
      loss_sum += value * static_cast<double>(n);
      log.targets += n;
      ++log.segments;
    }
    log.loss = log.targets ? loss_sum / static_cast<double>(log.targets) : 0.0;
    log.mean_grad_norm = log.segments ? norm_sum / static_cast<double>(log.segments) : 0.0;
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
    lr = tensor::decay_lr(lr, options.decay);
  }
  return logs;
}

double first_segment_loss(Model<float>& model, const std::vector<corpus::EncodedFile>& files,
                          const TrainOptions& options) {
  corpus::BatchStream stream(files, options.lanes, options.unroll);
  if (stream.segment_count() == 0) throw Error(ErrorCode::EmptyCorpus, "no segments");
  DecodeState<float> state(options.lanes, model.config.hidden);
  std::mt19937_64 rng(options.seed);
  Graph<float> graph(false);
  Var loss = segment_loss(model, graph, state, stream.segment(0), false, rng, 0);
  return loss.valid() ? graph.scalar(loss) : 0.0;
}

}  // namespace codesuggest::neural
