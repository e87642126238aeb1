#include "heatcast/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "heatcast/autograd.hpp"
#include "heatcast/common.hpp"
#include "heatcast/csv.hpp"
#include "heatcast/optim.hpp"
#include "heatcast/rng.hpp"

namespace heatcast {

namespace {

constexpr uint64_t kShuffleTag = 0x73687566ULL;
constexpr uint64_t kAugmentTag = 0x6175676dULL;

struct TargetStats {
  float mean = 0.0f;
  float std = 1.0f;
};

TargetStats target_stats_from_train(const Dataset& data,
                                    const std::vector<size_t>& train_idx) {
  double sum = 0.0, sum2 = 0.0;
  int64_t n = 0;
  for (size_t idx : train_idx) {
    const TargetRaster& t = data.days[idx].target;
    for (size_t i = 0; i < t.values.size(); ++i) {
      if (!t.valid[i]) continue;
      sum += t.values[i];
      sum2 += double(t.values[i]) * double(t.values[i]);
      ++n;
    }
  }
  if (n == 0)
    throw DataError("fit: training split has no valid target pixels");
  TargetStats stats;
  const double mean = sum / double(n);
  const double var = std::max(0.0, sum2 / double(n) - mean * mean);
  stats.mean = float(mean);
  stats.std = std::max(float(std::sqrt(var)), 1e-6f);
  return stats;
}

struct Batch {
  Tensor<float> input;        // (B,39,R,C), normalized features
  std::vector<float> target;  // B*R*C, normalized degC
  std::vector<uint8_t> mask;
};

// Mirror-pad every sample to the batch max and place the sparse target at
// the same offset; padded-in target pixels stay invalid.
Batch assemble_batch(std::vector<FeatureStack>& stacks,
                     std::vector<TargetRaster>& targets) {
  const size_t n = stacks.size();
  int64_t max_r = 0, max_c = 0;
  for (const auto& s : stacks) {
    max_r = std::max(max_r, s.grid.rows);
    max_c = std::max(max_c, s.grid.cols);
  }

  Batch batch;
  batch.input =
      Tensor<float>::zeros(Shape{int64_t(n), kStackChannels, max_r, max_c});
  batch.target.assign(size_t(int64_t(n) * max_r * max_c), 0.0f);
  batch.mask.assign(batch.target.size(), 0);

  for (size_t b = 0; b < n; ++b) {
    const int64_t rows = stacks[b].grid.rows, cols = stacks[b].grid.cols;
    Tensor<float> sample = Tensor<float>::from_vector(
        Shape{1, kStackChannels, rows, cols}, std::move(stacks[b].data));
    PaddedImage<float> padded = mirror_pad_to(sample, max_r, max_c);
    std::copy(padded.tensor.data(), padded.tensor.data() + padded.tensor.numel(),
              batch.input.data() + int64_t(b) * kStackChannels * max_r * max_c);
    const TargetRaster& t = targets[b];
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) {
        const size_t src = size_t(r * cols + c);
        if (!t.valid[src]) continue;
        const size_t dst = size_t(int64_t(b) * max_r * max_c +
                                  (r + padded.top) * max_c + (c + padded.left));
        batch.target[dst] = t.values[src];
        batch.mask[dst] = 1;
      }
  }
  return batch;
}

Tensor<float> forward_denormalized(const ModelParams<float>& model,
                                   const NormStats& norm,
                                   const TargetStats& tstats,
                                   const FeatureStack& raw) {
  FeatureStack s = raw;
  apply_norm(s, norm);
  Tensor<float> in = Tensor<float>::from_vector(
      Shape{1, kStackChannels, s.grid.rows, s.grid.cols}, std::move(s.data));
  Tensor<float> out = model_forward(model, in);
  for (int64_t i = 0; i < out.numel(); ++i)
    out.data()[i] = out.data()[i] * tstats.std + tstats.mean;
  return out;
}

// Pooled MAE over all valid (pixel, day) pairs of the given indices.
double split_mae(const ModelParams<float>& model, const NormStats& norm,
                 const TargetStats& tstats, const Dataset& data,
                 const std::vector<size_t>& indices) {
  double abs_sum = 0.0;
  int64_t count = 0;
  for (size_t idx : indices) {
    const DayRecord& day = data.days[idx];
    if (day.target.valid_count() == 0) continue;
    Tensor<float> pred = forward_denormalized(model, norm, tstats, day.stack);
    const float* p = pred.data();
    for (size_t i = 0; i < day.target.values.size(); ++i) {
      if (!day.target.valid[i]) continue;
      abs_sum += std::abs(double(p[i]) - double(day.target.values[i]));
      ++count;
    }
  }
  if (count == 0)
    throw DataError("fit: validation split has no valid target pixels");
  return abs_sum / double(count);
}

}  // namespace

FitResult fit(const Dataset& data, ModelKind kind, const ArchConfig& arch,
              const TrainConfig& cfg) {
  const auto train_idx =
      data.indices_in_years(cfg.train_year_min, cfg.train_year_max);
  const auto val_idx = data.indices_in_years(cfg.val_year, cfg.val_year);
  if (train_idx.empty()) throw DataError("fit: empty training split");
  if (val_idx.empty()) throw DataError("fit: empty validation split");

  std::vector<const FeatureStack*> train_stacks;
  for (size_t idx : train_idx) train_stacks.push_back(&data.days[idx].stack);
  const NormStats norm = compute_norm_stats(train_stacks);
  const TargetStats tstats = target_stats_from_train(data, train_idx);

  ModelParams<float> model = build_model<float>(kind, arch, cfg.seed);
  model.params.set_requires_grad(true);

  const bool use_sgd = kind == ModelKind::linear;
  AdamWConfig adamw_cfg;
  adamw_cfg.weight_decay = float(cfg.weight_decay);
  AdamWState adamw_state = AdamWState::init(model.params);

  PlateauScheduler scheduler(cfg.lr, cfg.plateau_patience, cfg.plateau_factor,
                             cfg.min_delta);
  double lr = cfg.lr;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_best = 0;
  ParamSet<float> best_params = model.params.clone();

  FitResult result;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<size_t> order = train_idx;
    Rng shuffle_rng = Rng::stream(cfg.seed, {kShuffleTag, uint64_t(epoch)});
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[size_t(shuffle_rng.uniform_int(0, int64_t(i) - 1))]);

    double loss_weighted = 0.0;
    int64_t contributing_total = 0;
    for (size_t start = 0; start < order.size();
         start += size_t(cfg.batch_size)) {
      const size_t end =
          std::min(order.size(), start + size_t(cfg.batch_size));
      std::vector<FeatureStack> stacks;
      std::vector<TargetRaster> targets;
      for (size_t k = start; k < end; ++k) {
        const DayRecord& day = data.days[order[k]];
        FeatureStack s = day.stack;
        TargetRaster t = day.target;
        Rng aug_rng = Rng::stream(
            cfg.seed, {kAugmentTag, uint64_t(date_serial(day.date)),
                       uint64_t(epoch)});
        augment(s, t, cfg.augment, aug_rng);
        apply_norm(s, norm);
        for (size_t i = 0; i < t.values.size(); ++i)
          if (t.valid[i])
            t.values[i] = (t.values[i] - tstats.mean) / tstats.std;
        stacks.push_back(std::move(s));
        targets.push_back(std::move(t));
      }

      Batch batch = assemble_batch(stacks, targets);
      model.params.zero_grad();
      Tape<float> tape;
      MaskedLoss<float> loss;
      {
        Tape<float>::Scope scope(tape);
        Tensor<float> pred = model_forward(model, batch.input);
        loss = masked_mse(pred, batch.target, batch.mask);
        if (loss.all_skipped()) continue;  // no valid pixel in the batch
        tape.backward(loss.loss);
      }
      if (cfg.grad_clip > 0.0) clip_grad_norm(model.params, float(cfg.grad_clip));
      if (use_sgd)
        sgd_step(model.params, float(lr));
      else
        adamw_step(model.params, adamw_state, float(lr), adamw_cfg);

      loss_weighted += double(loss.loss.item()) * loss.contributing;
      contributing_total += loss.contributing;
    }
    if (contributing_total == 0)
      throw DataError("fit: every sample in the epoch was skipped "
                      "(no valid target pixels)");

    const double train_loss = loss_weighted / double(contributing_total);
    const double val_mae = split_mae(model, norm, tstats, data, val_idx);
    lr = scheduler.observe(val_mae);
    result.history.push_back(EpochLog{epoch, train_loss, val_mae, lr});

    if (val_mae < best_val - cfg.min_delta) {
      best_val = val_mae;
      best_epoch = epoch;
      best_params = model.params.clone();
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.early_stop_patience) break;
    }
  }

  Checkpoint best;
  best.model.kind = kind;
  best.model.arch = arch;
  best.model.params = std::move(best_params);
  best.feature_norm = norm;
  best.target_mean = tstats.mean;
  best.target_std = tstats.std;
  best.layout_names = data.layout_names;
  best.best_epoch = best_epoch;
  best.best_val_mae = best_val;
  result.best = std::move(best);
  return result;
}

Tensor<float> predict_map(const Checkpoint& ckpt, const FeatureStack& stack) {
  TargetStats tstats{ckpt.target_mean, ckpt.target_std};
  return forward_denormalized(ckpt.model, ckpt.feature_norm, tstats, stack);
}

void write_history_csv(const std::string& path,
                       const std::vector<EpochLog>& history) {
  CsvTable table;
  table.header = {"epoch", "train_loss", "val_mae", "lr"};
  for (const EpochLog& row : history) {
    table.rows.push_back({std::to_string(row.epoch),
                          strprintf("%.8f", row.train_loss),
                          strprintf("%.6f", row.val_mae),
                          strprintf("%.8g", row.lr)});
  }
  write_csv(path, table);
}

}  // namespace heatcast
