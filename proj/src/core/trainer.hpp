// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dataio.hpp"
#include "losses.hpp"
#include "metrics.hpp"
#include "model.hpp"

namespace earlyact {

struct TrainConfig {
  int epochs = 30;
  int e_star = 15;        // forwarded into the loss schedule
  int batch_size = 16;
  double lr = 2.5e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double grad_clip = 1.0;  // global grad norm cap; <= 0 disables clipping
  uint64_t seed = 1;
  LossConfig loss;
  int eval_every = 5;      // epochs between validation evals; <= 0 disables
};

void validate(const TrainConfig& cfg);

struct EvalRecord {
  AccuracyCurve curve;
  double auc_value = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  LossBreakdown mean_loss;
  double wall_seconds = 0.0;
  std::optional<EvalRecord> eval;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;      // epoch of the best validation AUC, -1 if never evaluated
  double best_auc = 0.0;
};

// AdamW with decoupled weight decay, eps added outside the square root.
struct AdamWSlot {
  std::vector<double> m, v;
};

// One update of a parameter vector in place. `step` is 1-based and shared
// across all parameters of the optimizer.
void adamw_update(std::vector<double>& values, const std::vector<double>& grads, AdamWSlot& slot,
                  int64_t step, double lr, double beta1, double beta2, double eps,
                  double weight_decay);

class AdamW {
 public:
  AdamW(const ModelParams& params, const TrainConfig& cfg);

  // Clips by global norm (if configured) and applies one step to every slot.
  void step();

  int64_t step_count() const { return step_count_; }

 private:
  struct Slot {
    Tensor tensor;
    AdamWSlot state;
    bool decay;
  };
  std::vector<Slot> slots_;
  TrainConfig cfg_;
  int64_t step_count_ = 0;
};

// One optimization step over a batch with uniform T: forward, total loss
// averaged over the batch, backward, optimizer update. Aborts with a
// NumericError naming the first non-finite loss component.
LossBreakdown train_step(ModelParams& params, const std::vector<const SegmentFeatureSequence*>& batch,
                         int epoch, const TrainConfig& cfg, AdamW& optimizer);

// Full loop: per-epoch seeded shuffling, epoch-scheduled dynamic loss,
// periodic validation, best-AUC checkpointing. Mutates params in place.
TrainReport fit(ModelParams& params, const Dataset& train_set, const Dataset& val_set,
                const TrainConfig& cfg, const std::string& best_checkpoint_path = "");

// One JSON object per epoch.
void write_report_jsonl(const TrainReport& report, const std::string& path);

}  // namespace earlyact
