// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include "trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rng.hpp"

namespace earlyact {

namespace {

constexpr double kAdamEps = 1e-8;

// Weight matrices decay; biases, norm affines, positions and prototypes do
// not. Keeping prototypes decay-free means a zero prototype gradient leaves
// the bank bitwise at its initialization.
struct TaggedParam {
  Tensor tensor;
  bool decay;
};

std::vector<TaggedParam> trainable_params(const ModelParams& p) {
  std::vector<TaggedParam> out;
  auto lin = [&out](const LinearParams& l) {
    out.push_back({l.w, true});
    out.push_back({l.b, false});
  };
  lin(p.proj);
  out.push_back({p.pos_emb, false});
  for (const BlockParams& b : p.blocks) {
    out.push_back({b.ln1.gamma, false});
    out.push_back({b.ln1.beta, false});
    lin(b.attn.q);
    lin(b.attn.k);
    lin(b.attn.v);
    lin(b.attn.o);
    out.push_back({b.ln2.gamma, false});
    out.push_back({b.ln2.beta, false});
    lin(b.fc1);
    lin(b.fc2);
  }
  lin(p.head);
  if (p.prototypes.learnable) out.push_back({p.prototypes.p, false});
  lin(p.pred1);
  lin(p.pred2);
  return out;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("train config: epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  // lr == 0 is allowed as an explicit null update (useful for plumbing checks)
  if (cfg.lr < 0.0) throw ConfigError("train config: lr must be >= 0");
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
    throw ConfigError("train config: betas must be in [0,1)");
  }
  if (cfg.weight_decay < 0.0) throw ConfigError("train config: weight_decay must be >= 0");
  if (cfg.e_star < 0) throw ConfigError("train config: e_star must be >= 0");
  LossConfig effective = cfg.loss;
  effective.e_star = cfg.e_star;
  validate(effective);
}

void adamw_update(std::vector<double>& values, const std::vector<double>& grads, AdamWSlot& slot,
                  int64_t step, double lr, double beta1, double beta2, double eps,
                  double weight_decay) {
  if (values.size() != grads.size()) {
    throw ShapeError("adamw_update: value/grad size mismatch");
  }
  if (slot.m.empty()) {
    slot.m.assign(values.size(), 0.0);
    slot.v.assign(values.size(), 0.0);
  }
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (size_t i = 0; i < values.size(); ++i) {
    const double g = grads[i];
    slot.m[i] = beta1 * slot.m[i] + (1.0 - beta1) * g;
    slot.v[i] = beta2 * slot.v[i] + (1.0 - beta2) * g * g;
    const double m_hat = slot.m[i] / bc1;
    const double v_hat = slot.v[i] / bc2;
    values[i] -= lr * weight_decay * values[i];  // decoupled decay
    values[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

AdamW::AdamW(const ModelParams& params, const TrainConfig& cfg) : cfg_(cfg) {
  for (const TaggedParam& tp : trainable_params(params)) {
    slots_.push_back({tp.tensor, {}, tp.decay});
  }
}

void AdamW::step() {
  ++step_count_;
  if (cfg_.grad_clip > 0.0) {
    double norm_sq = 0.0;
    for (const Slot& s : slots_) {
      for (double g : s.tensor.grad_values()) norm_sq += g * g;
    }
    const double norm = std::sqrt(norm_sq);
    if (norm > cfg_.grad_clip) {
      const double f = cfg_.grad_clip / norm;
      for (Slot& s : slots_) {
        Tensor t = s.tensor;
        for (size_t i = 0; i < t.size(); ++i) t.grad()[i] *= f;
      }
    }
  }
  for (Slot& s : slots_) {
    adamw_update(s.tensor.values(), s.tensor.impl()->grad, s.state, step_count_, cfg_.lr,
                 cfg_.beta1, cfg_.beta2, kAdamEps, s.decay ? cfg_.weight_decay : 0.0);
  }
}

LossBreakdown train_step(ModelParams& params, const std::vector<const SegmentFeatureSequence*>& batch,
                         int epoch, const TrainConfig& cfg, AdamW& optimizer) {
  if (batch.empty()) throw ConfigError("train_step: empty batch");
  const int t_len = batch.front()->t_len;
  for (const SegmentFeatureSequence* s : batch) {
    if (s->t_len != t_len) {
      throw ConfigError("train_step: batch mixes sequence lengths (" + std::to_string(s->t_len) +
                        " vs " + std::to_string(t_len) + ")");
    }
  }
  LossConfig loss_cfg = cfg.loss;
  loss_cfg.e_star = cfg.e_star;

  LossBreakdown mean;
  std::vector<Tensor> totals;
  totals.reserve(batch.size());
  for (const SegmentFeatureSequence* s : batch) {
    Tensor features = Tensor::from({s->t_len, s->d_enc}, s->features);
    ForwardOutputs outputs = forward_full(params, features);
    LossTerms terms = loss_total(outputs, s->label, epoch, loss_cfg);
    const LossBreakdown b = breakdown(terms);
    mean.l_dyn += b.l_dyn;
    mean.l_proto += b.l_proto;
    mean.l_reg += b.l_reg;
    mean.l_tot += b.l_tot;
    totals.push_back(terms.l_tot);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  mean.l_dyn *= inv;
  mean.l_proto *= inv;
  mean.l_reg *= inv;
  mean.l_tot *= inv;

  const struct {
    const char* name;
    double v;
  } components[] = {{"l_dyn", mean.l_dyn}, {"l_proto", mean.l_proto}, {"l_reg", mean.l_reg},
                    {"l_tot", mean.l_tot}};
  for (const auto& c : components) {
    if (!std::isfinite(c.v)) {
      throw NumericError(std::string("train_step: ") + c.name + " is non-finite at epoch " +
                         std::to_string(epoch));
    }
  }

  Tensor batch_loss = mean_of(totals);
  for (Tensor t : params.all_params()) t.zero_grad();
  backward(batch_loss);
  optimizer.step();
  return mean;
}

TrainReport fit(ModelParams& params, const Dataset& train_set, const Dataset& val_set,
                const TrainConfig& cfg, const std::string& best_checkpoint_path) {
  validate(cfg);
  if (train_set.samples.empty()) throw ConfigError("fit: empty training set");

  AdamW optimizer(params, cfg);
  Rng shuffle_rng(Rng::substream(cfg.seed, 3));
  std::vector<size_t> order(train_set.samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainReport report;
  const bool do_eval = cfg.eval_every > 0 && !val_set.samples.empty();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    shuffle_rng.shuffle(order);

    LossBreakdown epoch_mean;
    int steps = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<const SegmentFeatureSequence*> batch;
      batch.reserve(stop - start);
      for (size_t i = start; i < stop; ++i) batch.push_back(&train_set.samples[order[i]]);
      const LossBreakdown b = train_step(params, batch, epoch, cfg, optimizer);
      epoch_mean.l_dyn += b.l_dyn;
      epoch_mean.l_proto += b.l_proto;
      epoch_mean.l_reg += b.l_reg;
      epoch_mean.l_tot += b.l_tot;
      ++steps;
    }
    const double inv = 1.0 / steps;
    epoch_mean.l_dyn *= inv;
    epoch_mean.l_proto *= inv;
    epoch_mean.l_reg *= inv;
    epoch_mean.l_tot *= inv;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.mean_loss = epoch_mean;

    if (do_eval && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      EvalRecord ev;
      ev.curve = eval_curve(params, val_set);
      ev.auc_value = auc(ev.curve);
      if (report.best_epoch < 0 || ev.auc_value > report.best_auc) {
        report.best_epoch = epoch;
        report.best_auc = ev.auc_value;
        if (!best_checkpoint_path.empty()) save_checkpoint(params, best_checkpoint_path);
      }
      rec.eval = std::move(ev);
    }

    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.epochs.push_back(std::move(rec));
  }
  return report;
}

void write_report_jsonl(const TrainReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const EpochRecord& rec : report.epochs) {
    nlohmann::json j{{"epoch", rec.epoch},
                     {"l_dyn", rec.mean_loss.l_dyn},
                     {"l_proto", rec.mean_loss.l_proto},
                     {"l_reg", rec.mean_loss.l_reg},
                     {"l_tot", rec.mean_loss.l_tot},
                     {"wall_seconds", rec.wall_seconds}};
    if (rec.eval) {
      j["eval"] = {{"rho", rec.eval->curve.ratios},
                   {"top1", rec.eval->curve.top1},
                   {"auc", rec.eval->auc_value}};
    }
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("write failure on " + path);
}

}  // namespace earlyact
