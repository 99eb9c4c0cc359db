// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include "losses.hpp"

#include <cmath>

namespace earlyact {

namespace {

int seq_len(const ForwardOutputs& outputs) {
  if (!outputs.logits.defined() || outputs.logits.rank() != 2) {
    throw ShapeError("loss: outputs.logits must be [T,K]");
  }
  return outputs.logits.shape()[0];
}

}  // namespace

void validate(const LossConfig& cfg) {
  if (cfg.e_star < 0) throw ConfigError("loss config: e_star must be >= 0");
  if (cfg.mode_temporal == TemporalMode::dynamic_soft && cfg.alpha <= 0.0) {
    throw ConfigError("loss config: alpha must be > 0 for the soft switch");
  }
  if (cfg.epsilon_smooth < 0.0 || cfg.epsilon_smooth >= 1.0) {
    throw ConfigError("loss config: epsilon_smooth must be in [0,1)");
  }
}

Tensor loss_clf(const ForwardOutputs& outputs, int label, int t, double epsilon) {
  const int t_len = seq_len(outputs);
  if (t < 1 || t > t_len) {
    throw IndexError("loss_clf: t=" + std::to_string(t) + " out of range [1," +
                     std::to_string(t_len) + "]");
  }
  return cross_entropy_smoothed(row(outputs.logits, t - 1), label, epsilon);
}

Tensor loss_ol(const ForwardOutputs& outputs, int label, double epsilon) {
  return loss_clf(outputs, label, seq_len(outputs), epsilon);
}

Tensor loss_all(const ForwardOutputs& outputs, int label, double epsilon) {
  // fused row-mean cross-entropy; equals the explicit per-step average
  return cross_entropy_smoothed(outputs.logits, label, epsilon);
}

double soft_switch_weight(int epoch, const LossConfig& cfg) {
  return 1.0 / (1.0 + std::exp(cfg.alpha * (static_cast<double>(epoch) - cfg.e_star)));
}

Tensor loss_dyn(const ForwardOutputs& outputs, int label, int epoch, const LossConfig& cfg) {
  if (epoch < 0) throw ConfigError("loss_dyn: epoch must be >= 0");
  switch (cfg.mode_temporal) {
    case TemporalMode::only_last:
      return loss_ol(outputs, label, cfg.epsilon_smooth);
    case TemporalMode::all:
      return loss_all(outputs, label, cfg.epsilon_smooth);
    case TemporalMode::dynamic_hard:
      return epoch <= cfg.e_star ? loss_ol(outputs, label, cfg.epsilon_smooth)
                                 : loss_all(outputs, label, cfg.epsilon_smooth);
    case TemporalMode::dynamic_soft: {
      const double w = soft_switch_weight(epoch, cfg);
      return add(scale(loss_ol(outputs, label, cfg.epsilon_smooth), w),
                 scale(loss_all(outputs, label, cfg.epsilon_smooth), 1.0 - w));
    }
  }
  throw ConfigError("loss_dyn: unknown temporal mode");
}

Tensor loss_proto(const ForwardOutputs& outputs, int label) {
  if (!outputs.s_proto.defined()) throw ShapeError("loss_proto: outputs.s_proto missing");
  return cross_entropy_smoothed(outputs.s_proto, label, 0.0);
}

Tensor loss_reg(const ForwardOutputs& outputs, int label, const LossConfig& cfg) {
  switch (cfg.reg_mode) {
    case RegMode::none:
      return Tensor::scalar(0.0);
    case RegMode::prototypes:
      if (!outputs.s_reg.defined()) throw ShapeError("loss_reg: outputs.s_reg missing");
      return cross_entropy_smoothed(outputs.s_reg, label, 0.0);
    case RegMode::pred_next: {
      const int t_len = seq_len(outputs);
      if (t_len == 1) return Tensor::scalar(0.0);
      std::vector<Tensor> terms;
      terms.reserve(t_len - 1);
      for (int t = 0; t + 1 < t_len; ++t) {
        terms.push_back(mse(row(outputs.f_z, t), stop_grad(row(outputs.z, t + 1))));
      }
      return mean_of(terms);
    }
    case RegMode::pred_final: {
      const int t_len = seq_len(outputs);
      Tensor target = stop_grad(row(outputs.z, t_len - 1));
      std::vector<Tensor> terms;
      terms.reserve(t_len);
      for (int t = 0; t < t_len; ++t) {
        terms.push_back(mse(row(outputs.f_z, t), target));
      }
      return mean_of(terms);
    }
  }
  throw ConfigError("loss_reg: unknown reg mode");
}

LossTerms loss_total(const ForwardOutputs& outputs, int label, int epoch, const LossConfig& cfg) {
  LossTerms terms;
  terms.l_dyn = loss_dyn(outputs, label, epoch, cfg);
  terms.l_proto = cfg.reg_mode == RegMode::prototypes ? loss_proto(outputs, label)
                                                      : Tensor::scalar(0.0);
  terms.l_reg = loss_reg(outputs, label, cfg);
  terms.l_tot = add(add(terms.l_dyn, terms.l_proto), terms.l_reg);
  return terms;
}

LossBreakdown breakdown(const LossTerms& terms) {
  return {terms.l_dyn.item(), terms.l_proto.item(), terms.l_reg.item(), terms.l_tot.item()};
}

}  // namespace earlyact
