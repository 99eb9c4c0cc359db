// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "model.hpp"
#include "tensor.hpp"

namespace earlyact {

enum class TemporalMode { only_last, all, dynamic_hard, dynamic_soft };
enum class RegMode { prototypes, pred_next, pred_final, none };

struct LossConfig {
  TemporalMode mode_temporal = TemporalMode::dynamic_hard;
  int e_star = 15;             // switch epoch; epochs <= e_star use the last-step loss
  double alpha = 1.0;          // smoothness of the soft switch
  double epsilon_smooth = 0.1; // label smoothing on the classification loss only
  RegMode reg_mode = RegMode::prototypes;
};

void validate(const LossConfig& cfg);

// Scalar loss tensors, still attached to the graph. total = dyn+proto+reg.
struct LossTerms {
  Tensor l_dyn, l_proto, l_reg, l_tot;
};

struct LossBreakdown {
  double l_dyn = 0.0, l_proto = 0.0, l_reg = 0.0, l_tot = 0.0;
};

// Smoothed cross-entropy on logits row t (1-based t in [1, T]).
Tensor loss_clf(const ForwardOutputs& outputs, int label, int t, double epsilon);

// Last-step-only classification loss.
Tensor loss_ol(const ForwardOutputs& outputs, int label, double epsilon);

// Mean classification loss over all temporal steps.
Tensor loss_all(const ForwardOutputs& outputs, int label, double epsilon);

// Epoch-scheduled classification loss. Hard mode returns exactly loss_ol or
// loss_all; soft mode blends them with w(e) = sigmoid(-alpha*(e - e_star)).
Tensor loss_dyn(const ForwardOutputs& outputs, int label, int epoch, const LossConfig& cfg);

// Prototype learning: unsmoothed cross-entropy over softmax of the
// -||P(k) - sg(z(T))|| scores. Updates only the prototype bank.
Tensor loss_proto(const ForwardOutputs& outputs, int label);

// Regularization chosen by reg_mode; pred_next with T=1 is defined as 0.
Tensor loss_reg(const ForwardOutputs& outputs, int label, const LossConfig& cfg);

// Unweighted sum of the three terms. The prototype loss participates only
// in prototypes mode; the other modes train no prototype bank at all.
LossTerms loss_total(const ForwardOutputs& outputs, int label, int epoch, const LossConfig& cfg);

LossBreakdown breakdown(const LossTerms& terms);

double soft_switch_weight(int epoch, const LossConfig& cfg);

}  // namespace earlyact
