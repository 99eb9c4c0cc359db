// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dataio.hpp"
#include "model.hpp"

namespace earlyact {

// Top-1 accuracy per observation ratio rho = t/T, ratios ascending.
struct AccuracyCurve {
  std::vector<double> ratios;
  std::vector<double> top1;
};

// Evaluates argmax accuracy of logits row t for every t. All samples must
// share the same T (padding/bucketing is the caller's job).
AccuracyCurve eval_curve(const ModelParams& params, const Dataset& dataset);

// Trapezoidal integral of accuracy over rho between the first and last
// ratio. Keeps the units of the inputs (per-cent accuracies give the
// published per-cent AUC values).
double auc(const AccuracyCurve& curve);

// CSV: `rho,top1` header, one row per ratio, trailing `auc,<value>` row.
void write_metrics_csv(const AccuracyCurve& curve, std::ostream& out);
void write_metrics_csv_file(const AccuracyCurve& curve, const std::string& path);

// Accepts the writer's output or a bare two-column file; a trailing auc row
// is ignored so curves can be re-scored.
AccuracyCurve read_curve_csv(const std::string& path);

}  // namespace earlyact
