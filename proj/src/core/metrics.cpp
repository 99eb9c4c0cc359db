// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include "metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace earlyact {

AccuracyCurve eval_curve(const ModelParams& params, const Dataset& dataset) {
  if (dataset.samples.empty()) throw ConfigError("eval_curve: empty dataset");
  if (dataset.d_enc != params.cfg.d_enc) {
    throw ConfigError("eval_curve: dataset d_enc=" + std::to_string(dataset.d_enc) +
                      " does not match model d_enc=" + std::to_string(params.cfg.d_enc));
  }
  if (dataset.k_classes > params.cfg.k_classes) {
    throw ConfigError("eval_curve: dataset k_classes=" + std::to_string(dataset.k_classes) +
                      " exceeds model k_classes=" + std::to_string(params.cfg.k_classes));
  }
  const int t_len = dataset.samples.front().t_len;
  for (size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.samples[i].t_len != t_len) {
      throw ConfigError("eval_curve: mixed sequence lengths (sample " + std::to_string(i) +
                        " has T=" + std::to_string(dataset.samples[i].t_len) + ", expected " +
                        std::to_string(t_len) + ")");
    }
  }

  std::vector<int64_t> correct(t_len, 0);
  NoGradGuard no_grad;
  const int k = params.cfg.k_classes;
  for (const SegmentFeatureSequence& s : dataset.samples) {
    Tensor features = Tensor::from({s.t_len, s.d_enc}, s.features);
    ForwardOutputs fo = forward_full(params, features);
    for (int t = 0; t < t_len; ++t) {
      const double* lrow = fo.logits.data() + static_cast<size_t>(t) * k;
      int best = 0;
      for (int j = 1; j < k; ++j)
        if (lrow[j] > lrow[best]) best = j;  // ties -> lowest index
      if (best == s.label) ++correct[t];
    }
  }

  AccuracyCurve curve;
  curve.ratios.resize(t_len);
  curve.top1.resize(t_len);
  const double n = static_cast<double>(dataset.samples.size());
  for (int t = 0; t < t_len; ++t) {
    curve.ratios[t] = static_cast<double>(t + 1) / t_len;
    curve.top1[t] = static_cast<double>(correct[t]) / n;
  }
  return curve;
}

double auc(const AccuracyCurve& curve) {
  const size_t n = curve.ratios.size();
  if (n != curve.top1.size()) throw ConfigError("auc: ratio/accuracy length mismatch");
  if (n < 2) throw ConfigError("auc: need at least 2 points, got " + std::to_string(n));
  for (size_t i = 1; i < n; ++i) {
    if (curve.ratios[i] <= curve.ratios[i - 1]) {
      throw ConfigError("auc: ratios must be strictly increasing");
    }
  }
  double area = 0.0;
  for (size_t i = 1; i < n; ++i) {
    area += (curve.ratios[i] - curve.ratios[i - 1]) * 0.5 * (curve.top1[i] + curve.top1[i - 1]);
  }
  return area;
}

void write_metrics_csv(const AccuracyCurve& curve, std::ostream& out) {
  char buf[64];
  out << "rho,top1\n";
  for (size_t i = 0; i < curve.ratios.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g", curve.ratios[i], curve.top1[i]);
    out << buf << "\n";
  }
  std::snprintf(buf, sizeof(buf), "auc,%.10g", auc(curve));
  out << buf << "\n";
}

void write_metrics_csv_file(const AccuracyCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_metrics_csv(curve, out);
  if (!out) throw IoError("write failure on " + path);
}

AccuracyCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  AccuracyCurve curve;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("rho,", 0) == 0 && line_no == 1) continue;  // header
    if (line.rfind("auc,", 0) == 0) continue;                   // trailer, recomputed
    const size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": expected `rho,top1`");
    }
    try {
      size_t used = 0;
      const double r = std::stod(line.substr(0, comma), &used);
      const double a = std::stod(line.substr(comma + 1), &used);
      curve.ratios.push_back(r);
      curve.top1.push_back(a);
    } catch (const std::exception&) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": malformed number");
    }
  }
  if (curve.ratios.empty()) throw ParseError(path + ": no curve rows found");
  return curve;
}

}  // namespace earlyact
