// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace earlyact {

// One sample: T segment feature vectors (row-major T x d_enc) and a label.
// Stands in for an encoded video clip sequence.
struct SegmentFeatureSequence {
  std::vector<double> features;
  int label = 0;
  int t_len = 0;
  int d_enc = 0;

  const double* segment(int t) const { return features.data() + static_cast<size_t>(t) * d_enc; }
};

struct Dataset {
  int k_classes = 0;
  int d_enc = 0;
  std::vector<SegmentFeatureSequence> samples;

  size_t size() const { return samples.size(); }
};

// Synthetic benchmark: classes come in pairs whose trajectories are
// identical for the first `ambiguity_depth` segments and separated by at
// least a unit L2 gap per segment afterwards. Early accuracy on paired
// classes is therefore capped at 50% by construction, which gives the
// metrics an analytically known ceiling.
struct SynthSpec {
  int k_classes = 6;
  int t_segments = 10;
  int d_enc = 16;
  double noise_sigma = 0.7;
  int ambiguity_depth = 4;  // segments shared between the classes of a pair
  int64_t n_train = 720;
  int64_t n_val = 720;
  uint64_t seed = 1;
};

void validate(const SynthSpec& spec);

struct SynthData {
  Dataset train;
  Dataset val;
  // Ground-truth class trajectories, K rows of t_segments*d_enc values.
  // Exposed for oracle-style verification; not part of the file format.
  std::vector<std::vector<double>> class_trajectories;
};

SynthData gen_synthetic(const SynthSpec& spec);

// EVPF container, little-endian: magic "EVPF", version u32=1, k_classes u32,
// d_enc u32, n_records u64; each record: label u32, T u32, T*d_enc float64.
void write_feature_file(const Dataset& dataset, const std::string& path);
Dataset read_feature_file(const std::string& path);

}  // namespace earlyact
