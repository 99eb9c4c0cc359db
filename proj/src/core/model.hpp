// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dataio.hpp"
#include "ops.hpp"
#include "tensor.hpp"

namespace earlyact {

struct ModelConfig {
  int d_enc = 16;            // encoder feature width fed to the projection
  int d = 32;                // decoder width
  int n_blocks = 2;          // decoder depth
  int n_heads = 4;
  int t_max = 10;            // maximum number of segments
  int k_classes = 6;
  int predictor_hidden = 32; // hidden width of the feature predictor MLP
  uint64_t seed = 1;
};

void validate(const ModelConfig& cfg);

// Per-class learnable embeddings, one row per class. `learnable` lets a
// training phase freeze the bank (the optimizer skips it when false).
struct PrototypeBank {
  Tensor p;  // [K, d]
  bool learnable = true;
};

struct LayerNormParams {
  Tensor gamma, beta;
};

struct BlockParams {
  LayerNormParams ln1;
  MhsaParams attn;
  LayerNormParams ln2;
  LinearParams fc1, fc2;  // GELU MLP, hidden 4*d
};

struct ModelParams {
  ModelConfig cfg;
  LinearParams proj;        // d_enc -> d
  Tensor pos_emb;           // [t_max, d], learnable absolute positions
  std::vector<BlockParams> blocks;
  LinearParams head;        // d -> K
  PrototypeBank prototypes;
  LinearParams pred1, pred2;  // predictor MLP d -> hidden -> d

  // Declaration order; checkpoint layout and optimizer slots follow it.
  std::vector<Tensor> all_params() const;
  // Projection + positions + decoder blocks + head (everything the
  // classification path trains).
  std::vector<Tensor> encoder_side_params() const;
  std::vector<Tensor> predictor_params() const;
};

ModelParams init_params(const ModelConfig& cfg);

// Deep copy: fresh parameter storage, no shared buffers with the source.
ModelParams clone_params(const ModelParams& params);

// Everything a single forward pass produces. Tensors stay attached to the
// graph so losses can be built on top of them.
struct ForwardOutputs {
  Tensor z_enc;    // [T, d] projected features
  Tensor z;        // [T, d] decoder features
  Tensor logits;   // [T, K]
  Tensor s_proto;  // [K]   -||P(k) - sg(z(T))||
  Tensor s_reg;    // [T,K] -||sg(P(k)) - f(z(t))||
  Tensor f_z;      // [T, d] predictor outputs f(z(t))
};

// Full-sequence forward with causal masking. features: [T, d_enc], T <= t_max.
ForwardOutputs forward_full(const ModelParams& params, const Tensor& features);

// Streaming state: keeps only the projected (+ positional) segment features
// seen so far; raw features are never needed again. The f32 option stores
// them at 32-bit precision to halve the memory of long-lived sessions.
struct IncrementalState {
  int steps = 0;
  bool store_f32 = false;
  std::vector<double> rows;      // steps * d, when store_f32 == false
  std::vector<float> rows_f32;   // steps * d, when store_f32 == true
};

// Appends one segment and re-evaluates the decoder over the stored prefix.
// Returns class probabilities for the newest step.
std::vector<double> forward_step(const ModelParams& params, IncrementalState& state,
                                 const std::vector<double>& feature);

// One row per prototype plus one per sample final feature z(T), written as
// CSV: header `kind,class,dim0..dim{d-1}`, floats with 17 significant digits.
void export_embeddings(const ModelParams& params, const Dataset& dataset, std::ostream& out);
void export_embeddings_file(const ModelParams& params, const Dataset& dataset,
                            const std::string& path);

// Checkpoint: magic "EVPC", version u32 LE, config block, then parameter
// tensors in declaration order as little-endian float64.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace earlyact
