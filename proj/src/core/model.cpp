// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include "model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>

namespace earlyact {

namespace {

constexpr double kInitStd = 0.02;
constexpr uint32_t kCheckpointVersion = 1;
constexpr uint32_t kFlagPrototypesLearnable = 1u << 0;

LinearParams init_linear(Rng& rng, int in, int out) {
  return {Tensor::randn({in, out}, rng, kInitStd, true), Tensor::zeros({out}, true)};
}

LayerNormParams init_norm(int d) {
  return {Tensor::full({d}, 1.0, true), Tensor::zeros({d}, true)};
}

void push_linear(std::vector<Tensor>& out, const LinearParams& p) {
  out.push_back(p.w);
  out.push_back(p.b);
}

void push_block(std::vector<Tensor>& out, const BlockParams& b) {
  out.push_back(b.ln1.gamma);
  out.push_back(b.ln1.beta);
  push_linear(out, b.attn.q);
  push_linear(out, b.attn.k);
  push_linear(out, b.attn.v);
  push_linear(out, b.attn.o);
  out.push_back(b.ln2.gamma);
  out.push_back(b.ln2.beta);
  push_linear(out, b.fc1);
  push_linear(out, b.fc2);
}

// Pre-norm decoder stack shared by the batched and streaming paths: both
// must run the exact same arithmetic for the streaming-equivalence
// guarantee to hold.
Tensor run_decoder(const ModelParams& params, Tensor u, int n_heads) {
  for (const BlockParams& b : params.blocks) {
    u = add(u, causal_mhsa(layer_norm(u, b.ln1.gamma, b.ln1.beta), b.attn, n_heads));
    Tensor m = linear(gelu(linear(layer_norm(u, b.ln2.gamma, b.ln2.beta), b.fc1.w, b.fc1.b)),
                      b.fc2.w, b.fc2.b);
    u = add(u, m);
  }
  return u;
}

Tensor predictor_forward(const ModelParams& params, const Tensor& z) {
  return linear(gelu(linear(z, params.pred1.w, params.pred1.b)), params.pred2.w, params.pred2.b);
}

}  // namespace

void validate(const ModelConfig& cfg) {
  if (cfg.d_enc < 1 || cfg.d < 1 || cfg.n_blocks < 1 || cfg.n_heads < 1 || cfg.t_max < 1 ||
      cfg.k_classes < 1 || cfg.predictor_hidden < 1) {
    throw ConfigError("model config: all extents must be >= 1");
  }
  if (cfg.d % cfg.n_heads != 0) {
    throw ConfigError("model config: d=" + std::to_string(cfg.d) + " not divisible by n_heads=" +
                      std::to_string(cfg.n_heads));
  }
}

std::vector<Tensor> ModelParams::all_params() const {
  std::vector<Tensor> out;
  push_linear(out, proj);
  out.push_back(pos_emb);
  for (const BlockParams& b : blocks) push_block(out, b);
  push_linear(out, head);
  out.push_back(prototypes.p);
  push_linear(out, pred1);
  push_linear(out, pred2);
  return out;
}

std::vector<Tensor> ModelParams::encoder_side_params() const {
  std::vector<Tensor> out;
  push_linear(out, proj);
  out.push_back(pos_emb);
  for (const BlockParams& b : blocks) push_block(out, b);
  push_linear(out, head);
  return out;
}

std::vector<Tensor> ModelParams::predictor_params() const {
  std::vector<Tensor> out;
  push_linear(out, pred1);
  push_linear(out, pred2);
  return out;
}

ModelParams init_params(const ModelConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);
  ModelParams p;
  p.cfg = cfg;
  p.proj = init_linear(rng, cfg.d_enc, cfg.d);
  p.pos_emb = Tensor::randn({cfg.t_max, cfg.d}, rng, kInitStd, true);
  p.blocks.reserve(cfg.n_blocks);
  for (int i = 0; i < cfg.n_blocks; ++i) {
    BlockParams b;
    b.ln1 = init_norm(cfg.d);
    b.attn.q = init_linear(rng, cfg.d, cfg.d);
    b.attn.k = init_linear(rng, cfg.d, cfg.d);
    b.attn.v = init_linear(rng, cfg.d, cfg.d);
    b.attn.o = init_linear(rng, cfg.d, cfg.d);
    b.ln2 = init_norm(cfg.d);
    b.fc1 = init_linear(rng, cfg.d, 4 * cfg.d);
    b.fc2 = init_linear(rng, 4 * cfg.d, cfg.d);
    p.blocks.push_back(std::move(b));
  }
  p.head = init_linear(rng, cfg.d, cfg.k_classes);
  p.prototypes.p = Tensor::randn({cfg.k_classes, cfg.d}, rng, kInitStd, true);
  p.pred1 = init_linear(rng, cfg.d, cfg.predictor_hidden);
  p.pred2 = init_linear(rng, cfg.predictor_hidden, cfg.d);
  return p;
}

ModelParams clone_params(const ModelParams& params) {
  ModelParams out;
  out.cfg = params.cfg;
  auto lin = [](const LinearParams& l) { return LinearParams{clone(l.w), clone(l.b)}; };
  out.proj = lin(params.proj);
  out.pos_emb = clone(params.pos_emb);
  out.blocks.reserve(params.blocks.size());
  for (const BlockParams& b : params.blocks) {
    BlockParams nb;
    nb.ln1 = {clone(b.ln1.gamma), clone(b.ln1.beta)};
    nb.attn = {lin(b.attn.q), lin(b.attn.k), lin(b.attn.v), lin(b.attn.o)};
    nb.ln2 = {clone(b.ln2.gamma), clone(b.ln2.beta)};
    nb.fc1 = lin(b.fc1);
    nb.fc2 = lin(b.fc2);
    out.blocks.push_back(std::move(nb));
  }
  out.head = lin(params.head);
  out.prototypes = {clone(params.prototypes.p), params.prototypes.learnable};
  out.pred1 = lin(params.pred1);
  out.pred2 = lin(params.pred2);
  return out;
}

ForwardOutputs forward_full(const ModelParams& params, const Tensor& features) {
  const ModelConfig& cfg = params.cfg;
  if (features.rank() != 2 || features.shape()[1] != cfg.d_enc) {
    throw ShapeError("forward_full: features must be [T," + std::to_string(cfg.d_enc) +
                     "], got " + Tensor::shape_str(features.shape()));
  }
  const int t_len = features.shape()[0];
  if (t_len < 1) throw ShapeError("forward_full: empty sequence");
  if (t_len > cfg.t_max) {
    throw CapacityError("forward_full: T=" + std::to_string(t_len) + " exceeds t_max=" +
                        std::to_string(cfg.t_max));
  }

  ForwardOutputs out;
  out.z_enc = linear(features, params.proj.w, params.proj.b);
  Tensor u = add(out.z_enc, slice_rows(params.pos_emb, 0, t_len));
  out.z = run_decoder(params, u, cfg.n_heads);
  out.logits = linear(out.z, params.head.w, params.head.b);
  out.s_proto = neg_l2_scores(stop_grad(row(out.z, t_len - 1)), params.prototypes.p);
  out.f_z = predictor_forward(params, out.z);
  out.s_reg = neg_l2_scores(out.f_z, stop_grad(params.prototypes.p));
  return out;
}

std::vector<double> forward_step(const ModelParams& params, IncrementalState& state,
                                 const std::vector<double>& feature) {
  const ModelConfig& cfg = params.cfg;
  if (static_cast<int>(feature.size()) != cfg.d_enc) {
    throw ShapeError("forward_step: feature width " + std::to_string(feature.size()) +
                     " does not match d_enc=" + std::to_string(cfg.d_enc));
  }
  if (state.steps >= cfg.t_max) {
    throw CapacityError("forward_step: session already holds t_max=" + std::to_string(cfg.t_max) +
                        " segments");
  }

  NoGradGuard no_grad;
  const int t = state.steps;
  const int d = cfg.d;

  // proj(feature) + pos_emb[t]; same accumulation order as the batched path.
  std::vector<double> new_row(d, 0.0);
  for (int i = 0; i < cfg.d_enc; ++i) {
    const double xv = feature[i];
    for (int o = 0; o < d; ++o) new_row[o] += xv * params.proj.w.data()[i * d + o];
  }
  for (int o = 0; o < d; ++o) {
    new_row[o] += params.proj.b.data()[o];
    new_row[o] += params.pos_emb.data()[t * d + o];
  }

  if (state.store_f32) {
    for (double v : new_row) state.rows_f32.push_back(static_cast<float>(v));
  } else {
    state.rows.insert(state.rows.end(), new_row.begin(), new_row.end());
  }
  state.steps = t + 1;

  std::vector<double> u_data(static_cast<size_t>(state.steps) * d);
  if (state.store_f32) {
    for (size_t i = 0; i < u_data.size(); ++i) u_data[i] = static_cast<double>(state.rows_f32[i]);
  } else {
    u_data = state.rows;
  }
  Tensor u = Tensor::from({state.steps, d}, std::move(u_data));
  Tensor z = run_decoder(params, u, cfg.n_heads);
  Tensor probs = softmax(linear(row(z, t), params.head.w, params.head.b), 0);
  return probs.values();
}

void export_embeddings(const ModelParams& params, const Dataset& dataset, std::ostream& out) {
  const int d = params.cfg.d;
  if (dataset.d_enc != params.cfg.d_enc) {
    throw ConfigError("export_embeddings: dataset d_enc=" + std::to_string(dataset.d_enc) +
                      " does not match model d_enc=" + std::to_string(params.cfg.d_enc));
  }
  out << "kind,class";
  for (int i = 0; i < d; ++i) out << ",dim" << i;
  out << "\n";

  char num[64];
  auto put_row = [&](const char* kind, int label, const double* v) {
    out << kind << "," << label;
    for (int i = 0; i < d; ++i) {
      std::snprintf(num, sizeof(num), "%.17g", v[i]);
      out << "," << num;
    }
    out << "\n";
  };

  for (int k = 0; k < params.cfg.k_classes; ++k) {
    put_row("prototype", k, params.prototypes.p.data() + static_cast<size_t>(k) * d);
  }
  NoGradGuard no_grad;
  for (const SegmentFeatureSequence& s : dataset.samples) {
    Tensor features = Tensor::from({s.t_len, s.d_enc}, s.features);
    ForwardOutputs fo = forward_full(params, features);
    put_row("final_feature", s.label, fo.z.data() + static_cast<size_t>(s.t_len - 1) * d);
  }
}

void export_embeddings_file(const ModelParams& params, const Dataset& dataset,
                            const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  export_embeddings(params, dataset, out);
  if (!out) throw IoError("write failure on " + path);
}

namespace {

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct CheckpointReader {
  const std::string& bytes;
  size_t offset = 0;

  void need(size_t n, const char* what) const {
    if (offset + n > bytes.size()) {
      throw ParseError(std::string("truncated checkpoint: expected ") + what + " at offset " +
                       std::to_string(offset));
    }
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    offset += 4;
    return v;
  }
  uint64_t u64(const char* what) {
    need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    offset += 8;
    return v;
  }
};

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::string buf;
  buf += "EVPC";
  put_u32(buf, kCheckpointVersion);
  const ModelConfig& c = params.cfg;
  put_u32(buf, static_cast<uint32_t>(c.d_enc));
  put_u32(buf, static_cast<uint32_t>(c.d));
  put_u32(buf, static_cast<uint32_t>(c.n_blocks));
  put_u32(buf, static_cast<uint32_t>(c.n_heads));
  put_u32(buf, static_cast<uint32_t>(c.t_max));
  put_u32(buf, static_cast<uint32_t>(c.k_classes));
  put_u32(buf, static_cast<uint32_t>(c.predictor_hidden));
  put_u64(buf, c.seed);
  put_u32(buf, params.prototypes.learnable ? kFlagPrototypesLearnable : 0);
  for (const Tensor& t : params.all_params()) {
    for (double v : t.values()) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      put_u64(buf, bits);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failure on " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);

  CheckpointReader r{bytes};
  r.need(4, "magic");
  if (bytes.compare(0, 4, "EVPC") != 0) throw ParseError("bad magic at offset 0 in " + path);
  r.offset = 4;
  const uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig c;
  c.d_enc = static_cast<int>(r.u32("d_enc"));
  c.d = static_cast<int>(r.u32("d"));
  c.n_blocks = static_cast<int>(r.u32("n_blocks"));
  c.n_heads = static_cast<int>(r.u32("n_heads"));
  c.t_max = static_cast<int>(r.u32("t_max"));
  c.k_classes = static_cast<int>(r.u32("k_classes"));
  c.predictor_hidden = static_cast<int>(r.u32("predictor_hidden"));
  c.seed = r.u64("seed");
  const uint32_t flags = r.u32("flags");
  validate(c);

  ModelParams params = init_params(c);
  params.prototypes.learnable = (flags & kFlagPrototypesLearnable) != 0;
  for (Tensor t : params.all_params()) {
    for (double& v : t.values()) {
      const uint64_t bits = r.u64("parameter payload");
      std::memcpy(&v, &bits, sizeof(v));
    }
  }
  if (r.offset != bytes.size()) {
    throw ParseError("trailing bytes at offset " + std::to_string(r.offset));
  }
  return params;
}

}  // namespace earlyact
