// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
//
// extern-C surface. Exceptions from the core are caught at this boundary
// and mapped to status codes; the message is parked in a thread-local
// buffer for ea_last_error().
#include "earlyact/earlyact.h"

#include <cstring>
#include <memory>
#include <string>

#include "core/dataio.hpp"
#include "core/errors.hpp"
#include "core/losses.hpp"
#include "core/metrics.hpp"
#include "core/model.hpp"
#include "core/trainer.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

ea_status classify(const std::exception& e) {
  using namespace earlyact;
  if (dynamic_cast<const ConfigError*>(&e)) return EA_ERR_CONFIG;
  if (dynamic_cast<const ShapeError*>(&e)) return EA_ERR_SHAPE;
  if (dynamic_cast<const IndexError*>(&e)) return EA_ERR_INDEX;
  if (dynamic_cast<const CapacityError*>(&e)) return EA_ERR_CAPACITY;
  if (dynamic_cast<const NumericError*>(&e)) return EA_ERR_NUMERIC;
  if (dynamic_cast<const ParseError*>(&e)) return EA_ERR_PARSE;
  if (dynamic_cast<const IoError*>(&e)) return EA_ERR_IO;
  return EA_ERR_UNKNOWN;
}

template <typename Fn>
ea_status guarded(Fn&& fn) {
  try {
    fn();
    return EA_OK;
  } catch (const std::exception& e) {
    set_error(e.what());
    return classify(e);
  } catch (...) {
    set_error("unknown error");
    return EA_ERR_UNKNOWN;
  }
}

ea_status invalid_argument(const char* msg) {
  set_error(msg);
  return EA_ERR_CONFIG;
}

}  // namespace

struct ea_dataset {
  earlyact::Dataset data;
};

struct ea_model {
  // shared so live sessions keep the parameters alive after ea_model_free
  std::shared_ptr<const earlyact::ModelParams> params;
};

struct ea_session {
  std::shared_ptr<const earlyact::ModelParams> params;
  earlyact::IncrementalState state;
};

extern "C" {

const char* ea_version(void) { return "1.0.0"; }

const char* ea_last_error(void) { return g_last_error.c_str(); }

void ea_model_config_default(ea_model_config* cfg) {
  if (!cfg) return;
  const earlyact::ModelConfig d;
  *cfg = {d.d_enc, d.d, d.n_blocks, d.n_heads, d.t_max, d.k_classes, d.predictor_hidden, d.seed};
}

void ea_train_config_default(ea_train_config* cfg) {
  if (!cfg) return;
  const earlyact::TrainConfig d;
  cfg->epochs = d.epochs;
  cfg->e_star = d.e_star;
  cfg->batch_size = d.batch_size;
  cfg->lr = d.lr;
  cfg->beta1 = d.beta1;
  cfg->beta2 = d.beta2;
  cfg->weight_decay = d.weight_decay;
  cfg->grad_clip = d.grad_clip;
  cfg->seed = d.seed;
  cfg->temporal_mode = static_cast<int32_t>(d.loss.mode_temporal);
  cfg->reg_mode = static_cast<int32_t>(d.loss.reg_mode);
  cfg->alpha = d.loss.alpha;
  cfg->label_smoothing = d.loss.epsilon_smooth;
  cfg->eval_every = d.eval_every;
}

void ea_synth_spec_default(ea_synth_spec* spec) {
  if (!spec) return;
  const earlyact::SynthSpec d;
  spec->k_classes = d.k_classes;
  spec->t_segments = d.t_segments;
  spec->d_enc = d.d_enc;
  spec->noise_sigma = d.noise_sigma;
  spec->ambiguity_depth = d.ambiguity_depth;
  spec->n_train = d.n_train;
  spec->n_val = d.n_val;
  spec->seed = d.seed;
}

ea_status ea_dataset_generate(const ea_synth_spec* spec, ea_dataset** train, ea_dataset** val) {
  if (!spec) return invalid_argument("ea_dataset_generate: spec is NULL");
  if (train) *train = nullptr;
  if (val) *val = nullptr;
  return guarded([&] {
    earlyact::SynthSpec s;
    s.k_classes = spec->k_classes;
    s.t_segments = spec->t_segments;
    s.d_enc = spec->d_enc;
    s.noise_sigma = spec->noise_sigma;
    s.ambiguity_depth = spec->ambiguity_depth;
    s.n_train = spec->n_train;
    s.n_val = spec->n_val;
    s.seed = spec->seed;
    earlyact::SynthData data = earlyact::gen_synthetic(s);
    if (train) *train = new ea_dataset{std::move(data.train)};
    if (val) *val = new ea_dataset{std::move(data.val)};
  });
}

ea_status ea_dataset_read(const char* path, ea_dataset** out) {
  if (!path || !out) return invalid_argument("ea_dataset_read: NULL argument");
  *out = nullptr;
  return guarded([&] { *out = new ea_dataset{earlyact::read_feature_file(path)}; });
}

ea_status ea_dataset_write(const ea_dataset* ds, const char* path) {
  if (!ds || !path) return invalid_argument("ea_dataset_write: NULL argument");
  return guarded([&] { earlyact::write_feature_file(ds->data, path); });
}

void ea_dataset_free(ea_dataset* ds) { delete ds; }

int64_t ea_dataset_size(const ea_dataset* ds) {
  return ds ? static_cast<int64_t>(ds->data.samples.size()) : 0;
}

int32_t ea_dataset_classes(const ea_dataset* ds) { return ds ? ds->data.k_classes : 0; }

int32_t ea_dataset_feature_dim(const ea_dataset* ds) { return ds ? ds->data.d_enc : 0; }

ea_status ea_dataset_sample(const ea_dataset* ds, int64_t index, int32_t* label, int32_t* t_len,
                            double* features, int64_t cap) {
  if (!ds) return invalid_argument("ea_dataset_sample: dataset is NULL");
  return guarded([&] {
    if (index < 0 || index >= static_cast<int64_t>(ds->data.samples.size())) {
      throw earlyact::IndexError("sample index " + std::to_string(index) + " out of range for " +
                                 std::to_string(ds->data.samples.size()) + " samples");
    }
    const earlyact::SegmentFeatureSequence& s = ds->data.samples[static_cast<size_t>(index)];
    if (label) *label = s.label;
    if (t_len) *t_len = s.t_len;
    if (features) {
      if (cap < static_cast<int64_t>(s.features.size())) {
        throw earlyact::ShapeError("feature buffer too small: need " +
                                   std::to_string(s.features.size()) + " doubles");
      }
      std::memcpy(features, s.features.data(), s.features.size() * sizeof(double));
    }
  });
}

ea_status ea_model_create(const ea_model_config* cfg, ea_model** out) {
  if (!cfg || !out) return invalid_argument("ea_model_create: NULL argument");
  *out = nullptr;
  return guarded([&] {
    earlyact::ModelConfig c;
    c.d_enc = cfg->d_enc;
    c.d = cfg->d;
    c.n_blocks = cfg->n_blocks;
    c.n_heads = cfg->n_heads;
    c.t_max = cfg->t_max;
    c.k_classes = cfg->k_classes;
    c.predictor_hidden = cfg->predictor_hidden;
    c.seed = cfg->seed;
    *out = new ea_model{
        std::make_shared<const earlyact::ModelParams>(earlyact::init_params(c))};
  });
}

void ea_model_free(ea_model* model) { delete model; }

ea_status ea_model_get_config(const ea_model* model, ea_model_config* out) {
  if (!model || !out) return invalid_argument("ea_model_get_config: NULL argument");
  const earlyact::ModelConfig& c = model->params->cfg;
  *out = {c.d_enc, c.d, c.n_blocks, c.n_heads, c.t_max, c.k_classes, c.predictor_hidden, c.seed};
  return EA_OK;
}

ea_status ea_model_save(const ea_model* model, const char* path) {
  if (!model || !path) return invalid_argument("ea_model_save: NULL argument");
  return guarded([&] { earlyact::save_checkpoint(*model->params, path); });
}

ea_status ea_model_load(const char* path, ea_model** out) {
  if (!path || !out) return invalid_argument("ea_model_load: NULL argument");
  *out = nullptr;
  return guarded([&] {
    *out = new ea_model{
        std::make_shared<const earlyact::ModelParams>(earlyact::load_checkpoint(path))};
  });
}

ea_status ea_model_train(ea_model* model, const ea_dataset* train_set, const ea_dataset* val_set,
                         const ea_train_config* cfg, const char* report_jsonl_path,
                         const char* best_checkpoint_path) {
  if (!model || !train_set || !cfg) return invalid_argument("ea_model_train: NULL argument");
  return guarded([&] {
    earlyact::TrainConfig t;
    t.epochs = cfg->epochs;
    t.e_star = cfg->e_star;
    t.batch_size = cfg->batch_size;
    t.lr = cfg->lr;
    t.beta1 = cfg->beta1;
    t.beta2 = cfg->beta2;
    t.weight_decay = cfg->weight_decay;
    t.grad_clip = cfg->grad_clip;
    t.seed = cfg->seed;
    t.eval_every = cfg->eval_every;
    if (cfg->temporal_mode < 0 || cfg->temporal_mode > 3) {
      throw earlyact::ConfigError("temporal_mode must be in [0,3]");
    }
    if (cfg->reg_mode < 0 || cfg->reg_mode > 3) {
      throw earlyact::ConfigError("reg_mode must be in [0,3]");
    }
    t.loss.mode_temporal = static_cast<earlyact::TemporalMode>(cfg->temporal_mode);
    t.loss.reg_mode = static_cast<earlyact::RegMode>(cfg->reg_mode);
    t.loss.alpha = cfg->alpha;
    t.loss.epsilon_smooth = cfg->label_smoothing;

    // Trains on a private copy, then swaps it in, so the handle stays
    // usable if training throws.
    auto working = std::make_shared<earlyact::ModelParams>(
        earlyact::clone_params(*model->params));
    static const earlyact::Dataset kEmpty;
    const earlyact::Dataset& val = val_set ? val_set->data : kEmpty;
    earlyact::TrainReport report =
        earlyact::fit(*working, train_set->data, val, t,
                      best_checkpoint_path ? std::string(best_checkpoint_path) : std::string());
    if (report_jsonl_path && report_jsonl_path[0]) {
      earlyact::write_report_jsonl(report, report_jsonl_path);
    }
    model->params = std::move(working);
  });
}

ea_status ea_model_eval(const ea_model* model, const ea_dataset* ds, double* rho, double* top1,
                        int32_t cap, int32_t* n_points, double* auc_out) {
  if (!model || !ds) return invalid_argument("ea_model_eval: NULL argument");
  return guarded([&] {
    const earlyact::AccuracyCurve curve = earlyact::eval_curve(*model->params, ds->data);
    const int32_t n = static_cast<int32_t>(curve.ratios.size());
    if (n_points) *n_points = n;
    if (rho || top1) {
      if (cap < n) {
        throw earlyact::ShapeError("curve buffer too small: need " + std::to_string(n) +
                                   " points");
      }
      for (int32_t i = 0; i < n; ++i) {
        if (rho) rho[i] = curve.ratios[i];
        if (top1) top1[i] = curve.top1[i];
      }
    }
    if (auc_out) *auc_out = earlyact::auc(curve);
  });
}

ea_status ea_model_export_embeddings(const ea_model* model, const ea_dataset* ds,
                                     const char* csv_path) {
  if (!model || !ds || !csv_path) {
    return invalid_argument("ea_model_export_embeddings: NULL argument");
  }
  return guarded([&] { earlyact::export_embeddings_file(*model->params, ds->data, csv_path); });
}

ea_status ea_session_create(const ea_model* model, int32_t store_f32, ea_session** out) {
  if (!model || !out) return invalid_argument("ea_session_create: NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto* s = new ea_session{model->params, {}};
    s->state.store_f32 = store_f32 != 0;
    *out = s;
  });
}

void ea_session_free(ea_session* session) { delete session; }

ea_status ea_session_reset(ea_session* session) {
  if (!session) return invalid_argument("ea_session_reset: session is NULL");
  const bool f32 = session->state.store_f32;
  session->state = {};
  session->state.store_f32 = f32;
  return EA_OK;
}

int32_t ea_session_steps(const ea_session* session) {
  return session ? session->state.steps : 0;
}

ea_status ea_session_push(ea_session* session, const double* feature, int32_t dim, double* probs,
                          int32_t probs_cap) {
  if (!session || !feature || !probs) return invalid_argument("ea_session_push: NULL argument");
  return guarded([&] {
    const int k = session->params->cfg.k_classes;
    if (probs_cap < k) {
      throw earlyact::ShapeError("probability buffer too small: need " + std::to_string(k));
    }
    std::vector<double> f(feature, feature + dim);
    const std::vector<double> p =
        earlyact::forward_step(*session->params, session->state, f);
    std::memcpy(probs, p.data(), p.size() * sizeof(double));
  });
}

ea_status ea_auc(const double* rho, const double* top1, int32_t n, double* out) {
  if (!rho || !top1 || !out) return invalid_argument("ea_auc: NULL argument");
  return guarded([&] {
    earlyact::AccuracyCurve curve;
    curve.ratios.assign(rho, rho + n);
    curve.top1.assign(top1, top1 + n);
    *out = earlyact::auc(curve);
  });
}

ea_status ea_metrics_write_csv(const double* rho, const double* top1, int32_t n,
                               const char* path) {
  if (!rho || !top1 || !path) return invalid_argument("ea_metrics_write_csv: NULL argument");
  return guarded([&] {
    earlyact::AccuracyCurve curve;
    curve.ratios.assign(rho, rho + n);
    curve.top1.assign(top1, top1 + n);
    earlyact::write_metrics_csv_file(curve, path);
  });
}

ea_status ea_curve_read_csv(const char* path, double* rho, double* top1, int32_t cap,
                            int32_t* n_points) {
  if (!path) return invalid_argument("ea_curve_read_csv: NULL argument");
  return guarded([&] {
    const earlyact::AccuracyCurve curve = earlyact::read_curve_csv(path);
    const int32_t n = static_cast<int32_t>(curve.ratios.size());
    if (n_points) *n_points = n;
    if (rho || top1) {
      if (cap < n) {
        throw earlyact::ShapeError("curve buffer too small: need " + std::to_string(n) +
                                   " points");
      }
      for (int32_t i = 0; i < n; ++i) {
        if (rho) rho[i] = curve.ratios[i];
        if (top1) top1[i] = curve.top1[i];
      }
    }
  });
}

}  // extern "C"
