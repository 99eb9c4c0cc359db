// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Talks to the library exclusively through the C
// API in earlyact/earlyact.h.
//
// Exit codes: 0 success, 2 configuration/validation problems, 3 runtime
// numeric or capacity failures.
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "earlyact/earlyact.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(ea_status status) {
  switch (status) {
    case EA_OK:
      return 0;
    case EA_ERR_NUMERIC:
    case EA_ERR_CAPACITY:
      return kExitRuntime;
    default:
      return kExitConfig;
  }
}

// Fails the command with the library's last error message.
int fail(ea_status status, const std::string& context) {
  std::cerr << "earlyact: " << context << ": " << ea_last_error() << "\n";
  return exit_code_for(status);
}

struct DatasetHandle {
  ea_dataset* ptr = nullptr;
  ~DatasetHandle() { ea_dataset_free(ptr); }
};

struct ModelHandle {
  ea_model* ptr = nullptr;
  ~ModelHandle() { ea_model_free(ptr); }
};

struct SessionHandle {
  ea_session* ptr = nullptr;
  ~SessionHandle() { ea_session_free(ptr); }
};

// Config file support: values land in the same variables as the flags.
// Precedence is flags > JSON config > built-in defaults.
class JsonConfig {
 public:
  int load(const std::string& path) {
    if (path.empty()) return 0;
    std::ifstream in(path);
    if (!in) {
      std::cerr << "earlyact: cannot open config file " << path << "\n";
      return kExitConfig;
    }
    try {
      in >> data_;
    } catch (const std::exception& e) {
      std::cerr << "earlyact: bad config file " << path << ": " << e.what() << "\n";
      return kExitConfig;
    }
    if (!data_.is_object()) {
      std::cerr << "earlyact: config file " << path << " must hold a JSON object\n";
      return kExitConfig;
    }
    return 0;
  }

  template <typename T>
  void apply(const CLI::App& cmd, const std::string& flag, const std::string& key, T& value) {
    if (cmd.count(flag) > 0 || !data_.contains(key)) return;
    try {
      value = data_.at(key).get<T>();
    } catch (const std::exception& e) {
      std::cerr << "earlyact: config key '" << key << "': " << e.what() << "\n";
      bad_ = true;
    }
  }

  bool bad() const { return bad_; }

 private:
  nlohmann::json data_ = nlohmann::json::object();
  bool bad_ = false;
};

int parse_temporal(const std::string& name, int32_t& out) {
  if (name == "only_last") out = EA_TEMPORAL_ONLY_LAST;
  else if (name == "all") out = EA_TEMPORAL_ALL;
  else if (name == "dynamic_hard") out = EA_TEMPORAL_DYNAMIC_HARD;
  else if (name == "dynamic_soft") out = EA_TEMPORAL_DYNAMIC_SOFT;
  else {
    std::cerr << "earlyact: unknown --loss '" << name
              << "' (expected only_last|all|dynamic_hard|dynamic_soft)\n";
    return kExitConfig;
  }
  return 0;
}

int parse_reg(const std::string& name, int32_t& out) {
  if (name == "prototypes") out = EA_REG_PROTOTYPES;
  else if (name == "pred_next") out = EA_REG_PRED_NEXT;
  else if (name == "pred_final") out = EA_REG_PRED_FINAL;
  else if (name == "none") out = EA_REG_NONE;
  else {
    std::cerr << "earlyact: unknown --reg '" << name
              << "' (expected prototypes|pred_next|pred_final|none)\n";
    return kExitConfig;
  }
  return 0;
}

// ------------------------------------------------------------------ gen

struct GenArgs {
  std::string out_train, out_val, config;
  ea_synth_spec spec{};
};

int run_gen(const GenArgs& a) {
  DatasetHandle train, val;
  ea_status st = ea_dataset_generate(&a.spec, &train.ptr, &val.ptr);
  if (st != EA_OK) return fail(st, "gen");

  st = ea_dataset_write(train.ptr, a.out_train.c_str());
  if (st != EA_OK) return fail(st, "writing " + a.out_train);
  st = ea_dataset_write(val.ptr, a.out_val.c_str());
  if (st != EA_OK) return fail(st, "writing " + a.out_val);

  std::printf("train: %s (%lld samples, %d classes, %d segments x %d dims)\n",
              a.out_train.c_str(), static_cast<long long>(ea_dataset_size(train.ptr)),
              ea_dataset_classes(train.ptr), a.spec.t_segments, a.spec.d_enc);
  std::printf("val:   %s (%lld samples)\n", a.out_val.c_str(),
              static_cast<long long>(ea_dataset_size(val.ptr)));
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string train_path, val_path, out_path, report_path, best_path, config;
  std::string loss_name = "dynamic_hard";
  std::string reg_name = "prototypes";
  ea_train_config tc{};
  // model dims (d_enc and k_classes come from the dataset)
  int32_t d = 32, blocks = 2, heads = 4, t_max = 0, predictor_hidden = 32;
};

int run_train(const TrainArgs& a) {
  DatasetHandle train;
  ea_status st = ea_dataset_read(a.train_path.c_str(), &train.ptr);
  if (st != EA_OK) return fail(st, "reading " + a.train_path);

  DatasetHandle val;
  if (!a.val_path.empty()) {
    st = ea_dataset_read(a.val_path.c_str(), &val.ptr);
    if (st != EA_OK) return fail(st, "reading " + a.val_path);
  }

  int32_t t_len = 0;
  st = ea_dataset_sample(train.ptr, 0, nullptr, &t_len, nullptr, 0);
  if (st != EA_OK) return fail(st, "inspecting " + a.train_path);

  ea_model_config mc;
  ea_model_config_default(&mc);
  mc.d_enc = ea_dataset_feature_dim(train.ptr);
  mc.k_classes = ea_dataset_classes(train.ptr);
  mc.d = a.d;
  mc.n_blocks = a.blocks;
  mc.n_heads = a.heads;
  mc.t_max = a.t_max > 0 ? a.t_max : t_len;
  mc.predictor_hidden = a.predictor_hidden;
  mc.seed = a.tc.seed;

  ModelHandle model;
  st = ea_model_create(&mc, &model.ptr);
  if (st != EA_OK) return fail(st, "creating model");

  st = ea_model_train(model.ptr, train.ptr, val.ptr, &a.tc,
                      a.report_path.empty() ? nullptr : a.report_path.c_str(),
                      a.best_path.empty() ? nullptr : a.best_path.c_str());
  if (st != EA_OK) return fail(st, "training");

  st = ea_model_save(model.ptr, a.out_path.c_str());
  if (st != EA_OK) return fail(st, "writing " + a.out_path);

  if (val.ptr) {
    double auc = 0.0;
    if (ea_model_eval(model.ptr, val.ptr, nullptr, nullptr, 0, nullptr, &auc) == EA_OK) {
      std::printf("final val AUC: %.6f\n", auc);
    }
  }
  std::printf("checkpoint: %s\n", a.out_path.c_str());
  return 0;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string model_path, data_path, curve_csv, out_path, config;
};

int run_eval(const EvalArgs& a) {
  std::vector<double> rho, top1;

  if (!a.curve_csv.empty()) {
    int32_t n = 0;
    ea_status st = ea_curve_read_csv(a.curve_csv.c_str(), nullptr, nullptr, 0, &n);
    if (st != EA_OK) return fail(st, "reading " + a.curve_csv);
    rho.resize(n);
    top1.resize(n);
    st = ea_curve_read_csv(a.curve_csv.c_str(), rho.data(), top1.data(), n, &n);
    if (st != EA_OK) return fail(st, "reading " + a.curve_csv);
  } else {
    ModelHandle model;
    ea_status st = ea_model_load(a.model_path.c_str(), &model.ptr);
    if (st != EA_OK) return fail(st, "loading " + a.model_path);
    DatasetHandle data;
    st = ea_dataset_read(a.data_path.c_str(), &data.ptr);
    if (st != EA_OK) return fail(st, "reading " + a.data_path);

    int32_t n = 0;
    st = ea_model_eval(model.ptr, data.ptr, nullptr, nullptr, 0, &n, nullptr);
    if (st != EA_OK) return fail(st, "evaluating");
    rho.resize(n);
    top1.resize(n);
    st = ea_model_eval(model.ptr, data.ptr, rho.data(), top1.data(), n, &n, nullptr);
    if (st != EA_OK) return fail(st, "evaluating");
  }

  double auc = 0.0;
  ea_status st = ea_auc(rho.data(), top1.data(), static_cast<int32_t>(rho.size()), &auc);
  if (st != EA_OK) return fail(st, "auc");

  st = ea_metrics_write_csv(rho.data(), top1.data(), static_cast<int32_t>(rho.size()),
                            a.out_path.c_str());
  if (st != EA_OK) return fail(st, "writing " + a.out_path);
  std::printf("auc: %.6f\n", auc);
  std::printf("metrics: %s\n", a.out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------- stream

struct StreamArgs {
  std::string model_path, data_path, config;
  int64_t index = 0;
  bool from_stdin = false;
  int32_t segments = 0;  // total T for rho when reading stdin; 0 -> t_max
  bool store_f32 = false;
};

int print_step(ea_session* session, const std::vector<double>& feature, int32_t k, int total) {
  std::vector<double> probs(k);
  const ea_status st = ea_session_push(session, feature.data(),
                                       static_cast<int32_t>(feature.size()), probs.data(), k);
  if (st != EA_OK) return fail(st, "stream step");
  int best = 0;
  for (int32_t j = 1; j < k; ++j)
    if (probs[j] > probs[best]) best = j;
  const int t = ea_session_steps(session);
  std::printf("%d,%.6f,%d,%.6f\n", t, static_cast<double>(t) / total, best, probs[best]);
  std::fflush(stdout);
  return 0;
}

int run_stream(const StreamArgs& a) {
  ModelHandle model;
  ea_status st = ea_model_load(a.model_path.c_str(), &model.ptr);
  if (st != EA_OK) return fail(st, "loading " + a.model_path);
  ea_model_config mc;
  ea_model_get_config(model.ptr, &mc);

  SessionHandle session;
  st = ea_session_create(model.ptr, a.store_f32 ? 1 : 0, &session.ptr);
  if (st != EA_OK) return fail(st, "creating session");

  if (a.from_stdin) {
    const int total = a.segments > 0 ? a.segments : mc.t_max;
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::vector<double> feature;
      double v;
      while (ss >> v) feature.push_back(v);
      if (static_cast<int32_t>(feature.size()) != mc.d_enc) {
        std::cerr << "earlyact: stream: segment width " << feature.size()
                  << " does not match model d_enc=" << mc.d_enc << "\n";
        return kExitConfig;
      }
      if (int rc = print_step(session.ptr, feature, mc.k_classes, total)) return rc;
    }
    return 0;
  }

  DatasetHandle data;
  st = ea_dataset_read(a.data_path.c_str(), &data.ptr);
  if (st != EA_OK) return fail(st, "reading " + a.data_path);
  if (ea_dataset_feature_dim(data.ptr) != mc.d_enc) {
    std::cerr << "earlyact: stream: dataset d_enc=" << ea_dataset_feature_dim(data.ptr)
              << " does not match model d_enc=" << mc.d_enc << "\n";
    return kExitConfig;
  }

  int32_t t_len = 0, label = 0;
  st = ea_dataset_sample(data.ptr, a.index, &label, &t_len, nullptr, 0);
  if (st != EA_OK) return fail(st, "sampling");
  std::vector<double> features(static_cast<size_t>(t_len) * mc.d_enc);
  st = ea_dataset_sample(data.ptr, a.index, nullptr, nullptr, features.data(),
                         static_cast<int64_t>(features.size()));
  if (st != EA_OK) return fail(st, "sampling");

  for (int t = 0; t < t_len; ++t) {
    std::vector<double> feature(features.begin() + static_cast<size_t>(t) * mc.d_enc,
                                features.begin() + static_cast<size_t>(t + 1) * mc.d_enc);
    if (int rc = print_step(session.ptr, feature, mc.k_classes, t_len)) return rc;
  }
  return 0;
}

// ------------------------------------------------------- export-embeddings

struct ExportArgs {
  std::string model_path, data_path, out_path;
};

int run_export(const ExportArgs& a) {
  ModelHandle model;
  ea_status st = ea_model_load(a.model_path.c_str(), &model.ptr);
  if (st != EA_OK) return fail(st, "loading " + a.model_path);
  DatasetHandle data;
  st = ea_dataset_read(a.data_path.c_str(), &data.ptr);
  if (st != EA_OK) return fail(st, "reading " + a.data_path);
  st = ea_model_export_embeddings(model.ptr, data.ptr, a.out_path.c_str());
  if (st != EA_OK) return fail(st, "writing " + a.out_path);
  std::printf("embeddings: %s\n", a.out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"early action recognition over precomputed segment features"};
  app.require_subcommand(1);

  GenArgs gen;
  ea_synth_spec_default(&gen.spec);
  CLI::App* cmd_gen = app.add_subcommand("gen", "generate the synthetic benchmark (EVPF files)");
  cmd_gen->add_option("--out-train", gen.out_train, "output EVPF for the training split")
      ->required();
  cmd_gen->add_option("--out-val", gen.out_val, "output EVPF for the validation split")
      ->required();
  cmd_gen->add_option("--classes", gen.spec.k_classes, "number of classes (even)");
  cmd_gen->add_option("--segments", gen.spec.t_segments, "segments per sample");
  cmd_gen->add_option("--dim", gen.spec.d_enc, "feature width per segment");
  cmd_gen->add_option("--noise", gen.spec.noise_sigma, "feature noise sigma");
  cmd_gen->add_option("--ambiguity", gen.spec.ambiguity_depth,
                      "segments shared between paired classes");
  cmd_gen->add_option("--n-train", gen.spec.n_train, "training samples");
  cmd_gen->add_option("--n-val", gen.spec.n_val, "validation samples");
  cmd_gen->add_option("--seed", gen.spec.seed, "RNG seed");
  cmd_gen->add_option("--config", gen.config, "JSON config file");

  TrainArgs train;
  ea_train_config_default(&train.tc);
  CLI::App* cmd_train = app.add_subcommand("train", "train a model on an EVPF dataset");
  cmd_train->add_option("--train", train.train_path, "training EVPF")->required();
  cmd_train->add_option("--val", train.val_path, "validation EVPF");
  cmd_train->add_option("--out", train.out_path, "output checkpoint path")->required();
  cmd_train->add_option("--report", train.report_path, "JSONL training report path");
  cmd_train->add_option("--best", train.best_path, "path for the best-AUC checkpoint");
  cmd_train->add_option("--epochs", train.tc.epochs, "training epochs");
  cmd_train->add_option("--e-star", train.tc.e_star, "switch epoch of the dynamic loss");
  cmd_train->add_option("--batch", train.tc.batch_size, "batch size");
  cmd_train->add_option("--lr", train.tc.lr, "learning rate");
  cmd_train->add_option("--beta1", train.tc.beta1, "AdamW beta1");
  cmd_train->add_option("--beta2", train.tc.beta2, "AdamW beta2");
  cmd_train->add_option("--weight-decay", train.tc.weight_decay, "decoupled weight decay");
  cmd_train->add_option("--grad-clip", train.tc.grad_clip, "global grad-norm cap (<=0 off)");
  cmd_train->add_option("--seed", train.tc.seed, "RNG seed (init + shuffling)");
  cmd_train->add_option("--loss", train.loss_name,
                        "temporal loss: only_last|all|dynamic_hard|dynamic_soft");
  cmd_train->add_option("--reg", train.reg_name,
                        "regularizer: prototypes|pred_next|pred_final|none");
  cmd_train->add_option("--alpha", train.tc.alpha, "soft-switch smoothness");
  cmd_train->add_option("--label-smoothing", train.tc.label_smoothing, "classification smoothing");
  cmd_train->add_option("--eval-every", train.tc.eval_every, "epochs between evals (<=0 off)");
  cmd_train->add_option("--d", train.d, "decoder width");
  cmd_train->add_option("--blocks", train.blocks, "decoder depth");
  cmd_train->add_option("--heads", train.heads, "attention heads");
  cmd_train->add_option("--t-max", train.t_max, "capacity in segments (0: use dataset T)");
  cmd_train->add_option("--predictor-hidden", train.predictor_hidden, "predictor MLP width");
  cmd_train->add_option("--config", train.config, "JSON config file");

  EvalArgs eval;
  CLI::App* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint, write metrics CSV");
  cmd_eval->add_option("--model", eval.model_path, "checkpoint path");
  cmd_eval->add_option("--data", eval.data_path, "EVPF dataset");
  cmd_eval->add_option("--curve-from-csv", eval.curve_csv,
                       "score an existing rho,top1 curve instead of a model");
  cmd_eval->add_option("--out", eval.out_path, "output metrics CSV")->required();
  cmd_eval->add_option("--config", eval.config, "JSON config file");

  StreamArgs stream;
  CLI::App* cmd_stream = app.add_subcommand(
      "stream", "online inference: print t,rho,top1_class,top1_prob per segment");
  cmd_stream->add_option("--model", stream.model_path, "checkpoint path")->required();
  cmd_stream->add_option("--data", stream.data_path, "EVPF dataset to stream from");
  cmd_stream->add_option("--index", stream.index, "sample index within --data");
  cmd_stream->add_flag("--stdin", stream.from_stdin,
                       "read whitespace-separated segment vectors from stdin");
  cmd_stream->add_option("--segments", stream.segments,
                         "total segments for rho when using --stdin");
  cmd_stream->add_flag("--f32", stream.store_f32, "store cached features at 32-bit precision");
  cmd_stream->add_option("--config", stream.config, "JSON config file");

  ExportArgs exp;
  CLI::App* cmd_export =
      app.add_subcommand("export-embeddings", "CSV of prototypes and final features");
  cmd_export->add_option("--model", exp.model_path, "checkpoint path")->required();
  cmd_export->add_option("--data", exp.data_path, "EVPF dataset")->required();
  cmd_export->add_option("--out", exp.out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (cmd_gen->parsed()) {
    JsonConfig jc;
    if (int rc = jc.load(gen.config)) return rc;
    jc.apply(*cmd_gen, "--classes", "classes", gen.spec.k_classes);
    jc.apply(*cmd_gen, "--segments", "segments", gen.spec.t_segments);
    jc.apply(*cmd_gen, "--dim", "dim", gen.spec.d_enc);
    jc.apply(*cmd_gen, "--noise", "noise", gen.spec.noise_sigma);
    jc.apply(*cmd_gen, "--ambiguity", "ambiguity", gen.spec.ambiguity_depth);
    jc.apply(*cmd_gen, "--n-train", "n_train", gen.spec.n_train);
    jc.apply(*cmd_gen, "--n-val", "n_val", gen.spec.n_val);
    jc.apply(*cmd_gen, "--seed", "seed", gen.spec.seed);
    if (jc.bad()) return kExitConfig;
    return run_gen(gen);
  }
  if (cmd_train->parsed()) {
    JsonConfig jc;
    if (int rc = jc.load(train.config)) return rc;
    jc.apply(*cmd_train, "--epochs", "epochs", train.tc.epochs);
    jc.apply(*cmd_train, "--e-star", "e_star", train.tc.e_star);
    jc.apply(*cmd_train, "--batch", "batch", train.tc.batch_size);
    jc.apply(*cmd_train, "--lr", "lr", train.tc.lr);
    jc.apply(*cmd_train, "--beta1", "beta1", train.tc.beta1);
    jc.apply(*cmd_train, "--beta2", "beta2", train.tc.beta2);
    jc.apply(*cmd_train, "--weight-decay", "weight_decay", train.tc.weight_decay);
    jc.apply(*cmd_train, "--grad-clip", "grad_clip", train.tc.grad_clip);
    jc.apply(*cmd_train, "--seed", "seed", train.tc.seed);
    jc.apply(*cmd_train, "--loss", "loss", train.loss_name);
    jc.apply(*cmd_train, "--reg", "reg", train.reg_name);
    jc.apply(*cmd_train, "--alpha", "alpha", train.tc.alpha);
    jc.apply(*cmd_train, "--label-smoothing", "label_smoothing", train.tc.label_smoothing);
    jc.apply(*cmd_train, "--eval-every", "eval_every", train.tc.eval_every);
    jc.apply(*cmd_train, "--d", "d", train.d);
    jc.apply(*cmd_train, "--blocks", "blocks", train.blocks);
    jc.apply(*cmd_train, "--heads", "heads", train.heads);
    jc.apply(*cmd_train, "--t-max", "t_max", train.t_max);
    jc.apply(*cmd_train, "--predictor-hidden", "predictor_hidden", train.predictor_hidden);
    if (jc.bad()) return kExitConfig;
    if (int rc = parse_temporal(train.loss_name, train.tc.temporal_mode)) return rc;
    if (int rc = parse_reg(train.reg_name, train.tc.reg_mode)) return rc;
    return run_train(train);
  }
  if (cmd_eval->parsed()) {
    if (eval.curve_csv.empty() && (eval.model_path.empty() || eval.data_path.empty())) {
      std::cerr << "earlyact: eval needs either --curve-from-csv or both --model and --data\n";
      return kExitConfig;
    }
    return run_eval(eval);
  }
  if (cmd_stream->parsed()) {
    if (!stream.from_stdin && stream.data_path.empty()) {
      std::cerr << "earlyact: stream needs --data or --stdin\n";
      return kExitConfig;
    }
    return run_stream(stream);
  }
  if (cmd_export->parsed()) return run_export(exp);

  return kExitConfig;
}
