// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include "dataio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "errors.hpp"
#include "rng.hpp"

namespace earlyact {

namespace {

// Minimum L2 distance enforced between distinct trajectory points of the
// same segment. The documented invariant is >= 1.0; generation uses a wider
// margin so downstream float comparisons have slack.
constexpr double kSeparation = 1.5;
// Kept small relative to usable noise levels so that one segment alone is
// weak evidence and accuracy has to come from aggregating the sequence.
constexpr double kTrajScale = 0.5;
constexpr int kMaxRedraws = 10000;

// Expected pairwise distance of N(0, s^2) draws grows with sqrt(2d); at low
// d_enc the base scale cannot clear the separation margin, so widen it.
double draw_scale(int d) {
  return std::max(kTrajScale, 1.8 * kSeparation / std::sqrt(2.0 * d));
}

double l2_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Draws `count` vectors of width d with pairwise distance >= kSeparation,
// redrawing the whole set until separated. Deterministic given the rng.
std::vector<std::vector<double>> draw_separated(Rng& rng, int count, int d) {
  const double scale = draw_scale(d);
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    std::vector<std::vector<double>> vs(count, std::vector<double>(d));
    for (auto& v : vs)
      for (double& x : v) x = rng.normal(0.0, scale);
    bool ok = true;
    for (int i = 0; i < count && ok; ++i)
      for (int j = i + 1; j < count && ok; ++j)
        if (l2_dist(vs[i], vs[j]) < kSeparation) ok = false;
    if (ok) return vs;
  }
  throw ConfigError("gen_synthetic: could not separate trajectories; d_enc too small for k_classes");
}

Dataset sample_split(const std::vector<std::vector<double>>& traj, const SynthSpec& spec,
                     int64_t n, uint64_t stream_seed) {
  Rng rng(stream_seed);
  Dataset ds;
  ds.k_classes = spec.k_classes;
  ds.d_enc = spec.d_enc;
  ds.samples.reserve(static_cast<size_t>(n));
  const size_t len = static_cast<size_t>(spec.t_segments) * spec.d_enc;
  for (int64_t i = 0; i < n; ++i) {
    SegmentFeatureSequence s;
    s.label = static_cast<int>(i % spec.k_classes);  // class-balanced round robin
    s.t_len = spec.t_segments;
    s.d_enc = spec.d_enc;
    s.features.resize(len);
    const std::vector<double>& base = traj[s.label];
    for (size_t j = 0; j < len; ++j) s.features[j] = base[j] + rng.normal(0.0, spec.noise_sigma);
    ds.samples.push_back(std::move(s));
  }
  rng.shuffle(ds.samples);
  return ds;
}

// --- little-endian primitives -------------------------------------------

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& buf, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  put_u64(buf, bits);
}

struct ByteReader {
  const std::string& bytes;
  size_t offset = 0;

  void need(size_t n, const char* what) const {
    if (offset + n > bytes.size()) {
      throw ParseError(std::string("truncated file: expected ") + what + " at offset " +
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
  double f64(const char* what) {
    const uint64_t bits = u64(what);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path);
  return bytes;
}

void spill(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + path);
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.k_classes < 2) throw ConfigError("k_classes must be >= 2");
  if (spec.k_classes % 2 != 0) {
    throw ConfigError("k_classes must be even to form ambiguous class pairs, got " +
                      std::to_string(spec.k_classes));
  }
  if (spec.t_segments < 1) throw ConfigError("t_segments must be >= 1");
  if (spec.d_enc < 1) throw ConfigError("d_enc must be >= 1");
  if (spec.ambiguity_depth < 0 || spec.ambiguity_depth >= spec.t_segments) {
    throw ConfigError("ambiguity_depth must be in [0, t_segments), got " +
                      std::to_string(spec.ambiguity_depth));
  }
  if (spec.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  if (spec.n_train < 1 || spec.n_val < 0) throw ConfigError("n_train must be >= 1 and n_val >= 0");
}

SynthData gen_synthetic(const SynthSpec& spec) {
  validate(spec);
  const int pairs = spec.k_classes / 2;

  Rng traj_rng(Rng::substream(spec.seed, 0));
  SynthData out;
  out.class_trajectories.assign(spec.k_classes,
                                std::vector<double>(static_cast<size_t>(spec.t_segments) * spec.d_enc));

  for (int t = 0; t < spec.t_segments; ++t) {
    const bool shared = t < spec.ambiguity_depth;
    const int points = shared ? pairs : spec.k_classes;
    const auto vs = draw_separated(traj_rng, points, spec.d_enc);
    for (int c = 0; c < spec.k_classes; ++c) {
      const std::vector<double>& v = shared ? vs[c / 2] : vs[c];
      std::copy(v.begin(), v.end(),
                out.class_trajectories[c].begin() + static_cast<size_t>(t) * spec.d_enc);
    }
  }

  out.train = sample_split(out.class_trajectories, spec, spec.n_train, Rng::substream(spec.seed, 1));
  out.val = sample_split(out.class_trajectories, spec, spec.n_val, Rng::substream(spec.seed, 2));
  return out;
}

void write_feature_file(const Dataset& dataset, const std::string& path) {
  std::string buf;
  buf.reserve(24 + dataset.samples.size() * 64);
  buf += "EVPF";
  put_u32(buf, 1);
  put_u32(buf, static_cast<uint32_t>(dataset.k_classes));
  put_u32(buf, static_cast<uint32_t>(dataset.d_enc));
  put_u64(buf, dataset.samples.size());
  for (const SegmentFeatureSequence& s : dataset.samples) {
    put_u32(buf, static_cast<uint32_t>(s.label));
    put_u32(buf, static_cast<uint32_t>(s.t_len));
    for (double v : s.features) put_f64(buf, v);
  }
  spill(path, buf);
}

Dataset read_feature_file(const std::string& path) {
  const std::string bytes = slurp(path);
  ByteReader r{bytes};

  r.need(4, "magic");
  if (bytes.compare(0, 4, "EVPF") != 0) {
    throw ParseError("bad magic at offset 0 in " + path);
  }
  r.offset = 4;
  const uint32_t version = r.u32("version");
  if (version != 1) {
    throw ParseError("unsupported version " + std::to_string(version) + " at offset 4");
  }
  Dataset ds;
  ds.k_classes = static_cast<int>(r.u32("k_classes"));
  ds.d_enc = static_cast<int>(r.u32("d_enc"));
  if (ds.k_classes < 1 || ds.d_enc < 1) {
    throw ParseError("invalid header: k_classes=" + std::to_string(ds.k_classes) +
                     " d_enc=" + std::to_string(ds.d_enc));
  }
  const uint64_t n = r.u64("n_records");
  ds.samples.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    SegmentFeatureSequence s;
    s.label = static_cast<int>(r.u32("label"));
    if (s.label < 0 || s.label >= ds.k_classes) {
      throw ParseError("record " + std::to_string(i) + ": label " + std::to_string(s.label) +
                       " out of range for " + std::to_string(ds.k_classes) + " classes");
    }
    s.t_len = static_cast<int>(r.u32("T"));
    if (s.t_len < 1) {
      throw ParseError("record " + std::to_string(i) + ": T must be >= 1, got " +
                       std::to_string(s.t_len));
    }
    s.d_enc = ds.d_enc;
    const size_t len = static_cast<size_t>(s.t_len) * ds.d_enc;
    s.features.resize(len);
    for (size_t j = 0; j < len; ++j) {
      s.features[j] = r.f64("feature payload");
      if (!std::isfinite(s.features[j])) {
        throw ParseError("record " + std::to_string(i) + ": non-finite feature value at offset " +
                         std::to_string(r.offset - 8));
      }
    }
    ds.samples.push_back(std::move(s));
  }
  if (r.offset != bytes.size()) {
    throw ParseError("trailing bytes at offset " + std::to_string(r.offset));
  }
  return ds;
}

}  // namespace earlyact
