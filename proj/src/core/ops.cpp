// Copyright (c) 2026 earlyact contributors
// SPDX-License-Identifier: Apache-2.0
#include "ops.hpp"

#include <algorithm>
#include <cmath>

namespace earlyact {

namespace {

bool wants(const Tensor& t) { return t.defined() && t.requires_grad(); }

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + Tensor::shape_str(a.shape()) +
                     " vs " + Tensor::shape_str(b.shape()));
  }
}

void check_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " +
                     Tensor::shape_str(t.shape()));
  }
}

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + ": non-finite input value");
    }
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return make_node(a.shape(), std::move(out), {a, b}, [](TensorImpl& self) {
    Tensor &pa = self.parents[0], &pb = self.parents[1];
    const size_t n = self.data.size();
    if (wants(pa))
      for (size_t i = 0; i < n; ++i) pa.grad()[i] += self.grad[i];
    if (wants(pb))
      for (size_t i = 0; i < n; ++i) pb.grad()[i] += self.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return make_node(a.shape(), std::move(out), {a, b}, [](TensorImpl& self) {
    Tensor &pa = self.parents[0], &pb = self.parents[1];
    const size_t n = self.data.size();
    if (wants(pa))
      for (size_t i = 0; i < n; ++i) pa.grad()[i] += self.grad[i];
    if (wants(pb))
      for (size_t i = 0; i < n; ++i) pb.grad()[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return make_node(a.shape(), std::move(out), {a, b}, [](TensorImpl& self) {
    Tensor &pa = self.parents[0], &pb = self.parents[1];
    const size_t n = self.data.size();
    if (wants(pa))
      for (size_t i = 0; i < n; ++i) pa.grad()[i] += self.grad[i] * pb.data()[i];
    if (wants(pb))
      for (size_t i = 0; i < n; ++i) pb.grad()[i] += self.grad[i] * pa.data()[i];
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
  return make_node(a.shape(), std::move(out), {a}, [s](TensorImpl& self) {
    Tensor& pa = self.parents[0];
    if (!wants(pa)) return;
    for (size_t i = 0; i < self.data.size(); ++i) pa.grad()[i] += s * self.grad[i];
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank2(a, "matmul");
  check_rank2(b, "matmul");
  const int m = a.shape()[0], k = a.shape()[1];
  const int k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions differ, " + Tensor::shape_str(a.shape()) +
                     " vs " + Tensor::shape_str(b.shape()));
  }
  std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
  for (int i = 0; i < m; ++i)
    for (int p = 0; p < k; ++p) {
      const double av = a.data()[i * k + p];
      for (int j = 0; j < n; ++j) out[i * n + j] += av * b.data()[p * n + j];
    }
  return make_node({m, n}, std::move(out), {a, b}, [m, k, n](TensorImpl& self) {
    Tensor &pa = self.parents[0], &pb = self.parents[1];
    if (wants(pa)) {
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += self.grad[i * n + j] * pb.data()[p * n + j];
          pa.grad()[i * k + p] += acc;
        }
    }
    if (wants(pb)) {
      for (int p = 0; p < k; ++p)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int i = 0; i < m; ++i) acc += pa.data()[i * k + p] * self.grad[i * n + j];
          pb.grad()[p * n + j] += acc;
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  check_rank2(a, "transpose");
  const int r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(a.size());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out[j * r + i] = a.data()[i * c + j];
  return make_node({c, r}, std::move(out), {a}, [r, c](TensorImpl& self) {
    Tensor& pa = self.parents[0];
    if (!wants(pa)) return;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) pa.grad()[i * c + j] += self.grad[j * r + i];
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check_rank2(w, "linear");
  const bool vector_input = x.rank() == 1;
  if (!vector_input) check_rank2(x, "linear");
  const int rows = vector_input ? 1 : x.shape()[0];
  const int in = vector_input ? x.shape()[0] : x.shape()[1];
  const int w_in = w.shape()[0], out_dim = w.shape()[1];
  if (in != w_in) {
    throw ShapeError("linear: input width " + std::to_string(in) + " does not match weight " +
                     Tensor::shape_str(w.shape()) + " (x " + Tensor::shape_str(x.shape()) + ")");
  }
  if (b.defined() && (b.rank() != 1 || b.shape()[0] != out_dim)) {
    throw ShapeError("linear: bias " + Tensor::shape_str(b.shape()) + " does not match weight " +
                     Tensor::shape_str(w.shape()));
  }

  std::vector<double> out(static_cast<size_t>(rows) * out_dim, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < in; ++i) {
      const double xv = x.data()[r * in + i];
      for (int o = 0; o < out_dim; ++o) out[r * out_dim + o] += xv * w.data()[i * out_dim + o];
    }
    if (b.defined())
      for (int o = 0; o < out_dim; ++o) out[r * out_dim + o] += b.data()[o];
  }

  std::vector<int> out_shape = vector_input ? std::vector<int>{out_dim} : std::vector<int>{rows, out_dim};
  std::vector<Tensor> parents = b.defined() ? std::vector<Tensor>{x, w, b} : std::vector<Tensor>{x, w};
  return make_node(std::move(out_shape), std::move(out), std::move(parents),
                   [rows, in, out_dim](TensorImpl& self) {
                     Tensor &px = self.parents[0], &pw = self.parents[1];
                     if (wants(px)) {
                       for (int r = 0; r < rows; ++r)
                         for (int i = 0; i < in; ++i) {
                           double acc = 0.0;
                           for (int o = 0; o < out_dim; ++o)
                             acc += self.grad[r * out_dim + o] * pw.data()[i * out_dim + o];
                           px.grad()[r * in + i] += acc;
                         }
                     }
                     if (wants(pw)) {
                       for (int r = 0; r < rows; ++r)
                         for (int i = 0; i < in; ++i) {
                           const double xv = px.data()[r * in + i];
                           for (int o = 0; o < out_dim; ++o)
                             pw.grad()[i * out_dim + o] += xv * self.grad[r * out_dim + o];
                         }
                     }
                     if (self.parents.size() == 3 && wants(self.parents[2])) {
                       Tensor& pb = self.parents[2];
                       for (int r = 0; r < rows; ++r)
                         for (int o = 0; o < out_dim; ++o)
                           pb.grad()[o] += self.grad[r * out_dim + o];
                     }
                   });
}

Tensor row(const Tensor& x, int r) {
  check_rank2(x, "row");
  const int rows = x.shape()[0], cols = x.shape()[1];
  if (r < 0 || r >= rows) {
    throw IndexError("row: index " + std::to_string(r) + " out of range for " +
                     Tensor::shape_str(x.shape()));
  }
  std::vector<double> out(x.data() + static_cast<size_t>(r) * cols,
                          x.data() + static_cast<size_t>(r + 1) * cols);
  return make_node({cols}, std::move(out), {x}, [r, cols](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    for (int c = 0; c < cols; ++c) px.grad()[r * cols + c] += self.grad[c];
  });
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
  check_rank2(x, "slice_rows");
  const int rows = x.shape()[0], cols = x.shape()[1];
  if (r0 < 0 || r1 > rows || r0 >= r1) {
    throw IndexError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ") invalid for " + Tensor::shape_str(x.shape()));
  }
  std::vector<double> out(x.data() + static_cast<size_t>(r0) * cols,
                          x.data() + static_cast<size_t>(r1) * cols);
  return make_node({r1 - r0, cols}, std::move(out), {x}, [r0, cols](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    for (size_t i = 0; i < self.data.size(); ++i)
      px.grad()[static_cast<size_t>(r0) * cols + i] += self.grad[i];
  });
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
  check_rank2(x, "slice_cols");
  const int rows = x.shape()[0], cols = x.shape()[1];
  if (c0 < 0 || c1 > cols || c0 >= c1) {
    throw IndexError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") invalid for " + Tensor::shape_str(x.shape()));
  }
  const int width = c1 - c0;
  std::vector<double> out(static_cast<size_t>(rows) * width);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < width; ++c) out[r * width + c] = x.data()[r * cols + c0 + c];
  return make_node({rows, width}, std::move(out), {x}, [rows, cols, c0, width](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < width; ++c) px.grad()[r * cols + c0 + c] += self.grad[r * width + c];
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  int rows = -1, total = 0;
  for (const Tensor& p : parts) {
    check_rank2(p, "concat_cols");
    if (rows < 0) rows = p.shape()[0];
    if (p.shape()[0] != rows) {
      throw ShapeError("concat_cols: row count mismatch " + Tensor::shape_str(p.shape()));
    }
    total += p.shape()[1];
  }
  std::vector<double> out(static_cast<size_t>(rows) * total);
  std::vector<int> widths;
  int off = 0;
  for (const Tensor& p : parts) {
    const int w = p.shape()[1];
    widths.push_back(w);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < w; ++c) out[r * total + off + c] = p.data()[r * w + c];
    off += w;
  }
  return make_node({rows, total}, std::move(out), parts,
                   [rows, total, widths](TensorImpl& self) {
                     int offset = 0;
                     for (size_t i = 0; i < self.parents.size(); ++i) {
                       Tensor& p = self.parents[i];
                       const int w = widths[i];
                       if (wants(p)) {
                         for (int r = 0; r < rows; ++r)
                           for (int c = 0; c < w; ++c)
                             p.grad()[r * w + c] += self.grad[r * total + offset + c];
                       }
                       offset += w;
                     }
                   });
}

Tensor element(const Tensor& x, size_t flat_index) {
  if (flat_index >= x.size()) {
    throw IndexError("element: flat index " + std::to_string(flat_index) + " out of range for " +
                     Tensor::shape_str(x.shape()));
  }
  return make_node({}, {x.data()[flat_index]}, {x}, [flat_index](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (wants(px)) px.grad()[flat_index] += self.grad[0];
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_node({}, {acc}, {x}, [](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    for (size_t i = 0; i < px.size(); ++i) px.grad()[i] += self.grad[0];
  });
}

Tensor mean_all(const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return make_node({}, {acc * inv}, {x}, [inv](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    for (size_t i = 0; i < px.size(); ++i) px.grad()[i] += inv * self.grad[0];
  });
}

Tensor mean_of(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) throw ShapeError("mean_of: empty input");
  double acc = 0.0;
  for (const Tensor& s : scalars) {
    if (s.size() != 1) throw ShapeError("mean_of: non-scalar term " + Tensor::shape_str(s.shape()));
    acc += s.data()[0];
  }
  const double inv = 1.0 / static_cast<double>(scalars.size());
  return make_node({}, {acc * inv}, scalars, [inv](TensorImpl& self) {
    for (Tensor& p : self.parents)
      if (wants(p)) p.grad()[0] += inv * self.grad[0];
  });
}

Tensor softmax(const Tensor& x, int axis) {
  if (x.rank() == 0) throw ShapeError("softmax: scalar input");
  if (axis < 0) axis += x.rank();
  if (axis < 0 || axis >= x.rank()) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " invalid for " +
                     Tensor::shape_str(x.shape()));
  }
  check_finite(x, "softmax");
  const int k = x.shape()[axis];
  size_t inner = 1, outer = 1;
  for (int i = 0; i < axis; ++i) outer *= static_cast<size_t>(x.shape()[i]);
  for (int i = axis + 1; i < x.rank(); ++i) inner *= static_cast<size_t>(x.shape()[i]);

  std::vector<double> out(x.size());
  for (size_t o = 0; o < outer; ++o) {
    for (size_t in = 0; in < inner; ++in) {
      const size_t base = o * static_cast<size_t>(k) * inner + in;
      double mx = x.data()[base];
      for (int j = 1; j < k; ++j) mx = std::max(mx, x.data()[base + j * inner]);
      double z = 0.0;
      for (int j = 0; j < k; ++j) {
        const double e = std::exp(x.data()[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      for (int j = 0; j < k; ++j) out[base + j * inner] /= z;
    }
  }
  return make_node(x.shape(), std::move(out), {x}, [k, inner, outer](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    for (size_t o = 0; o < outer; ++o) {
      for (size_t in = 0; in < inner; ++in) {
        const size_t base = o * static_cast<size_t>(k) * inner + in;
        double dot = 0.0;
        for (int j = 0; j < k; ++j) dot += self.grad[base + j * inner] * self.data[base + j * inner];
        for (int j = 0; j < k; ++j) {
          const size_t idx = base + j * inner;
          px.grad()[idx] += self.data[idx] * (self.grad[idx] - dot);
        }
      }
    }
  });
}

Tensor softmax_causal_rows(const Tensor& scores) {
  check_rank2(scores, "softmax_causal_rows");
  const int t_len = scores.shape()[0];
  if (scores.shape()[1] != t_len) {
    throw ShapeError("softmax_causal_rows: expected square matrix, got " +
                     Tensor::shape_str(scores.shape()));
  }
  check_finite(scores, "softmax_causal_rows");
  std::vector<double> out(scores.size(), 0.0);
  for (int t = 0; t < t_len; ++t) {
    const double* srow = scores.data() + static_cast<size_t>(t) * t_len;
    double mx = srow[0];
    for (int j = 1; j <= t; ++j) mx = std::max(mx, srow[j]);
    double z = 0.0;
    for (int j = 0; j <= t; ++j) {
      const double e = std::exp(srow[j] - mx);
      out[t * t_len + j] = e;
      z += e;
    }
    for (int j = 0; j <= t; ++j) out[t * t_len + j] /= z;
  }
  return make_node(scores.shape(), std::move(out), {scores}, [t_len](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    for (int t = 0; t < t_len; ++t) {
      const size_t base = static_cast<size_t>(t) * t_len;
      double dot = 0.0;
      for (int j = 0; j <= t; ++j) dot += self.grad[base + j] * self.data[base + j];
      for (int j = 0; j <= t; ++j)
        px.grad()[base + j] += self.data[base + j] * (self.grad[base + j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  if (x.rank() < 1) throw ShapeError("layer_norm: scalar input");
  const int d = x.shape()[x.rank() - 1];
  if (gamma.rank() != 1 || gamma.shape()[0] != d || beta.rank() != 1 || beta.shape()[0] != d) {
    throw ShapeError("layer_norm: gamma/beta must be [" + std::to_string(d) + "], got " +
                     Tensor::shape_str(gamma.shape()) + " and " + Tensor::shape_str(beta.shape()));
  }
  constexpr double kEps = 1e-5;
  const size_t slices = x.size() / static_cast<size_t>(d);
  std::vector<double> out(x.size());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(slices);
  for (size_t s = 0; s < slices; ++s) {
    const double* xs = x.data() + s * d;
    double mean = 0.0;
    for (int i = 0; i < d; ++i) mean += xs[i];
    mean /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) var += (xs[i] - mean) * (xs[i] - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + kEps);
    inv_std[s] = inv;
    for (int i = 0; i < d; ++i) {
      const double h = (xs[i] - mean) * inv;
      xhat[s * d + i] = h;
      out[s * d + i] = h * gamma.data()[i] + beta.data()[i];
    }
  }
  return make_node(x.shape(), std::move(out), {x, gamma, beta},
                   [d, slices, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorImpl& self) {
                     Tensor &px = self.parents[0], &pg = self.parents[1], &pb = self.parents[2];
                     for (size_t s = 0; s < slices; ++s) {
                       const size_t base = s * d;
                       if (wants(pg))
                         for (int i = 0; i < d; ++i)
                           pg.grad()[i] += self.grad[base + i] * xhat[base + i];
                       if (wants(pb))
                         for (int i = 0; i < d; ++i) pb.grad()[i] += self.grad[base + i];
                       if (wants(px)) {
                         double g_mean = 0.0, gx_mean = 0.0;
                         for (int i = 0; i < d; ++i) {
                           const double g = self.grad[base + i] * pg.data()[i];
                           g_mean += g;
                           gx_mean += g * xhat[base + i];
                         }
                         g_mean /= d;
                         gx_mean /= d;
                         for (int i = 0; i < d; ++i) {
                           const double g = self.grad[base + i] * pg.data()[i];
                           px.grad()[base + i] += (g - g_mean - xhat[base + i] * gx_mean) * inv_std[s];
                         }
                       }
                     }
                   });
}

Tensor gelu(const Tensor& x) {
  constexpr double kInvSqrt2 = 0.7071067811865475244;
  constexpr double kInvSqrt2Pi = 0.3989422804014326779;
  std::vector<double> out(x.size());
  for (size_t i = 0; i < out.size(); ++i) {
    const double v = x.data()[i];
    out[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  return make_node(x.shape(), std::move(out), {x}, [](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    for (size_t i = 0; i < self.data.size(); ++i) {
      const double v = px.data()[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      px.grad()[i] += self.grad[i] * (cdf + v * pdf);
    }
  });
}

Tensor neg_l2_scores(const Tensor& a, const Tensor& b) {
  check_rank2(b, "neg_l2_scores");
  const bool vector_input = a.rank() == 1;
  if (!vector_input) check_rank2(a, "neg_l2_scores");
  const int n = vector_input ? 1 : a.shape()[0];
  const int d = vector_input ? a.shape()[0] : a.shape()[1];
  const int k = b.shape()[0];
  if (b.shape()[1] != d) {
    throw ShapeError("neg_l2_scores: feature width mismatch " + Tensor::shape_str(a.shape()) +
                     " vs " + Tensor::shape_str(b.shape()));
  }
  std::vector<double> norms(static_cast<size_t>(n) * k);
  std::vector<double> out(norms.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      double acc = 0.0;
      for (int c = 0; c < d; ++c) {
        const double diff = b.data()[j * d + c] - a.data()[i * d + c];
        acc += diff * diff;
      }
      const double r = std::sqrt(acc);
      norms[i * k + j] = r;
      out[i * k + j] = -r;
    }
  std::vector<int> out_shape = vector_input ? std::vector<int>{k} : std::vector<int>{n, k};
  return make_node(std::move(out_shape), std::move(out), {a, b},
                   [n, d, k, norms = std::move(norms)](TensorImpl& self) {
                     Tensor &pa = self.parents[0], &pb = self.parents[1];
                     for (int i = 0; i < n; ++i)
                       for (int j = 0; j < k; ++j) {
                         const double r = norms[i * k + j];
                         if (r == 0.0) continue;  // subgradient pinned to zero
                         const double g = self.grad[i * k + j] / r;
                         for (int c = 0; c < d; ++c) {
                           const double diff = pb.data()[j * d + c] - pa.data()[i * d + c];
                           if (wants(pa)) pa.grad()[i * d + c] += g * diff;
                           if (wants(pb)) pb.grad()[j * d + c] -= g * diff;
                         }
                       }
                   });
}

Tensor cross_entropy_smoothed(const Tensor& logits, int target_class, double epsilon) {
  const bool vector_input = logits.rank() == 1;
  if (!vector_input) check_rank2(logits, "cross_entropy_smoothed");
  const int n = vector_input ? 1 : logits.shape()[0];
  const int k = vector_input ? logits.shape()[0] : logits.shape()[1];
  if (target_class < 0 || target_class >= k) {
    throw IndexError("cross_entropy_smoothed: target " + std::to_string(target_class) +
                     " out of range for " + std::to_string(k) + " classes");
  }
  if (epsilon < 0.0 || epsilon >= 1.0) {
    throw ConfigError("cross_entropy_smoothed: epsilon must be in [0,1), got " +
                      std::to_string(epsilon));
  }
  const double off = epsilon / k;          // weight on every class
  const double on = (1.0 - epsilon) + off; // weight on the target class
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double* xs = logits.data() + static_cast<size_t>(i) * k;
    double mx = xs[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, xs[j]);
    double z = 0.0;
    for (int j = 0; j < k; ++j) z += std::exp(xs[j] - mx);
    const double lse = mx + std::log(z);
    double dot = 0.0;
    for (int j = 0; j < k; ++j) dot += (j == target_class ? on : off) * xs[j];
    total += lse - dot;
  }
  total /= n;
  return make_node({}, {total}, {logits}, [n, k, target_class, on, off](TensorImpl& self) {
    Tensor& px = self.parents[0];
    if (!wants(px)) return;
    const double g = self.grad[0] / n;
    for (int i = 0; i < n; ++i) {
      const double* xs = px.data() + static_cast<size_t>(i) * k;
      double mx = xs[0];
      for (int j = 1; j < k; ++j) mx = std::max(mx, xs[j]);
      double z = 0.0;
      for (int j = 0; j < k; ++j) z += std::exp(xs[j] - mx);
      for (int j = 0; j < k; ++j) {
        const double p = std::exp(xs[j] - mx) / z;
        px.grad()[i * k + j] += g * (p - (j == target_class ? on : off));
      }
    }
  });
}

Tensor mse(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mse");
  const double inv = 1.0 / static_cast<double>(a.size());
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double diff = a.data()[i] - b.data()[i];
    acc += diff * diff;
  }
  return make_node({}, {acc * inv}, {a, b}, [inv](TensorImpl& self) {
    Tensor &pa = self.parents[0], &pb = self.parents[1];
    for (size_t i = 0; i < pa.size(); ++i) {
      const double d2 = 2.0 * inv * (pa.data()[i] - pb.data()[i]) * self.grad[0];
      if (wants(pa)) pa.grad()[i] += d2;
      if (wants(pb)) pb.grad()[i] -= d2;
    }
  });
}

Tensor stop_grad(const Tensor& x) {
  return Tensor::from(x.shape(), x.values());
}

Tensor causal_mhsa(const Tensor& x, const MhsaParams& p, int n_heads) {
  check_rank2(x, "causal_mhsa");
  const int d = x.shape()[1];
  if (n_heads < 1 || d % n_heads != 0) {
    throw ConfigError("causal_mhsa: width " + std::to_string(d) + " not divisible by " +
                      std::to_string(n_heads) + " heads");
  }
  const int dh = d / n_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor q = linear(x, p.q.w, p.q.b);
  Tensor k = linear(x, p.k.w, p.k.b);
  Tensor v = linear(x, p.v.w, p.v.b);

  std::vector<Tensor> heads;
  heads.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    Tensor qh = slice_cols(q, h * dh, (h + 1) * dh);
    Tensor kh = slice_cols(k, h * dh, (h + 1) * dh);
    Tensor vh = slice_cols(v, h * dh, (h + 1) * dh);
    Tensor attn = softmax_causal_rows(scale(matmul(qh, transpose(kh)), inv_sqrt_dh));
    heads.push_back(matmul(attn, vh));
  }
  Tensor merged = n_heads == 1 ? heads[0] : concat_cols(heads);
  return linear(merged, p.o.w, p.o.b);
}

}  // namespace earlyact
