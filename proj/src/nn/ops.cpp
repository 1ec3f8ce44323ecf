#include "roomlay/nn/ops.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Core>

#include "roomlay/error.hpp"

namespace roomlay::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::ArrayXd>;
using ConstVecMap = Eigen::Map<const Eigen::ArrayXd>;

ConstMatMap cmat(const double* p, int rows, int cols) { return ConstMatMap(p, rows, cols); }
MatMap mat(double* p, int rows, int cols) { return MatMap(p, rows, cols); }
ConstVecMap cvec(const Tensor& t) { return ConstVecMap(t.data(), static_cast<Eigen::Index>(t.size())); }
VecMap vec(Tensor& t) { return VecMap(t.data(), static_cast<Eigen::Index>(t.size())); }

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  fail(ErrorCode::kShapeMismatch,
       std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

void require_same(const char* op, Var a, Var b) {
  if (a.shape() != b.shape()) shape_error(op, a.shape(), b.shape());
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = *a.graph;
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const Shape sa = A.shape(), sb = B.shape();
  const int ra = A.rank(), rb = B.rank();
  if (ra < 2 || ra > 3 || rb < 2 || rb > 3) shape_error("matmul", sa, sb);
  const int batch = (ra == 3) ? sa[0] : (rb == 3 ? sb[0] : 1);
  const int m = sa[ra - 2], k = sa[ra - 1];
  const int kb = sb[rb - 2], n = sb[rb - 1];
  if (k != kb || (ra == 3 && rb == 3 && sa[0] != sb[0])) shape_error("matmul", sa, sb);

  Shape out_shape = (ra == 2 && rb == 2) ? Shape{m, n} : Shape{batch, m, n};
  Tensor out(out_shape);
  const std::size_t a_stride = (ra == 3) ? static_cast<std::size_t>(m) * k : 0;
  const std::size_t b_stride = (rb == 3) ? static_cast<std::size_t>(k) * n : 0;
  const std::size_t c_stride = static_cast<std::size_t>(m) * n;

  if (ra == 3 && rb == 2) {
    // Stack the batch into rows: one GEMM.
    mat(out.data(), batch * m, n).noalias() = cmat(A.data(), batch * m, k) * cmat(B.data(), k, n);
  } else {
    for (int i = 0; i < batch; ++i) {
      mat(out.data() + i * c_stride, m, n).noalias() =
          cmat(A.data() + i * a_stride, m, k) * cmat(B.data() + i * b_stride, k, n);
    }
  }

  return g.record("matmul", std::move(out), {a, b},
                  [a, b, ra, rb, batch, m, k, n, a_stride, b_stride, c_stride](Graph& g, const Tensor& dc) {
                    const Tensor& A = g.value(a);
                    const Tensor& B = g.value(b);
                    if (ra == 3 && rb == 2) {
                      if (g.needs_grad(a)) {
                        mat(g.grad(a).data(), batch * m, k).noalias() +=
                            cmat(dc.data(), batch * m, n) * cmat(B.data(), k, n).transpose();
                      }
                      if (g.needs_grad(b)) {
                        mat(g.grad(b).data(), k, n).noalias() +=
                            cmat(A.data(), batch * m, k).transpose() * cmat(dc.data(), batch * m, n);
                      }
                      return;
                    }
                    for (int i = 0; i < batch; ++i) {
                      auto dci = cmat(dc.data() + i * c_stride, m, n);
                      if (g.needs_grad(a)) {
                        mat(g.grad(a).data() + i * a_stride, m, k).noalias() +=
                            dci * cmat(B.data() + i * b_stride, k, n).transpose();
                      }
                      if (g.needs_grad(b)) {
                        mat(g.grad(b).data() + i * b_stride, k, n).noalias() +=
                            cmat(A.data() + i * a_stride, m, k).transpose() * dci;
                      }
                    }
                  });
}

Var add_bias(Var x, Var bias) {
  Graph& g = *x.graph;
  const Tensor& X = x.value();
  const Tensor& b = bias.value();
  if (X.rank() < 2 || b.rank() != 1 || b.dim(0) != X.dim(1)) shape_error("add_bias", X.shape(), b.shape());
  const int outer = X.dim(0), channels = X.dim(1);
  const std::size_t inner = X.size() / (static_cast<std::size_t>(outer) * channels);
  Tensor out = X;
  double* o = out.data();
  for (int i = 0; i < outer; ++i) {
    for (int c = 0; c < channels; ++c) {
      double* row = o + (static_cast<std::size_t>(i) * channels + c) * inner;
      const double bc = b[c];
      for (std::size_t j = 0; j < inner; ++j) row[j] += bc;
    }
  }
  return g.record("add_bias", std::move(out), {x, bias},
                  [x, bias, outer, channels, inner](Graph& g, const Tensor& d) {
                    if (g.needs_grad(x)) vec(g.grad(x)) += cvec(d);
                    if (g.needs_grad(bias)) {
                      Tensor& db = g.grad(bias);
                      for (int i = 0; i < outer; ++i) {
                        for (int c = 0; c < channels; ++c) {
                          const double* row = d.data() + (static_cast<std::size_t>(i) * channels + c) * inner;
                          double acc = 0.0;
                          for (std::size_t j = 0; j < inner; ++j) acc += row[j];
                          db[c] += acc;
                        }
                      }
                    }
                  });
}

Var add(Var a, Var b) {
  require_same("add", a, b);
  Tensor out = a.value();
  vec(out) += cvec(b.value());
  return a.graph->record("add", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& d) {
    if (g.needs_grad(a)) vec(g.grad(a)) += cvec(d);
    if (g.needs_grad(b)) vec(g.grad(b)) += cvec(d);
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a, b);
  Tensor out = a.value();
  vec(out) -= cvec(b.value());
  return a.graph->record("sub", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& d) {
    if (g.needs_grad(a)) vec(g.grad(a)) += cvec(d);
    if (g.needs_grad(b)) vec(g.grad(b)) -= cvec(d);
  });
}

Var mul(Var a, Var b) {
  require_same("mul", a, b);
  Tensor out = a.value();
  vec(out) *= cvec(b.value());
  return a.graph->record("mul", std::move(out), {a, b}, [a, b](Graph& g, const Tensor& d) {
    if (g.needs_grad(a)) vec(g.grad(a)) += cvec(d) * cvec(g.value(b));
    if (g.needs_grad(b)) vec(g.grad(b)) += cvec(d) * cvec(g.value(a));
  });
}

Var scale(Var x, double s) {
  Tensor out = x.value();
  vec(out) *= s;
  return x.graph->record("scale", std::move(out), {x}, [x, s](Graph& g, const Tensor& d) {
    vec(g.grad(x)) += s * cvec(d);
  });
}

Var add_scalar(Var x, double s) {
  Tensor out = x.value();
  vec(out) += s;
  return x.graph->record("add_scalar", std::move(out), {x}, [x](Graph& g, const Tensor& d) {
    vec(g.grad(x)) += cvec(d);
  });
}

Var one_minus(Var x) {
  Tensor out = x.value();
  vec(out) = 1.0 - vec(out);
  return x.graph->record("one_minus", std::move(out), {x}, [x](Graph& g, const Tensor& d) {
    vec(g.grad(x)) -= cvec(d);
  });
}

Var relu(Var x) {
  Graph& g = *x.graph;
  const Tensor& X = x.value();
  Tensor out(X.shape());
  vec(out) = cvec(X).max(0.0);
  if (g.recording_kinks()) {
    auto& k = g.kink_pattern();
    for (double v : X.values()) k.push_back(v > 0.0 ? 1 : (v < 0.0 ? 0 : 2));
  }
  return g.record("relu", std::move(out), {x}, [x](Graph& g, const Tensor& d) {
    Tensor& dx = g.grad(x);
    const Tensor& X = g.value(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (X[i] > 0.0) dx[i] += d[i];
    }
  });
}

Var clamp01(Var x) {
  Graph& g = *x.graph;
  const Tensor& X = x.value();
  Tensor out(X.shape());
  vec(out) = cvec(X).max(0.0).min(1.0);
  if (g.recording_kinks()) {
    auto& k = g.kink_pattern();
    for (double v : X.values()) {
      k.push_back(v < 0.0 ? 0 : v == 0.0 ? 3 : v < 1.0 ? 1 : v == 1.0 ? 4 : 2);
    }
  }
  return g.record("clamp01", std::move(out), {x}, [x](Graph& g, const Tensor& d) {
    Tensor& dx = g.grad(x);
    const Tensor& X = g.value(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (X[i] > 0.0 && X[i] < 1.0) dx[i] += d[i];
    }
  });
}

Var abs(Var x) {
  Graph& g = *x.graph;
  const Tensor& X = x.value();
  Tensor out(X.shape());
  vec(out) = cvec(X).abs();
  if (g.recording_kinks()) {
    auto& k = g.kink_pattern();
    for (double v : X.values()) k.push_back(v > 0.0 ? 1 : (v < 0.0 ? 0 : 2));
  }
  return g.record("abs", std::move(out), {x}, [x](Graph& g, const Tensor& d) {
    Tensor& dx = g.grad(x);
    const Tensor& X = g.value(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      if (X[i] > 0.0) dx[i] += d[i];
      else if (X[i] < 0.0) dx[i] -= d[i];
    }
  });
}

Var sigmoid(Var x) {
  const Tensor& X = x.value();
  Tensor out(X.shape());
  const double lo = std::numeric_limits<double>::denorm_min();
  const double hi = std::nextafter(1.0, 0.0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double v = X[i];
    const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    out[i] = std::min(std::max(s, lo), hi);
  }
  return x.graph->record("sigmoid", std::move(out), {x}, [x](Graph& g, const Tensor& d) {
    // Output node is the one being differentiated; recompute from input.
    Tensor& dx = g.grad(x);
    const Tensor& X = g.value(x);
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const double v = X[i];
      const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      dx[i] += d[i] * s * (1.0 - s);
    }
  });
}

Var conv2d(Var x, Var w) {
  Graph& g = *x.graph;
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  if (X.rank() != 4 || W.rank() != 4 || W.dim(1) != X.dim(1) || W.dim(2) != 3 || W.dim(3) != 3) {
    shape_error("conv2d", X.shape(), W.shape());
  }
  const int N = X.dim(0), C = X.dim(1), H = X.dim(2), Wd = X.dim(3), O = W.dim(0);
  const int Ho = (H + 1) / 2, Wo = (Wd + 1) / 2;
  const int K = C * 9;
  const int cols_n = N * Ho * Wo;

  auto cols = std::make_shared<Tensor>(Shape{K, cols_n});
  double* cp = cols->data();
  for (int c = 0; c < C; ++c) {
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* row = cp + static_cast<std::size_t>(c * 9 + ky * 3 + kx) * cols_n;
        for (int n = 0; n < N; ++n) {
          const double* src = X.data() + (static_cast<std::size_t>(n) * C + c) * H * Wd;
          double* dst = row + static_cast<std::size_t>(n) * Ho * Wo;
          for (int oy = 0; oy < Ho; ++oy) {
            const int iy = 2 * oy - 1 + ky;
            for (int ox = 0; ox < Wo; ++ox) {
              const int ix = 2 * ox - 1 + kx;
              dst[oy * Wo + ox] = (iy >= 0 && iy < H && ix >= 0 && ix < Wd) ? src[iy * Wd + ix] : 0.0;
            }
          }
        }
      }
    }
  }

  RowMat out_mat = cmat(W.data(), O, K) * cmat(cols->data(), K, cols_n);
  Tensor out(Shape{N, O, Ho, Wo});
  const int plane = Ho * Wo;
  for (int n = 0; n < N; ++n) {
    for (int o = 0; o < O; ++o) {
      const double* src = out_mat.data() + static_cast<std::size_t>(o) * cols_n + static_cast<std::size_t>(n) * plane;
      std::copy(src, src + plane, out.data() + (static_cast<std::size_t>(n) * O + o) * plane);
    }
  }

  return g.record("conv2d", std::move(out), {x, w},
                  [x, w, cols, N, C, H, Wd, O, Ho, Wo, K, cols_n](Graph& g, const Tensor& d) {
                    const int plane = Ho * Wo;
                    RowMat d_mat(O, cols_n);
                    for (int n = 0; n < N; ++n) {
                      for (int o = 0; o < O; ++o) {
                        const double* src = d.data() + (static_cast<std::size_t>(n) * O + o) * plane;
                        std::copy(src, src + plane,
                                  d_mat.data() + static_cast<std::size_t>(o) * cols_n +
                                      static_cast<std::size_t>(n) * plane);
                      }
                    }
                    if (g.needs_grad(w)) {
                      mat(g.grad(w).data(), O, K).noalias() += d_mat * cmat(cols->data(), K, cols_n).transpose();
                    }
                    if (g.needs_grad(x)) {
                      RowMat dcols = cmat(g.value(w).data(), O, K).transpose() * d_mat;
                      Tensor& dx = g.grad(x);
                      for (int c = 0; c < C; ++c) {
                        for (int ky = 0; ky < 3; ++ky) {
                          for (int kx = 0; kx < 3; ++kx) {
                            const double* row = dcols.data() + static_cast<std::size_t>(c * 9 + ky * 3 + kx) * cols_n;
                            for (int n = 0; n < N; ++n) {
                              double* dst = dx.data() + (static_cast<std::size_t>(n) * C + c) * H * Wd;
                              const double* src = row + static_cast<std::size_t>(n) * plane;
                              for (int oy = 0; oy < Ho; ++oy) {
                                const int iy = 2 * oy - 1 + ky;
                                if (iy < 0 || iy >= H) continue;
                                for (int ox = 0; ox < Wo; ++ox) {
                                  const int ix = 2 * ox - 1 + kx;
                                  if (ix >= 0 && ix < Wd) dst[iy * Wd + ix] += src[oy * Wo + ox];
                                }
                              }
                            }
                          }
                        }
                      }
                    }
                  });
}

Var global_avg_pool(Var x) {
  const Tensor& X = x.value();
  if (X.rank() != 4) shape_error("global_avg_pool", X.shape(), Shape{});
  const int N = X.dim(0), C = X.dim(1);
  const int plane = X.dim(2) * X.dim(3);
  Tensor out(Shape{N, C});
  for (int i = 0; i < N * C; ++i) {
    const double* p = X.data() + static_cast<std::size_t>(i) * plane;
    double acc = 0.0;
    for (int j = 0; j < plane; ++j) acc += p[j];
    out[i] = acc / plane;
  }
  return x.graph->record("global_avg_pool", std::move(out), {x}, [x, N, C, plane](Graph& g, const Tensor& d) {
    Tensor& dx = g.grad(x);
    for (int i = 0; i < N * C; ++i) {
      const double v = d[i] / plane;
      double* p = dx.data() + static_cast<std::size_t>(i) * plane;
      for (int j = 0; j < plane; ++j) p[j] += v;
    }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.graph->record("reshape", std::move(out), {x}, [x](Graph& g, const Tensor& d) {
    vec(g.grad(x)) += cvec(d);
  });
}

Var flatten(Var x) {
  const Shape& s = x.shape();
  if (s.empty()) shape_error("flatten", s, Shape{});
  const int batch = s[0];
  const int rest = batch == 0 ? 0 : static_cast<int>(x.value().size() / batch);
  return reshape(x, Shape{batch, rest});
}

Var sum(Var x) {
  const double s = cvec(x.value()).sum();
  return x.graph->record("sum", Tensor::scalar(s), {x}, [x](Graph& g, const Tensor& d) {
    vec(g.grad(x)) += d[0];
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  const double s = cvec(x.value()).sum() / n;
  return x.graph->record("mean", Tensor::scalar(s), {x}, [x, n](Graph& g, const Tensor& d) {
    vec(g.grad(x)) += d[0] / n;
  });
}

Var mse(Var a, Var b) {
  require_same("mse", a, b);
  const double n = static_cast<double>(a.value().size());
  const double s = (cvec(a.value()) - cvec(b.value())).square().sum() / n;
  return a.graph->record("mse", Tensor::scalar(s), {a, b}, [a, b, n](Graph& g, const Tensor& d) {
    const double k = 2.0 * d[0] / n;
    if (g.needs_grad(a)) vec(g.grad(a)) += k * (cvec(g.value(a)) - cvec(g.value(b)));
    if (g.needs_grad(b)) vec(g.grad(b)) -= k * (cvec(g.value(a)) - cvec(g.value(b)));
  });
}

Var l1(Var a, Var b) {
  require_same("l1", a, b);
  const double n = static_cast<double>(a.value().size());
  const double s = (cvec(a.value()) - cvec(b.value())).abs().sum() / n;
  if (a.graph->recording_kinks()) {
    auto& k = a.graph->kink_pattern();
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    for (std::size_t i = 0; i < A.size(); ++i) {
      const double v = A[i] - B[i];
      k.push_back(v > 0.0 ? 1 : (v < 0.0 ? 0 : 2));
    }
  }
  return a.graph->record("l1", Tensor::scalar(s), {a, b}, [a, b, n](Graph& g, const Tensor& d) {
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    const double k = d[0] / n;
    for (std::size_t i = 0; i < A.size(); ++i) {
      const double diff = A[i] - B[i];
      const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
      if (g.needs_grad(a)) g.grad(a)[i] += k * sgn;
      if (g.needs_grad(b)) g.grad(b)[i] -= k * sgn;
    }
  });
}

}  // namespace roomlay::nn
