#include "depthlayers/toynet/ops.hpp"

#include <cmath>
#include <memory>

#include <Eigen/Core>

#include "depthlayers/core/error.hpp"

namespace depthlayers::nn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

void require_rank3(const Tensor& x, const char* op) {
  if (x.shape.size() != 3) throw DimensionMismatch(std::string(op) + ": expected a (C,H,W) tensor, got " + shape_string(x.shape));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape)
    throw DimensionMismatch(std::string(op) + ": shape " + shape_string(a.shape) + " vs " + shape_string(b.shape));
}

// Accumulates `g * factor` into the gradient of `v` if it needs one.
void accumulate(Tape& t, Var v, const Tensor& g, double factor = 1.0) {
  if (!t.requires_grad(v)) return;
  Tensor& dst = t.grad(v);
  for (std::size_t i = 0; i < dst.numel(); ++i) dst[i] += factor * g[i];
}

Tensor scalar(double v) { return Tensor({1}, v); }

std::int8_t sign_of(double v) { return static_cast<std::int8_t>((v > 0.0) - (v < 0.0)); }

// |v|, with the sign routed through the tape's branch log.
double tape_abs(Tape& t, double v) { return static_cast<double>(t.branch(sign_of(v))) * v; }

struct ConvGeometry {
  int c, h, w, k, stride, pad, oh, ow;
  std::size_t rows() const { return static_cast<std::size_t>(c) * static_cast<std::size_t>(k * k); }
  std::size_t cols() const { return static_cast<std::size_t>(oh) * static_cast<std::size_t>(ow); }
};

void im2col(const Tensor& x, const ConvGeometry& g, RowMatrix& cols) {
  cols.setZero(static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
  for (int c = 0; c < g.c; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const Eigen::Index row = (c * g.k + ky) * g.k + kx;
        double* out = cols.row(row).data();
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix < 0 || ix >= g.w) continue;
            out[oy * g.ow + ox] = x.at(c, iy, ix);
          }
        }
      }
}

void col2im(const RowMatrix& cols, const ConvGeometry& g, Tensor& dx) {
  for (int c = 0; c < g.c; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const Eigen::Index row = (c * g.k + ky) * g.k + kx;
        const double* in = cols.row(row).data();
        for (int oy = 0; oy < g.oh; ++oy) {
          const int iy = oy * g.stride + ky - g.pad;
          if (iy < 0 || iy >= g.h) continue;
          for (int ox = 0; ox < g.ow; ++ox) {
            const int ix = ox * g.stride + kx - g.pad;
            if (ix < 0 || ix >= g.w) continue;
            dx.at(c, iy, ix) += in[oy * g.ow + ox];
          }
        }
      }
}

}  // namespace

Var conv2d(Tape& t, Var x, Var weight, Var bias, int stride, int pad) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(weight);
  const Tensor& bv = t.value(bias);
  require_rank3(xv, "conv2d");
  if (wv.shape.size() != 4 || wv.dim(1) != xv.dim(0) || wv.dim(2) != wv.dim(3))
    throw DimensionMismatch("conv2d: weight " + shape_string(wv.shape) + " does not fit input " + shape_string(xv.shape));
  if (bv.shape != std::vector<int>{wv.dim(0)}) throw DimensionMismatch("conv2d: bias shape");
  if (stride < 1 || pad < 0) throw InvalidArgument("conv2d: bad stride or padding");

  ConvGeometry g{xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(2), stride, pad, 0, 0};
  g.oh = (g.h + 2 * pad - g.k) / stride + 1;
  g.ow = (g.w + 2 * pad - g.k) / stride + 1;
  if (g.oh < 1 || g.ow < 1) throw DimensionMismatch("conv2d: input smaller than kernel");
  const int out_c = wv.dim(0);

  auto cols = std::make_shared<RowMatrix>();
  im2col(xv, g, *cols);
  Tensor y({out_c, g.oh, g.ow});
  MapMatrix ym(y.data.data(), out_c, static_cast<Eigen::Index>(g.cols()));
  const ConstMapMatrix wm(wv.data.data(), out_c, static_cast<Eigen::Index>(g.rows()));
  ym.noalias() = wm * (*cols);
  for (int o = 0; o < out_c; ++o) ym.row(o).array() += bv[static_cast<std::size_t>(o)];

  return t.record(std::move(y), {x, weight, bias}, [x, weight, bias, g, out_c, cols](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    const ConstMapMatrix gm(gy.data.data(), out_c, static_cast<Eigen::Index>(g.cols()));
    if (tp.requires_grad(weight)) {
      Tensor& gw = tp.grad(weight);
      MapMatrix gwm(gw.data.data(), out_c, static_cast<Eigen::Index>(g.rows()));
      gwm.noalias() += gm * cols->transpose();
    }
    if (tp.requires_grad(bias)) {
      Tensor& gb = tp.grad(bias);
      for (int o = 0; o < out_c; ++o) gb[static_cast<std::size_t>(o)] += gm.row(o).sum();
    }
    if (tp.requires_grad(x)) {
      const Tensor& wv2 = tp.value(weight);
      const ConstMapMatrix wm2(wv2.data.data(), out_c, static_cast<Eigen::Index>(g.rows()));
      RowMatrix dcols = wm2.transpose() * gm;
      col2im(dcols, g, tp.grad(x));
    }
  });
}

Var leaky_relu(Tape& t, Var x, double slope) {
  Tensor y = t.value(x);
  for (double& v : y.data)
    if (t.branch(v < 0.0 ? -1 : 1) < 0) v *= slope;
  return t.record(std::move(y), {x}, [x, slope](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    const Tensor& xv = tp.value(x);
    Tensor& gx = tp.grad(x);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += xv[i] < 0.0 ? slope * gy[i] : gy[i];
  });
}

Var add(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "add");
  Tensor y = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] += bv[i];
  return t.record(std::move(y), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor gy = tp.grad(self);
    accumulate(tp, a, gy);
    accumulate(tp, b, gy);
  });
}

Var sub(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "sub");
  Tensor y = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] -= bv[i];
  return t.record(std::move(y), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor gy = tp.grad(self);
    accumulate(tp, a, gy);
    accumulate(tp, b, gy, -1.0);
  });
}

Var scale(Tape& t, Var x, double s) {
  Tensor y = t.value(x);
  for (double& v : y.data) v *= s;
  return t.record(std::move(y), {x}, [x, s](Tape& tp, std::size_t self) {
    const Tensor gy = tp.grad(self);
    accumulate(tp, x, gy, s);
  });
}

Var sum(Tape& t, const std::vector<Var>& xs) {
  if (xs.empty()) throw InvalidArgument("sum of no tensors");
  Tensor y = t.value(xs[0]);
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const Tensor& v = t.value(xs[k]);
    require_same_shape(y, v, "sum");
    for (std::size_t i = 0; i < y.numel(); ++i) y[i] += v[i];
  }
  return t.record(std::move(y), xs, [xs](Tape& tp, std::size_t self) {
    const Tensor gy = tp.grad(self);
    for (Var v : xs) accumulate(tp, v, gy);
  });
}

Var concat(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_rank3(av, "concat");
  require_rank3(bv, "concat");
  if (av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2)) throw DimensionMismatch("concat: spatial sizes differ");
  Tensor y({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
  std::copy(av.data.begin(), av.data.end(), y.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(av.numel()));
  const std::size_t split = av.numel();
  return t.record(std::move(y), {a, b}, [a, b, split](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad(a);
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += gy[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad(b);
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += gy[split + i];
    }
  });
}

Var upsample2(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  require_rank3(xv, "upsample2");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  Tensor y({c, 2 * h, 2 * w});
  for (int k = 0; k < c; ++k)
    for (int yy = 0; yy < 2 * h; ++yy)
      for (int xx = 0; xx < 2 * w; ++xx) y.at(k, yy, xx) = xv.at(k, yy / 2, xx / 2);
  return t.record(std::move(y), {x}, [x, c, h, w](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    Tensor& gx = tp.grad(x);
    for (int k = 0; k < c; ++k)
      for (int yy = 0; yy < 2 * h; ++yy)
        for (int xx = 0; xx < 2 * w; ++xx) gx.at(k, yy / 2, xx / 2) += gy.at(k, yy, xx);
  });
}

Var avgpool2(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  require_rank3(xv, "avgpool2");
  const int c = xv.dim(0), h = xv.dim(1) / 2, w = xv.dim(2) / 2;
  if (h < 1 || w < 1) throw DimensionMismatch("avgpool2: input smaller than 2x2");
  Tensor y({c, h, w});
  for (int k = 0; k < c; ++k)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx)
        y.at(k, yy, xx) = 0.25 * (xv.at(k, 2 * yy, 2 * xx) + xv.at(k, 2 * yy, 2 * xx + 1) +
                                  xv.at(k, 2 * yy + 1, 2 * xx) + xv.at(k, 2 * yy + 1, 2 * xx + 1));
  return t.record(std::move(y), {x}, [x, c, h, w](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    Tensor& gx = tp.grad(x);
    for (int k = 0; k < c; ++k)
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          const double g = 0.25 * gy.at(k, yy, xx);
          gx.at(k, 2 * yy, 2 * xx) += g;
          gx.at(k, 2 * yy, 2 * xx + 1) += g;
          gx.at(k, 2 * yy + 1, 2 * xx) += g;
          gx.at(k, 2 * yy + 1, 2 * xx + 1) += g;
        }
  });
}

Var crop(Tape& t, Var x, int h, int w) {
  const Tensor& xv = t.value(x);
  require_rank3(xv, "crop");
  if (h > xv.dim(1) || w > xv.dim(2) || h < 1 || w < 1) throw DimensionMismatch("crop: window outside tensor");
  const int c = xv.dim(0);
  if (h == xv.dim(1) && w == xv.dim(2)) return x;
  Tensor y({c, h, w});
  for (int k = 0; k < c; ++k)
    for (int yy = 0; yy < h; ++yy)
      for (int xx = 0; xx < w; ++xx) y.at(k, yy, xx) = xv.at(k, yy, xx);
  return t.record(std::move(y), {x}, [x, c, h, w](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    Tensor& gx = tp.grad(x);
    for (int k = 0; k < c; ++k)
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) gx.at(k, yy, xx) += gy.at(k, yy, xx);
  });
}

Var blend(Tape& t, Var a, Var b, const Tensor& alpha) {
  const Tensor& av = t.value(a);
  require_same_shape(av, t.value(b), "blend");
  require_rank3(av, "blend");
  if (alpha.shape != std::vector<int>{1, av.dim(1), av.dim(2)}) throw DimensionMismatch("blend: alpha shape");
  const std::size_t plane = alpha.numel();
  Tensor y = av;
  const Tensor& bv = t.value(b);
  for (std::size_t i = 0; i < y.numel(); ++i) {
    const double al = alpha[i % plane];
    y[i] = al * av[i] + (1.0 - al) * bv[i];
  }
  return t.record(std::move(y), {a, b}, [a, b, alpha, plane](Tape& tp, std::size_t self) {
    const Tensor& gy = tp.grad(self);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad(a);
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += alpha[i % plane] * gy[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad(b);
      for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] += (1.0 - alpha[i % plane]) * gy[i];
    }
  });
}

Var mean(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  double s = 0.0;
  for (double v : xv.data) s += v;
  const double n = static_cast<double>(xv.numel());
  return t.record(scalar(s / n), {x}, [x, n](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0] / n;
    Tensor& gx = tp.grad(x);
    for (double& v : gx.data) v += g;
  });
}

Var mean_abs(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  double s = 0.0;
  for (double v : xv.data) s += tape_abs(t, v);
  const double n = static_cast<double>(xv.numel());
  return t.record(scalar(s / n), {x}, [x, n](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0] / n;
    const Tensor& xv2 = tp.value(x);
    Tensor& gx = tp.grad(x);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g * static_cast<double>((xv2[i] > 0.0) - (xv2[i] < 0.0));
  });
}

Var mean_square(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  double s = 0.0;
  for (double v : xv.data) s += v * v;
  const double n = static_cast<double>(xv.numel());
  return t.record(scalar(s / n), {x}, [x, n](Tape& tp, std::size_t self) {
    const double g = 2.0 * tp.grad(self)[0] / n;
    const Tensor& xv2 = tp.value(x);
    Tensor& gx = tp.grad(x);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g * xv2[i];
  });
}

Var gradient_abs_mean(Tape& t, Var x) {
  const Tensor& xv = t.value(x);
  require_rank3(xv, "gradient_abs_mean");
  const int c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  double s = 0.0;
  for (int k = 0; k < c; ++k)
    for (int y = 0; y < h; ++y)
      for (int xx = 0; xx < w; ++xx) {
        if (xx + 1 < w) s += tape_abs(t, xv.at(k, y, xx + 1) - xv.at(k, y, xx));
        if (y + 1 < h) s += tape_abs(t, xv.at(k, y + 1, xx) - xv.at(k, y, xx));
      }
  const double n = static_cast<double>(h) * static_cast<double>(w);
  return t.record(scalar(s / n), {x}, [x, c, h, w, n](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)[0] / n;
    const Tensor& v = tp.value(x);
    Tensor& gx = tp.grad(x);
    auto sign = [](double d) { return static_cast<double>((d > 0.0) - (d < 0.0)); };
    for (int k = 0; k < c; ++k)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          if (xx + 1 < w) {
            const double sg = g * sign(v.at(k, y, xx + 1) - v.at(k, y, xx));
            gx.at(k, y, xx + 1) += sg;
            gx.at(k, y, xx) -= sg;
          }
          if (y + 1 < h) {
            const double sg = g * sign(v.at(k, y + 1, xx) - v.at(k, y, xx));
            gx.at(k, y + 1, xx) += sg;
            gx.at(k, y, xx) -= sg;
          }
        }
  });
}

}  // namespace depthlayers::nn
