// Copyright 2026 The Recon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "recon/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "recon/error.hpp"

namespace recon::rt {

namespace {

constexpr std::array<std::pair<OpType, std::string_view>, 17> kNames{{
    {OpType::Conv2D, "Conv2D"},
    {OpType::DepthwiseConv2D, "DepthwiseConv2D"},
    {OpType::Conv2DTranspose, "Conv2DTranspose"},
    {OpType::MaxPooling, "MaxPooling"},
    {OpType::AveragePooling, "AveragePooling"},
    {OpType::UpSampling, "UpSampling"},
    {OpType::Pad, "Pad"},
    {OpType::MirrorPad, "MirrorPad"},
    {OpType::Space2Batch, "Space2Batch"},
    {OpType::Dense, "Dense"},
    {OpType::Add, "Add"},
    {OpType::Mul, "Mul"},
    {OpType::Concat, "Concat"},
    {OpType::Reshape, "Reshape"},
    {OpType::ReLU, "ReLU"},
    {OpType::Sigmoid, "Sigmoid"},
    {OpType::Softmax, "Softmax"},
}};

[[noreturn]] void mismatch(OpType op, const std::string& msg) {
  fail(ErrorKind::ShapeMismatch, std::string(to_string(op)) + ": " + msg);
}

// NHWC view.
struct Dims {
  std::int64_t n, h, w, c;
  explicit Dims(const Shape& s) : n(s[0]), h(s[1]), w(s[2]), c(s[3]) {}
  std::size_t at(std::int64_t b, std::int64_t y, std::int64_t x, std::int64_t ch) const {
    return static_cast<std::size_t>(((b * h + y) * w + x) * c + ch);
  }
};

std::size_t idx4(const Shape& s, std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  return static_cast<std::size_t>(((a * s[1] + b) * s[2] + c) * s[3] + d);
}

void need_rank(OpType op, const Shape& s, std::size_t rank) {
  if (s.size() != rank)
    mismatch(op, "expected rank " + std::to_string(rank) + ", got " + format_shape(s));
}

std::int64_t reflect(std::int64_t i, std::int64_t n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * (n - 1) - i;
  return i;
}

// Window geometry shared by the pooling kernels.
struct PoolGeom {
  std::int64_t p, oh, ow, ph, pw;
};

PoolGeom pool_geom(const Shape& x, const Attributes& a) {
  const std::int64_t p = a.pool_size;
  return {p, conv_out(x[1], p, p, a.padding), conv_out(x[2], p, p, a.padding),
          pad_before(x[1], p, p, a.padding), pad_before(x[2], p, p, a.padding)};
}

}  // namespace

std::string_view to_string(OpType op) {
  for (const auto& [o, n] : kNames)
    if (o == op) return n;
  return "?";
}

std::optional<OpType> op_from_string(std::string_view name) {
  for (const auto& [o, n] : kNames)
    if (n == name) return o;
  return std::nullopt;
}

std::string_view to_string(Padding p) { return p == Padding::Same ? "same" : "valid"; }

bool has_weights(OpType op) {
  return op == OpType::Conv2D || op == OpType::DepthwiseConv2D ||
         op == OpType::Conv2DTranspose || op == OpType::Dense;
}

std::int64_t conv_out(std::int64_t in, std::int64_t k, std::int64_t s, Padding p) {
  if (s < 1 || k < 1) return 0;
  if (p == Padding::Same) return (in + s - 1) / s;
  return in >= k ? (in - k) / s + 1 : 0;
}

std::int64_t pad_before(std::int64_t in, std::int64_t k, std::int64_t s, Padding p) {
  if (p == Padding::Valid) return 0;
  const std::int64_t out = conv_out(in, k, s, p);
  return std::max<std::int64_t>((out - 1) * s + k - in, 0) / 2;
}

std::int64_t transpose_out(std::int64_t in, std::int64_t k, std::int64_t s, Padding p) {
  if (p == Padding::Same) return in * s;
  return in * s + std::max<std::int64_t>(k - s, 0);
}

namespace {

std::int64_t transpose_pad(std::int64_t k, std::int64_t s, Padding p) {
  return p == Padding::Same ? std::max<std::int64_t>(k - s, 0) / 2 : 0;
}

}  // namespace

Shape infer_shape(OpType op, const Attributes& a, const std::vector<Shape>& in,
                  const Shape& declared) {
  if (in.empty()) mismatch(op, "no inputs");
  const Shape& x = in[0];
  auto check_bias = [&](std::int64_t channels) {
    if (in.size() > 2 && (in[2].size() != 1 || in[2][0] != channels))
      mismatch(op, "bias shape " + format_shape(in[2]) + " does not match " +
                       std::to_string(channels) + " channels");
  };
  auto need_kernel = [&](const Shape& w) {
    need_rank(op, w, 4);
    if (a.kernel[0] != w[0] || a.kernel[1] != w[1])
      mismatch(op, "kernel attribute disagrees with weight shape " + format_shape(w));
    if (a.strides[0] < 1 || a.strides[1] < 1) mismatch(op, "strides must be >= 1");
  };
  auto positive = [&](Shape s) {
    for (auto d : s)
      if (d < 1) mismatch(op, "input " + format_shape(x) + " too small for the window");
    return s;
  };
  switch (op) {
    case OpType::Conv2D: {
      need_rank(op, x, 4);
      if (in.size() < 2) mismatch(op, "missing kernel");
      const Shape& w = in[1];
      need_kernel(w);
      if (w[2] != x[3]) mismatch(op, "kernel input channels " + std::to_string(w[2]) +
                                         " vs input " + std::to_string(x[3]));
      if (a.filters != w[3]) mismatch(op, "filters attribute disagrees with kernel");
      check_bias(w[3]);
      return positive({x[0], conv_out(x[1], w[0], a.strides[0], a.padding),
                       conv_out(x[2], w[1], a.strides[1], a.padding), w[3]});
    }
    case OpType::DepthwiseConv2D: {
      need_rank(op, x, 4);
      if (in.size() < 2) mismatch(op, "missing kernel");
      const Shape& w = in[1];
      need_kernel(w);
      if (w[2] != x[3]) mismatch(op, "kernel channels disagree with input");
      if (a.depth_multiplier != w[3]) mismatch(op, "depth_multiplier disagrees with kernel");
      check_bias(w[2] * w[3]);
      return positive({x[0], conv_out(x[1], w[0], a.strides[0], a.padding),
                       conv_out(x[2], w[1], a.strides[1], a.padding), w[2] * w[3]});
    }
    case OpType::Conv2DTranspose: {
      need_rank(op, x, 4);
      if (in.size() < 2) mismatch(op, "missing kernel");
      const Shape& w = in[1];
      need_kernel(w);
      if (w[3] != x[3]) mismatch(op, "kernel input channels disagree with input");
      if (a.filters != w[2]) mismatch(op, "filters attribute disagrees with kernel");
      check_bias(w[2]);
      return {x[0], transpose_out(x[1], w[0], a.strides[0], a.padding),
              transpose_out(x[2], w[1], a.strides[1], a.padding), w[2]};
    }
    case OpType::MaxPooling:
    case OpType::AveragePooling: {
      need_rank(op, x, 4);
      if (a.pool_size < 1) mismatch(op, "pool_size must be >= 1");
      const auto g = pool_geom(x, a);
      return positive({x[0], g.oh, g.ow, x[3]});
    }
    case OpType::UpSampling:
      need_rank(op, x, 4);
      if (a.size[0] < 1 || a.size[1] < 1) mismatch(op, "size must be >= 1");
      return {x[0], x[1] * a.size[0], x[2] * a.size[1], x[3]};
    case OpType::Pad:
    case OpType::MirrorPad:
      need_rank(op, x, 4);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          if (a.pads[i][j] < 0) mismatch(op, "negative padding");
          if (op == OpType::MirrorPad && a.pads[i][j] >= x[1 + i])
            mismatch(op, "reflect padding must be smaller than the input extent");
        }
      return {x[0], x[1] + a.pads[0][0] + a.pads[0][1], x[2] + a.pads[1][0] + a.pads[1][1], x[3]};
    case OpType::Space2Batch: {
      need_rank(op, x, 4);
      const std::int64_t b = a.block_size;
      if (b < 1) mismatch(op, "block_size must be >= 1");
      const std::int64_t h = x[1] + a.pads[0][0] + a.pads[0][1];
      const std::int64_t w = x[2] + a.pads[1][0] + a.pads[1][1];
      if (h % b || w % b) mismatch(op, "padded extent not divisible by block_size");
      return {x[0] * b * b, h / b, w / b, x[3]};
    }
    case OpType::Dense: {
      if (in.size() < 2) mismatch(op, "missing kernel");
      const Shape& w = in[1];
      need_rank(op, w, 2);
      if (x.empty() || x.back() != w[0]) mismatch(op, "input features disagree with kernel");
      check_bias(w[1]);
      Shape out = x;
      out.back() = w[1];
      return out;
    }
    case OpType::Add:
    case OpType::Mul:
      if (in.size() != 2 || in[1] != x) mismatch(op, "operands must have equal shapes");
      return x;
    case OpType::Concat: {
      Shape out = x;
      out.back() = 0;
      for (const auto& s : in) {
        if (s.size() != x.size() || !std::equal(s.begin(), s.end() - 1, x.begin()))
          mismatch(op, "inputs differ outside the last axis");
        out.back() += s.back();
      }
      return out;
    }
    case OpType::Reshape:
      if (numel(declared) != numel(x)) mismatch(op, "element count changes");
      return declared;
    case OpType::ReLU:
    case OpType::Sigmoid:
    case OpType::Softmax:
      return x;
  }
  fail(ErrorKind::UnsupportedOp, "unsupported op");
}

Tensor forward(OpType op, const Attributes& a, const std::vector<const Tensor*>& in,
               const Shape& out_shape) {
  const Tensor& x = *in[0];
  Tensor y(out_shape);
  const Tensor* bias = in.size() > 2 ? in[2] : nullptr;
  switch (op) {
    case OpType::Conv2D: {
      const Tensor& w = *in[1];
      const Dims X(x.shape), Y(y.shape);
      const auto kh = w.shape[0], kw = w.shape[1];
      const auto ph = pad_before(X.h, kh, a.strides[0], a.padding);
      const auto pw = pad_before(X.w, kw, a.strides[1], a.padding);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox)
            for (std::int64_t f = 0; f < Y.c; ++f) {
              double acc = bias ? (*bias)[static_cast<std::size_t>(f)] : 0.0;
              for (std::int64_t i = 0; i < kh; ++i) {
                const auto iy = oy * a.strides[0] + i - ph;
                if (iy < 0 || iy >= X.h) continue;
                for (std::int64_t j = 0; j < kw; ++j) {
                  const auto ix = ox * a.strides[1] + j - pw;
                  if (ix < 0 || ix >= X.w) continue;
                  for (std::int64_t c = 0; c < X.c; ++c)
                    acc += x[X.at(n, iy, ix, c)] * w[idx4(w.shape, i, j, c, f)];
                }
              }
              y[Y.at(n, oy, ox, f)] = acc;
            }
      return y;
    }
    case OpType::DepthwiseConv2D: {
      const Tensor& w = *in[1];
      const Dims X(x.shape), Y(y.shape);
      const auto kh = w.shape[0], kw = w.shape[1], m = w.shape[3];
      const auto ph = pad_before(X.h, kh, a.strides[0], a.padding);
      const auto pw = pad_before(X.w, kw, a.strides[1], a.padding);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox)
            for (std::int64_t c = 0; c < X.c; ++c)
              for (std::int64_t q = 0; q < m; ++q) {
                const auto f = c * m + q;
                double acc = bias ? (*bias)[static_cast<std::size_t>(f)] : 0.0;
                for (std::int64_t i = 0; i < kh; ++i) {
                  const auto iy = oy * a.strides[0] + i - ph;
                  if (iy < 0 || iy >= X.h) continue;
                  for (std::int64_t j = 0; j < kw; ++j) {
                    const auto ix = ox * a.strides[1] + j - pw;
                    if (ix < 0 || ix >= X.w) continue;
                    acc += x[X.at(n, iy, ix, c)] * w[idx4(w.shape, i, j, c, q)];
                  }
                }
                y[Y.at(n, oy, ox, f)] = acc;
              }
      return y;
    }
    case OpType::Conv2DTranspose: {
      const Tensor& w = *in[1];  // [kh, kw, out, in]
      const Dims X(x.shape), Y(y.shape);
      const auto kh = w.shape[0], kw = w.shape[1];
      const auto ph = transpose_pad(kh, a.strides[0], a.padding);
      const auto pw = transpose_pad(kw, a.strides[1], a.padding);
      if (bias)
        for (std::size_t i = 0; i < y.size(); ++i)
          y[i] = (*bias)[i % static_cast<std::size_t>(Y.c)];
      for (std::int64_t n = 0; n < X.n; ++n)
        for (std::int64_t iy = 0; iy < X.h; ++iy)
          for (std::int64_t ix = 0; ix < X.w; ++ix)
            for (std::int64_t i = 0; i < kh; ++i) {
              const auto oy = iy * a.strides[0] + i - ph;
              if (oy < 0 || oy >= Y.h) continue;
              for (std::int64_t j = 0; j < kw; ++j) {
                const auto ox = ix * a.strides[1] + j - pw;
                if (ox < 0 || ox >= Y.w) continue;
                for (std::int64_t f = 0; f < Y.c; ++f) {
                  double acc = 0.0;
                  for (std::int64_t c = 0; c < X.c; ++c)
                    acc += x[X.at(n, iy, ix, c)] * w[idx4(w.shape, i, j, f, c)];
                  y[Y.at(n, oy, ox, f)] += acc;
                }
              }
            }
      return y;
    }
    case OpType::MaxPooling:
    case OpType::AveragePooling: {
      const Dims X(x.shape), Y(y.shape);
      const auto g = pool_geom(x.shape, a);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox)
            for (std::int64_t c = 0; c < Y.c; ++c) {
              double best = -std::numeric_limits<double>::infinity(), sum = 0.0;
              std::int64_t count = 0;
              for (std::int64_t i = 0; i < g.p; ++i) {
                const auto iy = oy * g.p + i - g.ph;
                if (iy < 0 || iy >= X.h) continue;
                for (std::int64_t j = 0; j < g.p; ++j) {
                  const auto ix = ox * g.p + j - g.pw;
                  if (ix < 0 || ix >= X.w) continue;
                  const double v = x[X.at(n, iy, ix, c)];
                  if (v > best) best = v;
                  sum += v;
                  ++count;
                }
              }
              y[Y.at(n, oy, ox, c)] =
                  op == OpType::MaxPooling ? best : sum / static_cast<double>(count);
            }
      return y;
    }
    case OpType::UpSampling: {
      const Dims X(x.shape), Y(y.shape);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox)
            for (std::int64_t c = 0; c < Y.c; ++c)
              y[Y.at(n, oy, ox, c)] = x[X.at(n, oy / a.size[0], ox / a.size[1], c)];
      return y;
    }
    case OpType::Pad:
    case OpType::MirrorPad: {
      const Dims X(x.shape), Y(y.shape);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox) {
            std::int64_t iy = oy - a.pads[0][0], ix = ox - a.pads[1][0];
            if (op == OpType::MirrorPad) {
              iy = reflect(iy, X.h);
              ix = reflect(ix, X.w);
            } else if (iy < 0 || iy >= X.h || ix < 0 || ix >= X.w) {
              continue;
            }
            for (std::int64_t c = 0; c < Y.c; ++c) y[Y.at(n, oy, ox, c)] = x[X.at(n, iy, ix, c)];
          }
      return y;
    }
    case OpType::Space2Batch: {
      const Dims X(x.shape), Y(y.shape);
      const auto b = a.block_size;
      for (std::int64_t ob = 0; ob < Y.n; ++ob) {
        const auto n = ob % X.n, blk = ob / X.n, bh = blk / b, bw = blk % b;
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox) {
            const auto iy = oy * b + bh - a.pads[0][0], ix = ox * b + bw - a.pads[1][0];
            if (iy < 0 || iy >= X.h || ix < 0 || ix >= X.w) continue;
            for (std::int64_t c = 0; c < Y.c; ++c) y[Y.at(ob, oy, ox, c)] = x[X.at(n, iy, ix, c)];
          }
      }
      return y;
    }
    case OpType::Dense: {
      const Tensor& w = *in[1];
      const auto I = w.shape[0], O = w.shape[1];
      const auto rows = numel(x.shape) / I;
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t o = 0; o < O; ++o) {
          double acc = bias ? (*bias)[static_cast<std::size_t>(o)] : 0.0;
          for (std::int64_t i = 0; i < I; ++i)
            acc += x[static_cast<std::size_t>(r * I + i)] * w[static_cast<std::size_t>(i * O + o)];
          y[static_cast<std::size_t>(r * O + o)] = acc;
        }
      return y;
    }
    case OpType::Add:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] + (*in[1])[i];
      return y;
    case OpType::Mul:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * (*in[1])[i];
      return y;
    case OpType::Concat: {
      const auto rows = numel(y.shape) / y.shape.back();
      std::int64_t offset = 0;
      for (const Tensor* t : in) {
        const auto k = t->shape.back();
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t j = 0; j < k; ++j)
            y[static_cast<std::size_t>(r * y.shape.back() + offset + j)] =
                (*t)[static_cast<std::size_t>(r * k + j)];
        offset += k;
      }
      return y;
    }
    case OpType::Reshape:
      y.data = x.data;
      return y;
    case OpType::ReLU:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
      return y;
    case OpType::Sigmoid:
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
      return y;
    case OpType::Softmax: {
      const auto k = static_cast<std::size_t>(x.shape.back());
      for (std::size_t r = 0; r < y.size() / k; ++r) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < k; ++j) mx = std::max(mx, x[r * k + j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += (y[r * k + j] = std::exp(x[r * k + j] - mx));
        for (std::size_t j = 0; j < k; ++j) y[r * k + j] /= sum;
      }
      return y;
    }
  }
  fail(ErrorKind::UnsupportedOp, "unsupported op");
}

std::vector<Tensor> backward(OpType op, const Attributes& a, const std::vector<const Tensor*>& in,
                             const Tensor& out, const Tensor& gy) {
  std::vector<Tensor> g;
  for (const Tensor* t : in) g.emplace_back(t->shape);
  const Tensor& x = *in[0];
  Tensor& gx = g[0];
  const bool has_bias = in.size() > 2;
  switch (op) {
    case OpType::Conv2D: {
      const Tensor& w = *in[1];
      Tensor& gw = g[1];
      const Dims X(x.shape), Y(gy.shape);
      const auto kh = w.shape[0], kw = w.shape[1];
      const auto ph = pad_before(X.h, kh, a.strides[0], a.padding);
      const auto pw = pad_before(X.w, kw, a.strides[1], a.padding);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox)
            for (std::int64_t f = 0; f < Y.c; ++f) {
              const double d = gy[Y.at(n, oy, ox, f)];
              if (has_bias) g[2][static_cast<std::size_t>(f)] += d;
              for (std::int64_t i = 0; i < kh; ++i) {
                const auto iy = oy * a.strides[0] + i - ph;
                if (iy < 0 || iy >= X.h) continue;
                for (std::int64_t j = 0; j < kw; ++j) {
                  const auto ix = ox * a.strides[1] + j - pw;
                  if (ix < 0 || ix >= X.w) continue;
                  for (std::int64_t c = 0; c < X.c; ++c) {
                    const auto xi = X.at(n, iy, ix, c);
                    const auto wi = idx4(w.shape, i, j, c, f);
                    gx[xi] += d * w[wi];
                    gw[wi] += d * x[xi];
                  }
                }
              }
            }
      return g;
    }
    case OpType::DepthwiseConv2D: {
      const Tensor& w = *in[1];
      Tensor& gw = g[1];
      const Dims X(x.shape), Y(gy.shape);
      const auto kh = w.shape[0], kw = w.shape[1], m = w.shape[3];
      const auto ph = pad_before(X.h, kh, a.strides[0], a.padding);
      const auto pw = pad_before(X.w, kw, a.strides[1], a.padding);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox)
            for (std::int64_t c = 0; c < X.c; ++c)
              for (std::int64_t q = 0; q < m; ++q) {
                const auto f = c * m + q;
                const double d = gy[Y.at(n, oy, ox, f)];
                if (has_bias) g[2][static_cast<std::size_t>(f)] += d;
                for (std::int64_t i = 0; i < kh; ++i) {
                  const auto iy = oy * a.strides[0] + i - ph;
                  if (iy < 0 || iy >= X.h) continue;
                  for (std::int64_t j = 0; j < kw; ++j) {
                    const auto ix = ox * a.strides[1] + j - pw;
                    if (ix < 0 || ix >= X.w) continue;
                    const auto xi = X.at(n, iy, ix, c);
                    const auto wi = idx4(w.shape, i, j, c, q);
                    gx[xi] += d * w[wi];
                    gw[wi] += d * x[xi];
                  }
                }
              }
      return g;
    }
    case OpType::Conv2DTranspose: {
      const Tensor& w = *in[1];
      Tensor& gw = g[1];
      const Dims X(x.shape), Y(gy.shape);
      const auto kh = w.shape[0], kw = w.shape[1];
      const auto ph = transpose_pad(kh, a.strides[0], a.padding);
      const auto pw = transpose_pad(kw, a.strides[1], a.padding);
      if (has_bias)
        for (std::size_t i = 0; i < gy.size(); ++i)
          g[2][i % static_cast<std::size_t>(Y.c)] += gy[i];
      for (std::int64_t n = 0; n < X.n; ++n)
        for (std::int64_t iy = 0; iy < X.h; ++iy)
          for (std::int64_t ix = 0; ix < X.w; ++ix)
            for (std::int64_t i = 0; i < kh; ++i) {
              const auto oy = iy * a.strides[0] + i - ph;
              if (oy < 0 || oy >= Y.h) continue;
              for (std::int64_t j = 0; j < kw; ++j) {
                const auto ox = ix * a.strides[1] + j - pw;
                if (ox < 0 || ox >= Y.w) continue;
                for (std::int64_t f = 0; f < Y.c; ++f) {
                  const double d = gy[Y.at(n, oy, ox, f)];
                  for (std::int64_t c = 0; c < X.c; ++c) {
                    const auto xi = X.at(n, iy, ix, c);
                    const auto wi = idx4(w.shape, i, j, f, c);
                    gx[xi] += d * w[wi];
                    gw[wi] += d * x[xi];
                  }
                }
              }
            }
      return g;
    }
    case OpType::MaxPooling:
    case OpType::AveragePooling: {
      const Dims X(x.shape), Y(gy.shape);
      const auto geo = pool_geom(x.shape, a);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox)
            for (std::int64_t c = 0; c < Y.c; ++c) {
              std::vector<std::size_t> cells;
              for (std::int64_t i = 0; i < geo.p; ++i) {
                const auto iy = oy * geo.p + i - geo.ph;
                if (iy < 0 || iy >= X.h) continue;
                for (std::int64_t j = 0; j < geo.p; ++j) {
                  const auto ix = ox * geo.p + j - geo.pw;
                  if (ix < 0 || ix >= X.w) continue;
                  cells.push_back(X.at(n, iy, ix, c));
                }
              }
              const double d = gy[Y.at(n, oy, ox, c)];
              if (op == OpType::AveragePooling) {
                for (auto ci : cells) gx[ci] += d / static_cast<double>(cells.size());
              } else {
                // Cells are visited in increasing linear order, so the
                // first maximum is the lowest index.
                std::size_t arg = cells.front();
                for (auto ci : cells)
                  if (x[ci] > x[arg]) arg = ci;
                gx[arg] += d;
              }
            }
      return g;
    }
    case OpType::UpSampling: {
      const Dims X(x.shape), Y(gy.shape);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox)
            for (std::int64_t c = 0; c < Y.c; ++c)
              gx[X.at(n, oy / a.size[0], ox / a.size[1], c)] += gy[Y.at(n, oy, ox, c)];
      return g;
    }
    case OpType::Pad:
    case OpType::MirrorPad: {
      const Dims X(x.shape), Y(gy.shape);
      for (std::int64_t n = 0; n < Y.n; ++n)
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox) {
            std::int64_t iy = oy - a.pads[0][0], ix = ox - a.pads[1][0];
            if (op == OpType::MirrorPad) {
              iy = reflect(iy, X.h);
              ix = reflect(ix, X.w);
            } else if (iy < 0 || iy >= X.h || ix < 0 || ix >= X.w) {
              continue;
            }
            for (std::int64_t c = 0; c < Y.c; ++c) gx[X.at(n, iy, ix, c)] += gy[Y.at(n, oy, ox, c)];
          }
      return g;
    }
    case OpType::Space2Batch: {
      const Dims X(x.shape), Y(gy.shape);
      const auto b = a.block_size;
      for (std::int64_t ob = 0; ob < Y.n; ++ob) {
        const auto n = ob % X.n, blk = ob / X.n, bh = blk / b, bw = blk % b;
        for (std::int64_t oy = 0; oy < Y.h; ++oy)
          for (std::int64_t ox = 0; ox < Y.w; ++ox) {
            const auto iy = oy * b + bh - a.pads[0][0], ix = ox * b + bw - a.pads[1][0];
            if (iy < 0 || iy >= X.h || ix < 0 || ix >= X.w) continue;
            for (std::int64_t c = 0; c < Y.c; ++c) gx[X.at(n, iy, ix, c)] += gy[Y.at(ob, oy, ox, c)];
          }
      }
      return g;
    }
    case OpType::Dense: {
      const Tensor& w = *in[1];
      const auto I = w.shape[0], O = w.shape[1];
      const auto rows = numel(x.shape) / I;
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t o = 0; o < O; ++o) {
          const double d = gy[static_cast<std::size_t>(r * O + o)];
          if (has_bias) g[2][static_cast<std::size_t>(o)] += d;
          for (std::int64_t i = 0; i < I; ++i) {
            const auto xi = static_cast<std::size_t>(r * I + i);
            const auto wi = static_cast<std::size_t>(i * O + o);
            gx[xi] += d * w[wi];
            g[1][wi] += d * x[xi];
          }
        }
      return g;
    }
    case OpType::Add:
      gx.data = gy.data;
      g[1].data = gy.data;
      return g;
    case OpType::Mul:
      for (std::size_t i = 0; i < gy.size(); ++i) {
        gx[i] = gy[i] * (*in[1])[i];
        g[1][i] = gy[i] * x[i];
      }
      return g;
    case OpType::Concat: {
      const auto rows = numel(gy.shape) / gy.shape.back();
      std::int64_t offset = 0;
      for (std::size_t t = 0; t < in.size(); ++t) {
        const auto k = in[t]->shape.back();
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t j = 0; j < k; ++j)
            g[t][static_cast<std::size_t>(r * k + j)] =
                gy[static_cast<std::size_t>(r * gy.shape.back() + offset + j)];
        offset += k;
      }
      return g;
    }
    case OpType::Reshape:
      gx.data = gy.data;
      return g;
    case OpType::ReLU:
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = x[i] > 0.0 ? gy[i] : 0.0;
      return g;
    case OpType::Sigmoid:
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = gy[i] * out[i] * (1.0 - out[i]);
      return g;
    case OpType::Softmax: {
      const auto k = static_cast<std::size_t>(x.shape.back());
      for (std::size_t r = 0; r < gy.size() / k; ++r) {
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += gy[r * k + j] * out[r * k + j];
        for (std::size_t j = 0; j < k; ++j)
          gx[r * k + j] = out[r * k + j] * (gy[r * k + j] - dot);
      }
      return g;
    }
  }
  fail(ErrorKind::UnsupportedOp, "unsupported op");
}

Tensor conv2d_im2col(const Tensor& x, const Tensor& w, const Tensor* bias, const Attributes& a) {
  const Shape out_shape = infer_shape(
      OpType::Conv2D, a,
      bias ? std::vector<Shape>{x.shape, w.shape, bias->shape} : std::vector<Shape>{x.shape, w.shape},
      {});
  const Dims X(x.shape);
  const auto kh = w.shape[0], kw = w.shape[1], F = w.shape[3];
  const auto ph = pad_before(X.h, kh, a.strides[0], a.padding);
  const auto pw = pad_before(X.w, kw, a.strides[1], a.padding);
  const auto K = kh * kw * X.c;
  Tensor y(out_shape);
  const Dims Y(out_shape);
  std::vector<double> patch(static_cast<std::size_t>(K));
  for (std::int64_t n = 0; n < Y.n; ++n)
    for (std::int64_t oy = 0; oy < Y.h; ++oy)
      for (std::int64_t ox = 0; ox < Y.w; ++ox) {
        std::fill(patch.begin(), patch.end(), 0.0);
        for (std::int64_t i = 0; i < kh; ++i) {
          const auto iy = oy * a.strides[0] + i - ph;
          if (iy < 0 || iy >= X.h) continue;
          for (std::int64_t j = 0; j < kw; ++j) {
            const auto ix = ox * a.strides[1] + j - pw;
            if (ix < 0 || ix >= X.w) continue;
            for (std::int64_t c = 0; c < X.c; ++c)
              patch[static_cast<std::size_t>((i * kw + j) * X.c + c)] = x[X.at(n, iy, ix, c)];
          }
        }
        // Row of the patch matrix times the [K, F] view of the kernel.
        double* row = &y[Y.at(n, oy, ox, 0)];
        for (std::int64_t f = 0; f < F; ++f) row[f] = bias ? (*bias)[static_cast<std::size_t>(f)] : 0.0;
        for (std::int64_t k = 0; k < K; ++k) {
          const double p = patch[static_cast<std::size_t>(k)];
          if (p == 0.0) continue;
          const double* wrow = &w.data[static_cast<std::size_t>(k * F)];
          for (std::int64_t f = 0; f < F; ++f) row[f] += p * wrow[f];
        }
      }
  return y;
}

}  // namespace recon::rt
