/* Copyright 2026 The ProxyForge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "proxyforge/autodiff.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "proxyforge/error.h"
#include "proxyforge/rng.h"

namespace proxyforge::ad {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic,
                                Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  int n, c, h, w;      // input
  int o, kh, kw;       // weights
  int ho, wo;          // output
  ConvSpec spec;

  int patch() const { return c * kh * kw; }
  int out_pixels() const { return ho * wo; }
  bool pointwise() const {
    return kh == 1 && kw == 1 && spec.stride == 1 && spec.padding == 0;
  }
};

// cols[(ci*kh + ky)*kw + kx][oy*wo + ox] = x[ci][iy][ix] (0 outside).
template <typename T>
void Im2Col(const T* x, const ConvGeometry& g, T* cols) {
  const int s = g.spec.stride, p = g.spec.padding, d = g.spec.dilation;
  for (int ci = 0; ci < g.c; ++ci) {
    const T* plane = x + static_cast<std::size_t>(ci) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        T* row = cols + static_cast<std::size_t>((ci * g.kh + ky) * g.kw + kx) *
                            g.out_pixels();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * s - p + ky * d;
          T* dst = row + static_cast<std::size_t>(oy) * g.wo;
          if (iy < 0 || iy >= g.h) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * s - p + kx * d;
            dst[ox] = (ix >= 0 && ix < g.w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void Col2ImAdd(const T* cols, const ConvGeometry& g, T* dx) {
  const int s = g.spec.stride, p = g.spec.padding, d = g.spec.dilation;
  for (int ci = 0; ci < g.c; ++ci) {
    T* plane = dx + static_cast<std::size_t>(ci) * g.h * g.w;
    for (int ky = 0; ky < g.kh; ++ky) {
      for (int kx = 0; kx < g.kw; ++kx) {
        const T* row =
            cols + static_cast<std::size_t>((ci * g.kh + ky) * g.kw + kx) *
                       g.out_pixels();
        for (int oy = 0; oy < g.ho; ++oy) {
          const int iy = oy * s - p + ky * d;
          if (iy < 0 || iy >= g.h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * g.wo;
          T* dst = plane + static_cast<std::size_t>(iy) * g.w;
          for (int ox = 0; ox < g.wo; ++ox) {
            const int ix = ox * s - p + kx * d;
            if (ix >= 0 && ix < g.w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Corner-aligned sampling positions for one axis.
struct AxisSamples {
  std::vector<int> lo, hi;
  std::vector<double> frac;
};

AxisSamples MakeAxisSamples(int in, int out) {
  AxisSamples a;
  a.lo.resize(out);
  a.hi.resize(out);
  a.frac.resize(out);
  const double scale = out > 1 ? static_cast<double>(in - 1) / (out - 1) : 0.0;
  for (int i = 0; i < out; ++i) {
    const double f = i * scale;
    a.lo[i] = std::min(static_cast<int>(f), in - 1);
    a.hi[i] = std::min(a.lo[i] + 1, in - 1);
    a.frac[i] = f - a.lo[i];
  }
  return a;
}

void CheckRank4(const Shape& s, const char* what) {
  Require(s.size() == 4, ErrorCode::kInvalidArgument,
          std::string(what) + " expects N x C x H x W input, got " +
              ShapeString(s));
}

}  // namespace

std::size_t ShapeSize(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

std::string ShapeString(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

int ConvOutputExtent(int input, int kernel, const ConvSpec& spec) {
  const int span = spec.dilation * (kernel - 1) + 1;
  return (input + 2 * spec.padding - span) / spec.stride + 1;
}

template <typename T>
NdArray<T>::NdArray(Shape s, std::vector<T> values)
    : shape(std::move(s)), data(std::move(values)) {
  Require(ShapeSize(shape) == data.size(), ErrorCode::kInvalidArgument,
          "array payload does not match shape " + ShapeString(shape));
}

template <typename T>
Var Graph<T>::Push(Node n) {
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
bool Graph<T>::AnyRequiresGrad(std::initializer_list<Var> vars) const {
  for (Var v : vars) {
    if (v.valid() && node(v).requires_grad) return true;
  }
  return false;
}

template <typename T>
NdArray<T>& Graph<T>::GradOf(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = NdArray<T>(n.value.shape);
  return n.grad;
}

template <typename T>
T Graph<T>::scalar(Var v) const {
  const auto& val = value(v);
  Require(val.size() == 1, ErrorCode::kInvalidArgument,
          "node is not a scalar: " + ShapeString(val.shape));
  return val.data[0];
}

template <typename T>
Var Graph<T>::Input(NdArray<T> value) {
  Node n;
  n.value = std::move(value);
  return Push(std::move(n));
}

template <typename T>
Var Graph<T>::Param(Parameter<T>& param) {
  Node n;
  n.value = param.value;
  n.requires_grad = true;
  n.param = &param;
  return Push(std::move(n));
}

template <typename T>
Var Graph<T>::Constant(const Parameter<T>& param) {
  Node n;
  n.value = param.value;
  return Push(std::move(n));
}

template <typename T>
Var Graph<T>::Conv2d(Var x, Var weights, Var bias, const ConvSpec& spec) {
  const Shape& xs = value(x).shape;
  const Shape& ws = value(weights).shape;
  CheckRank4(xs, "conv2d");
  Require(ws.size() == 4, ErrorCode::kInvalidArgument,
          "conv2d weights must be O x C x K x K, got " + ShapeString(ws));
  Require(ws[1] == xs[1], ErrorCode::kInvalidArgument,
          "conv2d channel mismatch: input " + ShapeString(xs) + ", weights " +
              ShapeString(ws));
  Require(spec.stride >= 1 && spec.dilation >= 1 && spec.padding >= 0,
          ErrorCode::kInvalidArgument, "invalid conv2d stride/dilation/padding");
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], 0, 0, spec};
  g.ho = ConvOutputExtent(g.h, g.kh, spec);
  g.wo = ConvOutputExtent(g.w, g.kw, spec);
  Require(g.ho > 0 && g.wo > 0, ErrorCode::kInvalidArgument,
          "conv2d kernel larger than padded input " + ShapeString(xs));
  if (bias.valid()) {
    Require(value(bias).size() == static_cast<std::size_t>(g.o),
            ErrorCode::kInvalidArgument, "conv2d bias size mismatch");
  }

  Node out;
  out.value = NdArray<T>({g.n, g.o, g.ho, g.wo});
  out.inputs = {x.id, weights.id, bias.id};
  out.requires_grad = AnyRequiresGrad({x, weights, bias});

  const T* xd = value(x).data.data();
  ConstMatrixMap<T> wm(value(weights).data.data(), g.o, g.patch());
  std::vector<T> cols(g.pointwise() ? 0
                                    : static_cast<std::size_t>(g.patch()) *
                                          g.out_pixels());
  for (int i = 0; i < g.n; ++i) {
    const T* xi = xd + static_cast<std::size_t>(i) * g.c * g.h * g.w;
    const T* colp = xi;
    if (!g.pointwise()) {
      Im2Col(xi, g, cols.data());
      colp = cols.data();
    }
    ConstMatrixMap<T> cm(colp, g.patch(), g.out_pixels());
    MatrixMap<T> om(out.value.data.data() +
                        static_cast<std::size_t>(i) * g.o * g.out_pixels(),
                    g.o, g.out_pixels());
    om.noalias() = wm * cm;
    if (bias.valid()) {
      const auto& b = value(bias).data;
      for (int oc = 0; oc < g.o; ++oc) om.row(oc).array() += b[oc];
    }
  }

  out.backward = [g](Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    const int xid = self.inputs[0], wid = self.inputs[1], bid = self.inputs[2];
    const bool need_x = graph.nodes_[xid].requires_grad;
    const bool need_w = graph.nodes_[wid].requires_grad;
    const bool need_b = bid >= 0 && graph.nodes_[bid].requires_grad;
    const T* xd = graph.nodes_[xid].value.data.data();
    const T* gd = self.grad.data.data();
    ConstMatrixMap<T> wm(graph.nodes_[wid].value.data.data(), g.o, g.patch());
    T* dx = need_x ? graph.GradOf(xid).data.data() : nullptr;
    T* dw = need_w ? graph.GradOf(wid).data.data() : nullptr;
    T* db = need_b ? graph.GradOf(bid).data.data() : nullptr;
    std::vector<T> cols(static_cast<std::size_t>(g.patch()) * g.out_pixels());
    for (int i = 0; i < g.n; ++i) {
      ConstMatrixMap<T> gm(gd + static_cast<std::size_t>(i) * g.o *
                                    g.out_pixels(),
                           g.o, g.out_pixels());
      if (need_b) {
        // Plain loop: Eigen's vectorized sum depends on buffer alignment,
        // which would make training runs differ bit-wise.
        for (int oc = 0; oc < g.o; ++oc) {
          const T* row = gd + (static_cast<std::size_t>(i) * g.o + oc) * g.out_pixels();
          T acc = 0;
          for (int k = 0; k < g.out_pixels(); ++k) acc += row[k];
          db[oc] += acc;
        }
      }
      const std::size_t xoff = static_cast<std::size_t>(i) * g.c * g.h * g.w;
      if (need_w) {
        const T* colp = xd + xoff;
        if (!g.pointwise()) {
          Im2Col(xd + xoff, g, cols.data());
          colp = cols.data();
        }
        ConstMatrixMap<T> cm(colp, g.patch(), g.out_pixels());
        MatrixMap<T> dwm(dw, g.o, g.patch());
        dwm.noalias() += gm * cm.transpose();
      }
      if (need_x) {
        if (g.pointwise()) {
          MatrixMap<T> dxm(dx + xoff, g.c, g.out_pixels());
          dxm.noalias() += wm.transpose() * gm;
        } else {
          MatrixMap<T> dcm(cols.data(), g.patch(), g.out_pixels());
          dcm.noalias() = wm.transpose() * gm;
          Col2ImAdd(cols.data(), g, dx + xoff);
        }
      }
    }
  };
  return Push(std::move(out));
}

template <typename T>
Var Graph<T>::AvgPool(Var x, int window, int stride) {
  const Shape& xs = value(x).shape;
  CheckRank4(xs, "avg_pool");
  Require(window >= 1 && stride >= 1, ErrorCode::kInvalidArgument,
          "avg_pool window and stride must be positive");
  Require(window <= xs[2] && window <= xs[3], ErrorCode::kInvalidArgument,
          "avg_pool window " + std::to_string(window) +
              " larger than input " + ShapeString(xs));
  const int n = xs[0], c = xs[1], h = xs[2], w = xs[3];
  const int ho = (h - window) / stride + 1;
  const int wo = (w - window) / stride + 1;
  const T inv = T(1) / static_cast<T>(window * window);

  Node out;
  out.value = NdArray<T>({n, c, ho, wo});
  out.inputs = {x.id};
  out.requires_grad = node(x).requires_grad;
  const T* xd = value(x).data.data();
  T* od = out.value.data.data();
  for (int p = 0; p < n * c; ++p) {
    const T* plane = xd + static_cast<std::size_t>(p) * h * w;
    T* dst = od + static_cast<std::size_t>(p) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        T acc = 0;
        for (int ky = 0; ky < window; ++ky) {
          const T* row = plane + static_cast<std::size_t>(oy * stride + ky) * w +
                         ox * stride;
          for (int kx = 0; kx < window; ++kx) acc += row[kx];
        }
        dst[oy * wo + ox] = acc * inv;
      }
    }
  }
  out.backward = [=](Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    const int xid = self.inputs[0];
    T* dx = graph.GradOf(xid).data.data();
    const T* gd = self.grad.data.data();
    for (int p = 0; p < n * c; ++p) {
      T* plane = dx + static_cast<std::size_t>(p) * h * w;
      const T* src = gd + static_cast<std::size_t>(p) * ho * wo;
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          const T gv = src[oy * wo + ox] * inv;
          for (int ky = 0; ky < window; ++ky) {
            T* row = plane + static_cast<std::size_t>(oy * stride + ky) * w +
                     ox * stride;
            for (int kx = 0; kx < window; ++kx) row[kx] += gv;
          }
        }
      }
    }
  };
  return Push(std::move(out));
}

template <typename T>
Var Graph<T>::LeakyRelu(Var x, T slope) {
  Node out;
  const auto& xv = value(x);
  out.value = NdArray<T>(xv.shape);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    out.value.data[i] = xv.data[i] >= T(0) ? xv.data[i] : slope * xv.data[i];
  }
  out.inputs = {x.id};
  out.requires_grad = node(x).requires_grad;
  out.piecewise = true;
  out.backward = [slope](Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    const int xid = self.inputs[0];
    const auto& xv = graph.nodes_[xid].value.data;
    auto& dx = graph.GradOf(xid).data;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] += xv[i] >= T(0) ? self.grad.data[i] : slope * self.grad.data[i];
    }
  };
  return Push(std::move(out));
}

template <typename T>
std::vector<bool> Graph<T>::KinkPattern() const {
  std::vector<bool> out;
  for (const Node& n : nodes_) {
    if (!n.piecewise) continue;
    for (T v : nodes_[n.inputs[0]].value.data) out.push_back(v >= T(0));
  }
  return out;
}

template <typename T>
Var Graph<T>::Add(Var a, Var b) {
  const Var terms[] = {a, b};
  return Sum(terms);
}

template <typename T>
Var Graph<T>::Sum(std::span<const Var> terms) {
  Require(!terms.empty(), ErrorCode::kInvalidArgument, "sum of no terms");
  const Shape& s = value(terms[0]).shape;
  Node out;
  out.value = value(terms[0]);
  for (std::size_t t = 1; t < terms.size(); ++t) {
    const auto& v = value(terms[t]);
    Require(v.shape == s, ErrorCode::kInvalidArgument,
            "sum shape mismatch: " + ShapeString(s) + " vs " +
                ShapeString(v.shape));
    for (std::size_t i = 0; i < v.size(); ++i) out.value.data[i] += v.data[i];
  }
  for (Var t : terms) {
    out.inputs.push_back(t.id);
    out.requires_grad = out.requires_grad || node(t).requires_grad;
  }
  out.backward = [](Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    for (int in : self.inputs) {
      if (!graph.nodes_[in].requires_grad) continue;
      auto& d = graph.GradOf(in).data;
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad.data[i];
    }
  };
  return Push(std::move(out));
}

template <typename T>
Var Graph<T>::Scale(Var x, T factor) {
  Node out;
  out.value = value(x);
  for (auto& v : out.value.data) v *= factor;
  out.inputs = {x.id};
  out.requires_grad = node(x).requires_grad;
  out.backward = [factor](Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    auto& d = graph.GradOf(self.inputs[0]).data;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * self.grad.data[i];
  };
  return Push(std::move(out));
}

template <typename T>
Var Graph<T>::ConcatChannels(std::span<const Var> parts) {
  Require(!parts.empty(), ErrorCode::kInvalidArgument, "concat of no inputs");
  const Shape& s0 = value(parts[0]).shape;
  CheckRank4(s0, "concat");
  int channels = 0;
  std::vector<int> offsets;
  Node out;
  for (Var p : parts) {
    const Shape& s = value(p).shape;
    CheckRank4(s, "concat");
    Require(s[0] == s0[0] && s[2] == s0[2] && s[3] == s0[3],
            ErrorCode::kInvalidArgument,
            "concat extent mismatch: " + ShapeString(s0) + " vs " +
                ShapeString(s));
    offsets.push_back(channels);
    channels += s[1];
    out.inputs.push_back(p.id);
    out.requires_grad = out.requires_grad || node(p).requires_grad;
  }
  const int n = s0[0];
  const std::size_t plane = static_cast<std::size_t>(s0[2]) * s0[3];
  out.value = NdArray<T>({n, channels, s0[2], s0[3]});
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = value(parts[k]);
    const int c = v.shape[1];
    for (int i = 0; i < n; ++i) {
      std::copy_n(v.data.begin() + static_cast<std::size_t>(i) * c * plane,
                  c * plane,
                  out.value.data.begin() +
                      (static_cast<std::size_t>(i) * channels + offsets[k]) *
                          plane);
    }
  }
  out.backward = [offsets, channels, n, plane](Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      const int in = self.inputs[k];
      if (!graph.nodes_[in].requires_grad) continue;
      auto& d = graph.GradOf(in);
      const int c = d.shape[1];
      for (int i = 0; i < n; ++i) {
        const auto src = self.grad.data.begin() +
                         (static_cast<std::size_t>(i) * channels + offsets[k]) *
                             plane;
        auto dst = d.data.begin() + static_cast<std::size_t>(i) * c * plane;
        for (std::size_t e = 0; e < c * plane; ++e) dst[e] += src[e];
      }
    }
  };
  return Push(std::move(out));
}

template <typename T>
Var Graph<T>::BilinearUpsample(Var x, int height, int width) {
  const Shape& xs = value(x).shape;
  CheckRank4(xs, "bilinear_upsample");
  Require(height > 0 && width > 0, ErrorCode::kInvalidArgument,
          "bilinear_upsample target extents must be positive");
  const int planes = xs[0] * xs[1], h = xs[2], w = xs[3];
  const AxisSamples ys = MakeAxisSamples(h, height);
  const AxisSamples xs_ = MakeAxisSamples(w, width);

  Node out;
  out.value = NdArray<T>({xs[0], xs[1], height, width});
  out.inputs = {x.id};
  out.requires_grad = node(x).requires_grad;
  const T* src = value(x).data.data();
  T* dst = out.value.data.data();
  for (int p = 0; p < planes; ++p) {
    const T* in = src + static_cast<std::size_t>(p) * h * w;
    T* o = dst + static_cast<std::size_t>(p) * height * width;
    for (int y = 0; y < height; ++y) {
      const T fy = static_cast<T>(ys.frac[y]);
      const T* r0 = in + static_cast<std::size_t>(ys.lo[y]) * w;
      const T* r1 = in + static_cast<std::size_t>(ys.hi[y]) * w;
      for (int xx = 0; xx < width; ++xx) {
        const T fx = static_cast<T>(xs_.frac[xx]);
        const int x0 = xs_.lo[xx], x1 = xs_.hi[xx];
        const T top = r0[x0] + (r0[x1] - r0[x0]) * fx;
        const T bottom = r1[x0] + (r1[x1] - r1[x0]) * fx;
        o[static_cast<std::size_t>(y) * width + xx] = top + (bottom - top) * fy;
      }
    }
  }
  out.backward = [=](Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    T* dx = graph.GradOf(self.inputs[0]).data.data();
    const T* gd = self.grad.data.data();
    for (int p = 0; p < planes; ++p) {
      T* in = dx + static_cast<std::size_t>(p) * h * w;
      const T* g = gd + static_cast<std::size_t>(p) * height * width;
      for (int y = 0; y < height; ++y) {
        const T fy = static_cast<T>(ys.frac[y]);
        T* r0 = in + static_cast<std::size_t>(ys.lo[y]) * w;
        T* r1 = in + static_cast<std::size_t>(ys.hi[y]) * w;
        for (int xx = 0; xx < width; ++xx) {
          const T fx = static_cast<T>(xs_.frac[xx]);
          const int x0 = xs_.lo[xx], x1 = xs_.hi[xx];
          const T gv = g[static_cast<std::size_t>(y) * width + xx];
          const T gt = gv * (T(1) - fy), gb = gv * fy;
          r0[x0] += gt * (T(1) - fx);
          r0[x1] += gt * fx;
          r1[x0] += gb * (T(1) - fx);
          r1[x1] += gb * fx;
        }
      }
    }
  };
  return Push(std::move(out));
}

template <typename T>
Var Graph<T>::SoftmaxCrossEntropy(Var logits, std::span<const LabelMap> targets) {
  const Shape& s = value(logits).shape;
  CheckRank4(s, "softmax_cross_entropy");
  const int n = s[0], classes = s[1], h = s[2], w = s[3];
  Require(static_cast<int>(targets.size()) == n, ErrorCode::kInvalidArgument,
          "softmax_cross_entropy needs one target per image");
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (const auto& t : targets) {
    Require(t.height() == h && t.width() == w, ErrorCode::kInvalidArgument,
            "target map size does not match logits " + ShapeString(s));
    t.CheckClasses(classes);
  }

  Node out;
  out.aux = NdArray<T>(s);
  out.inputs = {logits.id};
  out.requires_grad = node(logits).requires_grad;
  const T* z = value(logits).data.data();
  T* prob = out.aux.data.data();
  double loss = 0.0;
  std::size_t count = 0;
  std::vector<T> buf(classes);
  for (int i = 0; i < n; ++i) {
    const auto labels = targets[i].values();
    for (std::size_t j = 0; j < plane; ++j) {
      const std::size_t base = static_cast<std::size_t>(i) * classes * plane + j;
      T zmax = z[base];
      for (int l = 1; l < classes; ++l) zmax = std::max(zmax, z[base + l * plane]);
      T denom = 0;
      for (int l = 0; l < classes; ++l) {
        buf[l] = std::exp(z[base + l * plane] - zmax);
        denom += buf[l];
      }
      for (int l = 0; l < classes; ++l) prob[base + l * plane] = buf[l] / denom;
      const uint8_t y = labels[j];
      if (y == kIgnoreLabel) continue;
      loss += static_cast<double>(std::log(denom) - (z[base + y * plane] - zmax));
      ++count;
    }
  }
  Require(count > 0, ErrorCode::kEmptyData,
          "cross-entropy target has no labeled pixels");
  out.value = NdArray<T>({1}, std::vector<T>{static_cast<T>(loss / count)});

  std::vector<LabelMap> kept(targets.begin(), targets.end());
  out.backward = [kept = std::move(kept), n, classes, plane, count](
                     Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    auto& dz = graph.GradOf(self.inputs[0]).data;
    const T scale = self.grad.data[0] / static_cast<T>(count);
    const T* prob = self.aux.data.data();
    for (int i = 0; i < n; ++i) {
      const auto labels = kept[i].values();
      for (std::size_t j = 0; j < plane; ++j) {
        const uint8_t y = labels[j];
        if (y == kIgnoreLabel) continue;
        const std::size_t base =
            static_cast<std::size_t>(i) * classes * plane + j;
        for (int l = 0; l < classes; ++l) {
          const T onehot = l == y ? T(1) : T(0);
          dz[base + l * plane] += scale * (prob[base + l * plane] - onehot);
        }
      }
    }
  };
  return Push(std::move(out));
}

template <typename T>
Var Graph<T>::SigmoidBce(Var logits, T label) {
  const auto& zv = value(logits);
  Require(zv.size() > 0, ErrorCode::kInvalidArgument, "empty BCE input");
  double loss = 0.0;
  for (T z : zv.data) {
    // softplus(z) - y*z == -[y log s(z) + (1-y) log(1 - s(z))]
    const double zd = static_cast<double>(z);
    loss += std::max(zd, 0.0) + std::log1p(std::exp(-std::abs(zd))) -
            static_cast<double>(label) * zd;
  }
  Node out;
  out.value = NdArray<T>({1}, std::vector<T>{static_cast<T>(loss / zv.size())});
  out.inputs = {logits.id};
  out.requires_grad = node(logits).requires_grad;
  out.backward = [label](Graph& graph, int id) {
    Node& self = graph.nodes_[id];
    const int zid = self.inputs[0];
    const auto& z = graph.nodes_[zid].value.data;
    auto& dz = graph.GradOf(zid).data;
    const T scale = self.grad.data[0] / static_cast<T>(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
      const T sig = z[i] >= T(0) ? T(1) / (T(1) + std::exp(-z[i]))
                                 : std::exp(z[i]) / (T(1) + std::exp(z[i]));
      dz[i] += scale * (sig - label);
    }
  };
  return Push(std::move(out));
}

template <typename T>
void Graph<T>::Backward(Var loss) {
  Require(value(loss).size() == 1, ErrorCode::kInvalidArgument,
          "backward needs a scalar loss");
  for (Node& n : nodes_) {
    n.grad = NdArray<T>();
    if (n.param != nullptr) {
      n.param->grad = NdArray<T>(n.param->value.shape);
    }
  }
  GradOf(loss.id).data[0] = T(1);
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, id);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr || n.grad.size() == 0) continue;
    auto& g = n.param->grad.data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad.data[i];
  }
}

std::vector<ScoreMap> ToScoreMaps(const NdArray<float>& probabilities) {
  CheckRank4(probabilities.shape, "ToScoreMaps");
  const int n = probabilities.dim(0), classes = probabilities.dim(1);
  const int h = probabilities.dim(2), w = probabilities.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<ScoreMap> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::vector<float> hwc(plane * classes);
    const float* src = probabilities.data.data() +
                       static_cast<std::size_t>(i) * classes * plane;
    for (std::size_t j = 0; j < plane; ++j) {
      for (int l = 0; l < classes; ++l) hwc[j * classes + l] = src[l * plane + j];
    }
    out.emplace_back(h, w, classes, std::move(hwc));
  }
  return out;
}

NdArray<float> StackImages(std::span<const std::vector<float>> images,
                           int channels, int height, int width) {
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  NdArray<float> out({static_cast<int>(images.size()), channels, height, width});
  for (std::size_t i = 0; i < images.size(); ++i) {
    Require(images[i].size() == plane * channels, ErrorCode::kInvalidArgument,
            "image size mismatch while stacking a batch");
    float* dst = out.data.data() + i * channels * plane;
    for (std::size_t j = 0; j < plane; ++j) {
      for (int c = 0; c < channels; ++c) {
        dst[c * plane + j] = images[i][j * channels + c];
      }
    }
  }
  return out;
}

GradCheckResult GradCheck(const std::function<Var(Graph<double>&)>& build,
                          Parameter<double>& param, double epsilon,
                          std::size_t max_coordinates, uint64_t seed) {
  std::vector<double> analytic;
  {
    Graph<double> graph;
    const Var loss = build(graph);
    graph.Backward(loss);
    analytic = param.grad.data;
  }
  const std::size_t n = param.value.size();
  std::vector<std::size_t> coords(n);
  std::iota(coords.begin(), coords.end(), 0);
  if (n > max_coordinates) {
    Rng rng(seed);
    for (std::size_t i = 0; i < max_coordinates; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.Uniform() * (n - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(max_coordinates);
  }
  struct Sample {
    double loss;
    std::vector<bool> pattern;
  };
  auto evaluate = [&] {
    Graph<double> graph;
    const double loss = graph.scalar(build(graph));
    return Sample{loss, graph.KinkPattern()};
  };
  auto at = [&](std::size_t i, double offset) {
    const double original = param.value.data[i];
    param.value.data[i] = original + offset;
    Sample s = evaluate();
    param.value.data[i] = original;
    return s;
  };
  GradCheckResult result;
  for (std::size_t i : coords) {
    const Sample base = evaluate();
    double numeric = 0.0;
    double h = epsilon;
    for (int attempt = 0; attempt <= 5; ++attempt, h *= 0.1) {
      const Sample p1 = at(i, h), m1 = at(i, -h);
      const Sample p2 = at(i, 0.5 * h), m2 = at(i, -0.5 * h);
      const bool plus_smooth =
          p1.pattern == base.pattern && p2.pattern == base.pattern;
      const bool minus_smooth =
          m1.pattern == base.pattern && m2.pattern == base.pattern;
      if (plus_smooth && minus_smooth) {
        const double coarse = (p1.loss - m1.loss) / (2.0 * h);
        const double fine = (p2.loss - m2.loss) / h;
        numeric = (4.0 * fine - coarse) / 3.0;
        break;
      }
      // A kink on one side only: one-sided differences on the smooth side,
      // extrapolated to second order.
      if (plus_smooth || minus_smooth) {
        const Sample& a = plus_smooth ? p1 : m1;
        const Sample& b = plus_smooth ? p2 : m2;
        const double sign = plus_smooth ? 1.0 : -1.0;
        const double coarse = sign * (a.loss - base.loss) / h;
        const double fine = sign * (b.loss - base.loss) / (0.5 * h);
        numeric = 2.0 * fine - coarse;
        break;
      }
      numeric = (p2.loss - m2.loss) / h;
    }
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    result.max_relative_error =
        std::max(result.max_relative_error,
                 std::abs(analytic[i] - numeric) / denom);
    ++result.coordinates;
  }
  return result;
}

template struct NdArray<float>;
template struct NdArray<double>;
template class Graph<float>;
template class Graph<double>;

}  // namespace proxyforge::ad
