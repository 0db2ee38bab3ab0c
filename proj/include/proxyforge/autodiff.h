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

#ifndef PROXYFORGE_AUTODIFF_H_
#define PROXYFORGE_AUTODIFF_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "proxyforge/tensor.h"

namespace proxyforge::ad {

using Shape = std::vector<int>;

std::size_t ShapeSize(const Shape& shape);
std::string ShapeString(const Shape& shape);

// Dense row-major array used inside computation graphs. Feature maps are
// laid out N x C x H x W.
template <typename T>
struct NdArray {
  Shape shape;
  std::vector<T> data;

  NdArray() = default;
  explicit NdArray(Shape s, T fill = T(0))
      : shape(std::move(s)), data(ShapeSize(shape), fill) {}
  NdArray(Shape s, std::vector<T> values);

  std::size_t size() const { return data.size(); }
  int dim(std::size_t axis) const { return shape.at(axis); }
  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  template <typename U>
  NdArray<U> Cast() const {
    return NdArray<U>(shape, std::vector<U>(data.begin(), data.end()));
  }

  bool operator==(const NdArray& other) const = default;
};

// A named trainable tensor with its gradient and optimizer state.
template <typename T>
struct Parameter {
  std::string name;
  NdArray<T> value;
  NdArray<T> grad;
  // SGD momentum buffer, or Adam first/second moments.
  NdArray<T> momentum;
  NdArray<T> second_moment;
  int64_t steps = 0;

  Parameter() = default;
  Parameter(std::string n, NdArray<T> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.shape),
        momentum(value.shape),
        second_moment(value.shape) {}

  template <typename U>
  Parameter<U> Cast() const {
    Parameter<U> out(name, value.template Cast<U>());
    out.grad = grad.template Cast<U>();
    out.momentum = momentum.template Cast<U>();
    out.second_moment = second_moment.template Cast<U>();
    out.steps = steps;
    return out;
  }
};

// Handle to a graph node.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

struct ConvSpec {
  int stride = 1;
  int padding = 0;
  int dilation = 1;
};

// Output extent of a convolution along one axis.
int ConvOutputExtent(int input, int kernel, const ConvSpec& spec);

// Tape-based reverse-mode graph. Nodes are appended in evaluation order, so
// the tape is a topological order and Backward walks it in reverse. A graph
// is single-use and single-threaded.
template <typename T>
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf without gradient.
  Var Input(NdArray<T> value);
  // Leaf whose gradient is added into param.grad by Backward.
  Var Param(Parameter<T>& param);
  // Leaf that reads a parameter but never receives gradient.
  Var Constant(const Parameter<T>& param);

  // x: N x C x H x W, weights: O x C x K x K, bias: O (optional).
  Var Conv2d(Var x, Var weights, Var bias, const ConvSpec& spec);
  Var Conv2d(Var x, Var weights, const ConvSpec& spec) {
    return Conv2d(x, weights, Var{}, spec);
  }
  // Non-overlapping or strided mean pooling without padding.
  Var AvgPool(Var x, int window, int stride);
  // Positive branch (slope 1) is used at x == 0.
  Var LeakyRelu(Var x, T slope = T(0.2));
  Var Relu(Var x) { return LeakyRelu(x, T(0)); }
  Var Add(Var a, Var b);
  Var Sum(std::span<const Var> terms);
  Var Scale(Var x, T factor);
  Var ConcatChannels(std::span<const Var> parts);
  // Corner-aligned bilinear resize of each N x C plane.
  Var BilinearUpsample(Var x, int height, int width);

  // logits: N x L x H x W, one target map per image. Mean over labeled
  // pixels of -log softmax. Throws kEmptyData if every pixel is ignored.
  Var SoftmaxCrossEntropy(Var logits, std::span<const LabelMap> targets);
  // Mean over every element of the logistic loss against `label`.
  Var SigmoidBce(Var logits, T label);

  const NdArray<T>& value(Var v) const { return nodes_.at(v.id).value; }
  T scalar(Var v) const;
  // Gradient after Backward; empty for nodes that need none.
  const NdArray<T>& grad(Var v) const { return nodes_.at(v.id).grad; }
  // Softmax probabilities kept by a SoftmaxCrossEntropy node.
  const NdArray<T>& probabilities(Var ce) const { return nodes_.at(ce.id).aux; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  // Branch taken (input >= 0) by every LeakyRelu element, in tape order.
  // Two evaluations with equal patterns lie on one smooth piece.
  std::vector<bool> KinkPattern() const;

  // Zeroes the gradient of every parameter bound with Param(), seeds
  // d(loss) = 1 and propagates. `loss` must be a scalar.
  void Backward(Var loss);

 private:
  struct Node {
    NdArray<T> value;
    NdArray<T> grad;
    NdArray<T> aux;
    std::vector<int> inputs;
    bool requires_grad = false;
    bool piecewise = false;  // LeakyRelu: record the branch of each input
    Parameter<T>* param = nullptr;
    std::function<void(Graph&, int)> backward;
  };

  Var Push(Node node);
  Node& node(Var v) { return nodes_.at(v.id); }
  const Node& node(Var v) const { return nodes_.at(v.id); }
  bool AnyRequiresGrad(std::initializer_list<Var> vars) const;
  NdArray<T>& GradOf(int id);

  std::vector<Node> nodes_;
};

// Converts N x L x H x W probabilities into per-image ScoreMaps.
std::vector<ScoreMap> ToScoreMaps(const NdArray<float>& probabilities);

// Rows of an image batch: N x C x H x W float tensor from HWC samples.
NdArray<float> StackImages(std::span<const std::vector<float>> images,
                           int channels, int height, int width);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

// Central-difference check of d(loss)/d(param) with Richardson
// extrapolation. Where a ReLU kink falls inside one side of the stencil
// (detected as a change of Graph::KinkPattern) the other side is used alone;
// if both sides cross a kink the step shrinks tenfold, up to five times.
// `build` constructs the loss on a fresh graph from the current parameter
// values and must bind `param` through Graph::Param. Tensors larger than
// max_coordinates are sampled with a seeded generator. The relative error
// of a coordinate is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
GradCheckResult GradCheck(const std::function<Var(Graph<double>&)>& build,
                          Parameter<double>& param, double epsilon = 1e-4,
                          std::size_t max_coordinates = 64,
                          uint64_t seed = 0);

extern template struct NdArray<float>;
extern template struct NdArray<double>;
extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace proxyforge::ad

#endif  // PROXYFORGE_AUTODIFF_H_
