#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace dwave::nn {

/// Activations are channels x time, column-major: one column per sample.
using Matrix = Eigen::MatrixXd;

struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Gradient buffers laid out like a parameter list.
using GradientSet = std::vector<std::vector<double>>;

GradientSet zeros_like(const std::vector<Tensor>& params);

/// Records the forward pass of one example and replays it backwards.
/// Parameter gradients accumulate into the GradientSet passed to backward().
class Graph {
 public:
  using NodeId = std::size_t;

  Graph(const std::vector<Tensor>& params, bool record);

  NodeId input(Matrix value, std::string name);
  const Matrix& value(NodeId id) const { return nodes_[id].value; }

  /// 'Same'-padded 1-D convolution; weight shape [k, Cout, Cin], bias [Cout].
  NodeId conv1d(NodeId x, std::size_t weight, std::size_t bias, std::size_t dilation, std::string name);
  /// Transposed conv with kernel == stride: out[:, i*u + j] = W_j x[:, i] + b.
  NodeId upsample_conv(NodeId x, std::size_t weight, std::size_t bias, std::string name);
  /// Strided conv with kernel == stride: out[:, i] = sum_j W_j x[:, i*u + j] + b.
  NodeId downsample_conv(NodeId x, std::size_t weight, std::size_t bias, std::string name);
  /// Dense layer on a column vector; weight [Cout, Cin], bias [Cout].
  NodeId linear(NodeId x, std::size_t weight, std::size_t bias, std::string name);
  NodeId silu(NodeId x, std::string name);
  NodeId add(NodeId a, NodeId b, std::string name);
  /// gamma * h + beta, elementwise.
  NodeId film(NodeId h, NodeId gamma, NodeId beta, std::string name);
  /// x + v broadcast over time; v is a C x 1 column.
  NodeId add_channel_vector(NodeId x, NodeId v, std::string name);

  /// Seeds d(loss)/d(output) and accumulates parameter gradients.
  void backward(NodeId output, const Matrix& seed, GradientSet& grads);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::string name;
    std::function<void(Graph&, GradientSet&)> backprop;
  };

  NodeId push(Matrix value, std::string name, std::function<void(Graph&, GradientSet&)> backprop);
  Matrix& grad_of(NodeId id);
  Eigen::Map<const Matrix> weight_block(std::size_t param, std::size_t j) const;

  const std::vector<Tensor>& params_;
  bool record_;
  std::vector<Node> nodes_;
};

}  // namespace dwave::nn
