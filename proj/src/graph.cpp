#include "dwave/graph.hpp"

#include <cmath>
#include <stdexcept>

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace dwave::nn {

GradientSet zeros_like(const std::vector<Tensor>& params) {
  GradientSet g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) g[i].assign(params[i].size(), 0.0);
  return g;
}

namespace {

using MapMatrix = Eigen::Map<Matrix>;
using MapVector = Eigen::Map<Eigen::VectorXd>;
using ConstMapVector = Eigen::Map<const Eigen::VectorXd>;

#ifdef __GLIBC__
// Activations are a few hundred KB each and are freed right after use. With the
// default thresholds every one of them is a fresh mmap and a round of page
// faults, which costs more than the arithmetic.
const bool allocator_tuned = [] {
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
  return true;
}();
#endif

}  // namespace

Graph::Graph(const std::vector<Tensor>& params, bool record) : params_(params), record_(record) {
  nodes_.reserve(128);
}

Graph::NodeId Graph::push(Matrix value, std::string name, std::function<void(Graph&, GradientSet&)> backprop) {
  if (record_ && !value.allFinite()) throw std::runtime_error("non-finite activation in layer '" + name + "'");
  Node n;
  n.value = std::move(value);
  n.name = std::move(name);
  if (record_) n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

Graph::NodeId Graph::input(Matrix value, std::string name) { return push(std::move(value), std::move(name), nullptr); }

Matrix& Graph::grad_of(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Eigen::Map<const Matrix> Graph::weight_block(std::size_t param, std::size_t j) const {
  const Tensor& t = params_[param];
  const auto cout = static_cast<Eigen::Index>(t.shape[1]);
  const auto cin = static_cast<Eigen::Index>(t.shape[2]);
  return {t.values.data() + j * t.shape[1] * t.shape[2], cout, cin};
}

Graph::NodeId Graph::conv1d(NodeId xi, std::size_t w, std::size_t b, std::size_t dilation, std::string name) {
  const Tensor& wt = params_[w];
  const std::size_t k = wt.shape[0];
  const auto cout = static_cast<Eigen::Index>(wt.shape[1]);
  const Matrix& x = nodes_[xi].value;
  if (x.rows() != static_cast<Eigen::Index>(wt.shape[2])) throw std::invalid_argument(name + ": channel mismatch");
  const Eigen::Index len = x.cols();
  const auto half = static_cast<Eigen::Index>(k / 2);
  const auto dil = static_cast<Eigen::Index>(dilation);
  Matrix y(cout, len);
  y.colwise() = ConstMapVector(params_[b].values.data(), cout);
  // Tap j reads x[t + (j - half) * dil].
  auto tap_range = [half, dil, len](std::size_t j, Eigen::Index& out_lo, Eigen::Index& in_lo, Eigen::Index& n) {
    const Eigen::Index off = (static_cast<Eigen::Index>(j) - half) * dil;
    out_lo = std::max<Eigen::Index>(0, -off);
    const Eigen::Index out_hi = std::min<Eigen::Index>(len, len - off);
    n = std::max<Eigen::Index>(0, out_hi - out_lo);
    in_lo = out_lo + off;
  };
  for (std::size_t j = 0; j < k; ++j) {
    Eigen::Index out_lo, in_lo, n;
    tap_range(j, out_lo, in_lo, n);
    if (n > 0) y.middleCols(out_lo, n).noalias() += weight_block(w, j) * x.middleCols(in_lo, n);
  }
  const NodeId out = nodes_.size();
  return push(std::move(y), std::move(name), [=](Graph& g, GradientSet& grads) {
    const Matrix& dy = g.nodes_[out].grad;
    const Matrix& xv = g.nodes_[xi].value;
    Matrix& dx = g.grad_of(xi);
    const auto cin = xv.rows();
    MapVector(grads[b].data(), cout) += dy.rowwise().sum();
    for (std::size_t j = 0; j < k; ++j) {
      Eigen::Index out_lo, in_lo, n;
      tap_range(j, out_lo, in_lo, n);
      if (n == 0) continue;
      MapMatrix dw(grads[w].data() + j * static_cast<std::size_t>(cout * cin), cout, cin);
      dw.noalias() += dy.middleCols(out_lo, n) * xv.middleCols(in_lo, n).transpose();
      dx.middleCols(in_lo, n).noalias() += g.weight_block(w, j).transpose() * dy.middleCols(out_lo, n);
    }
  });
}

Graph::NodeId Graph::upsample_conv(NodeId xi, std::size_t w, std::size_t b, std::string name) {
  const Tensor& wt = params_[w];
  const auto u = static_cast<Eigen::Index>(wt.shape[0]);
  const auto cout = static_cast<Eigen::Index>(wt.shape[1]);
  const Matrix& x = nodes_[xi].value;
  if (x.rows() != static_cast<Eigen::Index>(wt.shape[2])) throw std::invalid_argument(name + ": channel mismatch");
  const Eigen::Index len = x.cols();
  // Stacking the u taps row-wise gives a (u*cout x len) product whose
  // column-major storage is exactly the interleaved (cout x len*u) output.
  Matrix stacked(u * cout, x.rows());
  for (Eigen::Index j = 0; j < u; ++j) stacked.middleRows(j * cout, cout) = weight_block(w, static_cast<std::size_t>(j));
  Matrix y(cout, len * u);
  MapMatrix(y.data(), u * cout, len).noalias() = stacked * x;
  y.colwise() += ConstMapVector(params_[b].values.data(), cout);
  const NodeId out = nodes_.size();
  return push(std::move(y), std::move(name), [=, stacked = std::move(stacked)](Graph& g, GradientSet& grads) {
    const Matrix& dy = g.nodes_[out].grad;
    const Matrix& xv = g.nodes_[xi].value;
    const auto cin = xv.rows();
    MapVector(grads[b].data(), cout) += dy.rowwise().sum();
    const Eigen::Map<const Matrix> dys(dy.data(), u * cout, len);
    const Matrix dw = dys * xv.transpose();
    for (Eigen::Index j = 0; j < u; ++j) {
      MapMatrix(grads[w].data() + static_cast<std::size_t>(j * cout * cin), cout, cin) += dw.middleRows(j * cout, cout);
    }
    g.grad_of(xi).noalias() += stacked.transpose() * dys;
  });
}

Graph::NodeId Graph::downsample_conv(NodeId xi, std::size_t w, std::size_t b, std::string name) {
  const Tensor& wt = params_[w];
  const auto u = static_cast<Eigen::Index>(wt.shape[0]);
  const auto cout = static_cast<Eigen::Index>(wt.shape[1]);
  const Matrix& x = nodes_[xi].value;
  const auto cin = x.rows();
  if (cin != static_cast<Eigen::Index>(wt.shape[2])) throw std::invalid_argument(name + ": channel mismatch");
  if (x.cols() % u != 0) throw std::invalid_argument(name + ": length not divisible by stride");
  const Eigen::Index len = x.cols() / u;
  // Viewing x as (u*cin x len) puts the u inputs of each output side by side.
  Matrix stacked(cout, u * cin);
  for (Eigen::Index j = 0; j < u; ++j) stacked.middleCols(j * cin, cin) = weight_block(w, static_cast<std::size_t>(j));
  Matrix y(cout, len);
  y.noalias() = stacked * Eigen::Map<const Matrix>(x.data(), u * cin, len);
  y.colwise() += ConstMapVector(params_[b].values.data(), cout);
  const NodeId out = nodes_.size();
  return push(std::move(y), std::move(name), [=, stacked = std::move(stacked)](Graph& g, GradientSet& grads) {
    const Matrix& dy = g.nodes_[out].grad;
    const Matrix& xv = g.nodes_[xi].value;
    MapVector(grads[b].data(), cout) += dy.rowwise().sum();
    const Matrix dw = dy * Eigen::Map<const Matrix>(xv.data(), u * cin, len).transpose();
    for (Eigen::Index j = 0; j < u; ++j) {
      MapMatrix(grads[w].data() + static_cast<std::size_t>(j * cout * cin), cout, cin) += dw.middleCols(j * cin, cin);
    }
    Matrix& dx = g.grad_of(xi);
    MapMatrix(dx.data(), u * cin, len).noalias() += stacked.transpose() * dy;
  });
}

Graph::NodeId Graph::linear(NodeId xi, std::size_t w, std::size_t b, std::string name) {
  const Tensor& wt = params_[w];
  const auto cout = static_cast<Eigen::Index>(wt.shape[0]);
  const auto cin = static_cast<Eigen::Index>(wt.shape[1]);
  const Matrix& x = nodes_[xi].value;
  if (x.rows() != cin || x.cols() != 1) throw std::invalid_argument(name + ": expects a column vector");
  Eigen::Map<const Matrix> W(wt.values.data(), cout, cin);
  Matrix y = W * x;
  y.col(0) += ConstMapVector(params_[b].values.data(), cout);
  const NodeId out = nodes_.size();
  return push(std::move(y), std::move(name), [=](Graph& g, GradientSet& grads) {
    const Matrix& dy = g.nodes_[out].grad;
    const Matrix& xv = g.nodes_[xi].value;
    Eigen::Map<const Matrix> Wv(g.params_[w].values.data(), cout, cin);
    MapMatrix(grads[w].data(), cout, cin).noalias() += dy * xv.transpose();
    MapVector(grads[b].data(), cout) += dy.col(0);
    g.grad_of(xi).noalias() += Wv.transpose() * dy;
  });
}

Graph::NodeId Graph::silu(NodeId xi, std::string name) {
  const Matrix& x = nodes_[xi].value;
  Matrix y = (x.array() * ((-x.array()).exp() + 1.0).inverse()).matrix();
  const NodeId out = nodes_.size();
  return push(std::move(y), std::move(name), [=](Graph& g, GradientSet&) {
    const Matrix& dy = g.nodes_[out].grad;
    const auto xv = g.nodes_[xi].value.array();
    const Eigen::ArrayXXd sig = ((-xv).exp() + 1.0).inverse();
    g.grad_of(xi).array() += dy.array() * sig * (1.0 + xv * (1.0 - sig));
  });
}

Graph::NodeId Graph::add(NodeId a, NodeId b, std::string name) {
  if (nodes_[a].value.rows() != nodes_[b].value.rows() || nodes_[a].value.cols() != nodes_[b].value.cols()) {
    throw std::invalid_argument(name + ": shape mismatch");
  }
  Matrix y = nodes_[a].value + nodes_[b].value;
  const NodeId out = nodes_.size();
  return push(std::move(y), std::move(name), [=](Graph& g, GradientSet&) {
    const Matrix& dy = g.nodes_[out].grad;
    g.grad_of(a) += dy;
    g.grad_of(b) += dy;
  });
}

Graph::NodeId Graph::film(NodeId h, NodeId gamma, NodeId beta, std::string name) {
  const Matrix& hv = nodes_[h].value;
  if (nodes_[gamma].value.rows() != hv.rows() || nodes_[gamma].value.cols() != hv.cols() ||
      nodes_[beta].value.rows() != hv.rows() || nodes_[beta].value.cols() != hv.cols()) {
    throw std::invalid_argument(name + ": modulation shape mismatch");
  }
  Matrix y = (nodes_[gamma].value.array() * hv.array()).matrix() + nodes_[beta].value;
  const NodeId out = nodes_.size();
  return push(std::move(y), std::move(name), [=](Graph& g, GradientSet&) {
    const Matrix& dy = g.nodes_[out].grad;
    g.grad_of(h).array() += dy.array() * g.nodes_[gamma].value.array();
    g.grad_of(gamma).array() += dy.array() * g.nodes_[h].value.array();
    g.grad_of(beta) += dy;
  });
}

Graph::NodeId Graph::add_channel_vector(NodeId x, NodeId v, std::string name) {
  if (nodes_[v].value.cols() != 1 || nodes_[v].value.rows() != nodes_[x].value.rows()) {
    throw std::invalid_argument(name + ": vector shape mismatch");
  }
  Matrix y = nodes_[x].value;
  y.colwise() += nodes_[v].value.col(0);
  const NodeId out = nodes_.size();
  return push(std::move(y), std::move(name), [=](Graph& g, GradientSet&) {
    const Matrix& dy = g.nodes_[out].grad;
    g.grad_of(x) += dy;
    g.grad_of(v).col(0) += dy.rowwise().sum();
  });
}

void Graph::backward(NodeId output, const Matrix& seed, GradientSet& grads) {
  if (!record_) throw std::logic_error("backward() on a graph built without recording");
  grad_of(output) = seed;
  for (std::size_t i = output + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backprop) continue;
    n.backprop(*this, grads);
    if (!n.grad.allFinite()) throw std::runtime_error("non-finite gradient in layer '" + n.name + "'");
  }
}

}  // namespace dwave::nn
