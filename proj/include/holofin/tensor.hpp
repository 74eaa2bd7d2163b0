#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace holofin::ad {

// Dense real tensor. Complex quantities are carried as (re, im) pairs of
// equal-shaped real tensors throughout the autodiff layer.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> values;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, double fill = 0.0);
    static Tensor scalar(double v);

    std::size_t numel() const { return values.size(); }
    void validate() const;  // shape/extent consistency, finite values
};

using NodeId = int;

// Reverse-mode tape. Nodes own their forward values; backward closures refer
// to other nodes only through ids (the node vector may reallocate while
// recording). backward() visits nodes in exact reverse recording order.
class Tape {
  public:
    using BackwardFn = std::function<void(Tape&, NodeId self)>;

    // Records a leaf (input or parameter). Leaves have no backward function.
    NodeId leaf(Tensor value);

    // Records an op result together with its adjoint.
    NodeId record(Tensor value, std::vector<NodeId> parents, BackwardFn back);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }

    // Accumulates `g` (sized like the node's value) into a node's gradient.
    void accumulate(NodeId id, const std::vector<double>& g);
    void accumulate_at(NodeId id, std::size_t offset, double g);

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape backwards. The loss node
    // must be scalar. Gradients of nodes not reachable from the loss stay 0.
    void backward(NodeId loss);

    std::size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<NodeId> parents;
        BackwardFn back;
    };
    std::vector<Node> nodes_;
};

}  // namespace holofin::ad
