#include "holofin/tensor.hpp"

#include <cmath>

#include "holofin/errors.hpp"

namespace holofin::ad {

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)) {
    std::size_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw config_error("Tensor extents must be positive");
        n *= static_cast<std::size_t>(e);
    }
    values.assign(n, fill);
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.shape = {1};
    t.values = {v};
    return t;
}

void Tensor::validate() const {
    std::size_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw config_error("Tensor extents must be positive");
        n *= static_cast<std::size_t>(e);
    }
    if (n != values.size()) throw config_error("Tensor shape does not match its value count");
    for (double v : values)
        if (!std::isfinite(v)) throw numeric_error("Tensor holds a non-finite value");
}

NodeId Tape::leaf(Tensor value) {
    nodes_.push_back(Node{std::move(value), Tensor{}, {}, nullptr});
    return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::record(Tensor value, std::vector<NodeId> parents, BackwardFn back) {
    for (NodeId p : parents)
        if (p < 0 || p >= static_cast<NodeId>(nodes_.size()))
            throw config_error("Tape.record: parent id out of range");
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(parents), std::move(back)});
    return static_cast<NodeId>(nodes_.size()) - 1;
}

void Tape::accumulate(NodeId id, const std::vector<double>& g) {
    Tensor& grad = nodes_[id].grad;
    if (g.size() != grad.values.size())
        throw config_error("Tape.accumulate: gradient size mismatch");
    for (std::size_t i = 0; i < g.size(); ++i) grad.values[i] += g[i];
}

void Tape::accumulate_at(NodeId id, std::size_t offset, double g) {
    nodes_[id].grad.values[offset] += g;
}

void Tape::backward(NodeId loss) {
    if (loss < 0 || loss >= static_cast<NodeId>(nodes_.size()))
        throw config_error("Tape.backward: loss id out of range");
    if (nodes_[loss].value.numel() != 1)
        throw config_error("Tape.backward: loss must be scalar");

    for (Node& n : nodes_) {
        n.grad.shape = n.value.shape;
        n.grad.values.assign(n.value.values.size(), 0.0);
    }
    nodes_[loss].grad.values[0] = 1.0;

    // Every closure runs, even with an all-zero incoming gradient: paired-op
    // adjoints hang off one of their two output nodes and must still propagate
    // the sibling's gradient.
    for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id)
        if (nodes_[id].back) nodes_[id].back(*this, id);
}

}  // namespace holofin::ad
