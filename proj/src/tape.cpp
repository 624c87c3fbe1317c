#include "ipvi/tape.hpp"

namespace ipvi {

Tensor Tape::leaf(const Tensor& value) {
    Tensor t = value.detached();
    const int id = push(t.shape(), BackwardFn{});
    t.bind(this, id);
    return t;
}

int Tape::push(const Shape& out_shape, BackwardFn fn) {
    nodes_.push_back(Node{out_shape, std::move(fn)});
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Tape::attach(Tensor value, BackwardFn fn) {
    const int id = push(value.shape(), std::move(fn));
    value.bind(this, id);
    return value;
}

void Tape::accumulate(int node, const Tensor& delta) {
    const std::size_t id = static_cast<std::size_t>(node);
    if (delta.shape() != nodes_[id].shape) {
        throw ContractError("gradient shape " + shape_str(delta.shape()) +
                            " does not match node shape " + shape_str(nodes_[id].shape));
    }
    if (!touched_[id]) {
        grads_[id] = delta.detached();
        touched_[id] = 1;
        return;
    }
    auto& acc = grads_[id].raw();
    const auto& d = delta.data();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
}

void Tape::backward(const Tensor& loss) {
    if (!loss.on_tape() || loss.tape() != this) {
        throw ContractError("backward: loss is not recorded on this tape");
    }
    if (!loss.is_scalar()) {
        throw ContractError("backward: loss must be a scalar, got shape " +
                            shape_str(loss.shape()));
    }
    if (ran_backward_ && nodes_.size() == nodes_at_backward_) {
        throw ContractError("backward: second call without a new forward pass");
    }
    grads_.assign(nodes_.size(), Tensor{});
    touched_.assign(nodes_.size(), 0);
    accumulate(loss.node(), Tensor(1.0));
    for (int id = loss.node(); id >= 0; --id) {
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (!touched_[static_cast<std::size_t>(id)] || !node.back) continue;
        node.back(*this, grads_[static_cast<std::size_t>(id)]);
    }
    ran_backward_ = true;
    nodes_at_backward_ = nodes_.size();
}

Tensor Tape::grad(const Tensor& t) const {
    if (!t.on_tape() || t.tape() != this) {
        throw ContractError("grad: tensor is not recorded on this tape");
    }
    if (!ran_backward_) {
        throw ContractError("grad: backward() has not run");
    }
    if (!touched_[static_cast<std::size_t>(t.node())]) return Tensor::zeros(t.shape());
    return grads_[static_cast<std::size_t>(t.node())].detached();
}

Tape* joint_tape(const Tensor& a) { return a.tape(); }

Tape* joint_tape(const Tensor& a, const Tensor& b) {
    if (a.on_tape() && b.on_tape() && a.tape() != b.tape()) {
        throw ContractError("operands recorded on different tapes");
    }
    return a.on_tape() ? a.tape() : b.tape();
}

}  // namespace ipvi
