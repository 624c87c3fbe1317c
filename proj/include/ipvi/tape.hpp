#pragma once

#include <functional>
#include <vector>

#include "ipvi/tensor.hpp"

namespace ipvi {

/// Define-by-run reverse-mode gradient tape. Nodes are appended in forward
/// (topological) order by the operations in ops.hpp; backward() performs a
/// single reverse sweep. A tape is rebuilt for every training iteration and
/// is confined to one worker at a time.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Register a trainable input. The returned tensor carries the tape link;
    /// its gradient can be fetched after backward().
    Tensor leaf(const Tensor& value);

    /// Reverse sweep from a scalar loss. Populates gradients for every node
    /// reachable from the loss. Calling backward a second time without
    /// recording new nodes is a contract error.
    void backward(const Tensor& loss);

    /// Gradient of the last backward() pass w.r.t. t. Unreached nodes get a
    /// zero gradient of the node's shape.
    Tensor grad(const Tensor& t) const;

    std::size_t num_nodes() const { return nodes_.size(); }
    bool backward_ran() const { return ran_backward_; }

    // --- used by the operations in ops.hpp ---

    using BackwardFn = std::function<void(Tape&, const Tensor& upstream)>;

    /// Append a node; returns its id.
    int push(const Shape& out_shape, BackwardFn fn);

    /// Record `value` as the output of a new node and link it to this tape.
    Tensor attach(Tensor value, BackwardFn fn);

    /// Add `delta` into the gradient slot of `node`.
    void accumulate(int node, const Tensor& delta);

private:
    struct Node {
        Shape shape;
        BackwardFn back;
    };

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;   // parallel to nodes_
    std::vector<char> touched_;   // whether grads_[i] received a contribution
    bool ran_backward_ = false;
    std::size_t nodes_at_backward_ = 0;
};

/// Tape shared by the operands (nullptr when all are constants). Mixing two
/// different tapes in one op is a contract error.
Tape* joint_tape(const Tensor& a);
Tape* joint_tape(const Tensor& a, const Tensor& b);

}  // namespace ipvi
