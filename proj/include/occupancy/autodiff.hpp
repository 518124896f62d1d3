#pragma once

#include "occupancy/tensor.hpp"

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

namespace occupancy::ad {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

using BackwardFn = std::function<void(Tape&, const std::vector<double>& out_grad)>;

// Reverse-mode tape. Nodes are appended in evaluation order, so the record
// order is already a topological order and backward() is a reverse sweep.
// A tape belongs to one thread.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Non-differentiable input.
    Var constant(Tensor value);

    // Binds a parameter. Binding the same tensor twice yields the same node.
    // On backward() the node's adjoint is summed into param.grad when
    // param.requires_grad() is set.
    Var leaf(Tensor& param);

    Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward, const char* op);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    // Adjoint of node `id`, allocated (zeroed) on first use.
    std::vector<double>& adjoint(std::size_t id);
    // Adjoint after backward(); empty if the node was unreachable.
    const std::vector<double>& adjoint_of(Var v) const { return nodes_[v.id].adjoint; }

    // Seeds d(loss)/d(loss) = 1 and sweeps. Repeated calls re-run the sweep
    // and accumulate again into bound leaves.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;
        std::vector<double> adjoint;
        Tensor* bound = nullptr;
        bool needs_grad = false;
        const char* op = "";
    };

    std::deque<Node> nodes_;
    std::unordered_map<const Tensor*, std::size_t> bound_;
};

// ---- primitive ops -------------------------------------------------------

// [..,M,K] x [..,K,N]; either operand may be a plain [M,K] matrix.
Var matmul(Var a, Var b);
// Swaps the last two axes.
Var transpose(Var a);

// Elementwise; the smaller operand may match a trailing suffix of the
// larger one's shape and is broadcast along the leading axes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);

Var sigmoid(Var x);
Var tanh(Var x);
Var relu(Var x);
Var log(Var x);
// Gradient passes only where lo < x < hi.
Var clamp(Var x, double lo, double hi);

Var sum(Var x);
Var mean(Var x);

Var softmax_last(Var x);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);

Var concat_last(const std::vector<Var>& parts);
Var slice_last(Var x, std::size_t begin, std::size_t width);
// Slices along axis 0.
Var rows(Var x, std::size_t begin, std::size_t count);
Var concat_rows(const std::vector<Var>& parts);
Var repeat_rows(Var row, std::size_t n);
Var reshape(Var x, Shape shape);

// Test hook: scales the upstream gradient fed to the named op's backward
// rule by 1.5. Empty string disables. Not thread-safe.
namespace testing {
void corrupt_backward(std::string op);
const std::string& corrupted_op();
} // namespace testing

} // namespace occupancy::ad
