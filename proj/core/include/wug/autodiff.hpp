#ifndef WUG_AUTODIFF_HPP
#define WUG_AUTODIFF_HPP

#include <cstddef>
#include <vector>

namespace wug::ad {

// Dense row-major matrix; vectors are cols == 1.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    std::size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

// Reverse-mode tape over tensor-valued nodes. Built per batch, freed
// wholesale. Node evaluation happens eagerly at construction; backward()
// walks the tape once in reverse.
class Tape {
public:
    using Var = int;

    // Leaves. Gradients are only accumulated into differentiable leaves.
    Var leaf(const Tensor& value, bool requires_grad);

    Var matvec(Var w, Var x);                 // (r x c) * (c x 1)
    Var add(Var a, Var b);                    // same shape
    Var tanh(Var a);
    Var row(Var w, int i);                    // row i as a column vector
    Var log_softmax(Var x);                   // column vector
    Var pick(Var x, int i);                   // element as 1x1 scalar
    Var scalar_add(Var a, Var b);             // 1x1 + 1x1
    Var logsumexp(const std::vector<Var>& scalars);
    Var stack(const std::vector<Var>& scalars);   // scalars -> column vector
    Var scaled_sum(const std::vector<Var>& scalars, double scale);

    const Tensor& value(Var id) const { return nodes_[id].val; }
    double scalar(Var id) const { return nodes_[id].val.v[0]; }

    // Seeds d(loss)/d(loss) = 1 at `loss` and accumulates leaf gradients.
    void backward(Var loss);
    const Tensor& grad(Var id) const { return nodes_[id].grad; }

    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op { Leaf, MatVec, Add, Tanh, Row, LogSoftmax, Pick, ScalarAdd, LogSumExp, Stack, ScaledSum };

    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        int index = 0;
        double scale = 1.0;
        int args_begin = 0;
        int args_len = 0;
        bool requires_grad = true;
        Tensor val;
        Tensor grad;
    };

    Var push(Node&& n);
    int pool_args(const std::vector<Var>& ids);

    std::vector<Node> nodes_;
    std::vector<int> arg_pool_;
};

} // namespace wug::ad

#endif
