#include "wug/autodiff.hpp"

#include "wug/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wug::ad {

Tape::Var Tape::push(Node&& n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::pool_args(const std::vector<Var>& ids) {
    int begin = static_cast<int>(arg_pool_.size());
    arg_pool_.insert(arg_pool_.end(), ids.begin(), ids.end());
    return begin;
}

Tape::Var Tape::leaf(const Tensor& value, bool requires_grad) {
    Node n;
    n.op = Op::Leaf;
    n.requires_grad = requires_grad;
    n.val = value;
    return push(std::move(n));
}

Tape::Var Tape::matvec(Var w, Var x) {
    const Tensor& W = nodes_[w].val;
    const Tensor& X = nodes_[x].val;
    Node n;
    n.op = Op::MatVec;
    n.a = w;
    n.b = x;
    n.val = Tensor(W.rows, 1);
    for (int i = 0; i < W.rows; ++i) {
        double s = 0.0;
        const double* wrow = &W.v[static_cast<std::size_t>(i) * W.cols];
        for (int j = 0; j < W.cols; ++j) s += wrow[j] * X.v[j];
        n.val.v[i] = s;
    }
    return push(std::move(n));
}

Tape::Var Tape::add(Var a, Var b) {
    const Tensor& A = nodes_[a].val;
    const Tensor& B = nodes_[b].val;
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.val = A;
    for (std::size_t i = 0; i < n.val.size(); ++i) n.val.v[i] += B.v[i];
    return push(std::move(n));
}

Tape::Var Tape::tanh(Var a) {
    Node n;
    n.op = Op::Tanh;
    n.a = a;
    n.val = nodes_[a].val;
    for (double& x : n.val.v) x = std::tanh(x);
    return push(std::move(n));
}

Tape::Var Tape::row(Var w, int i) {
    const Tensor& W = nodes_[w].val;
    Node n;
    n.op = Op::Row;
    n.a = w;
    n.index = i;
    n.val = Tensor(W.cols, 1);
    for (int j = 0; j < W.cols; ++j) n.val.v[j] = W.at(i, j);
    return push(std::move(n));
}

Tape::Var Tape::log_softmax(Var x) {
    const Tensor& X = nodes_[x].val;
    Node n;
    n.op = Op::LogSoftmax;
    n.a = x;
    n.val = X;
    double mx = *std::max_element(X.v.begin(), X.v.end());
    double z = 0.0;
    for (double v : X.v) z += std::exp(v - mx);
    double lz = mx + std::log(z);
    for (double& v : n.val.v) v -= lz;
    return push(std::move(n));
}

Tape::Var Tape::pick(Var x, int i) {
    Node n;
    n.op = Op::Pick;
    n.a = x;
    n.index = i;
    n.val = Tensor(1, 1);
    n.val.v[0] = nodes_[x].val.v[i];
    return push(std::move(n));
}

Tape::Var Tape::scalar_add(Var a, Var b) {
    Node n;
    n.op = Op::ScalarAdd;
    n.a = a;
    n.b = b;
    n.val = Tensor(1, 1);
    n.val.v[0] = nodes_[a].val.v[0] + nodes_[b].val.v[0];
    return push(std::move(n));
}

Tape::Var Tape::logsumexp(const std::vector<Var>& scalars) {
    Node n;
    n.op = Op::LogSumExp;
    n.args_begin = pool_args(scalars);
    n.args_len = static_cast<int>(scalars.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (Var id : scalars) mx = std::max(mx, nodes_[id].val.v[0]);
    double out;
    if (!std::isfinite(mx)) {
        out = mx;
    } else {
        double z = 0.0;
        for (Var id : scalars) z += std::exp(nodes_[id].val.v[0] - mx);
        out = mx + std::log(z);
    }
    n.val = Tensor(1, 1);
    n.val.v[0] = out;
    return push(std::move(n));
}

Tape::Var Tape::stack(const std::vector<Var>& scalars) {
    Node n;
    n.op = Op::Stack;
    n.args_begin = pool_args(scalars);
    n.args_len = static_cast<int>(scalars.size());
    n.val = Tensor(static_cast<int>(scalars.size()), 1);
    for (std::size_t i = 0; i < scalars.size(); ++i) n.val.v[i] = nodes_[scalars[i]].val.v[0];
    return push(std::move(n));
}

Tape::Var Tape::scaled_sum(const std::vector<Var>& scalars, double scale) {
    Node n;
    n.op = Op::ScaledSum;
    n.scale = scale;
    n.args_begin = pool_args(scalars);
    n.args_len = static_cast<int>(scalars.size());
    double s = 0.0;
    for (Var id : scalars) s += nodes_[id].val.v[0];
    n.val = Tensor(1, 1);
    n.val.v[0] = s * scale;
    return push(std::move(n));
}

void Tape::backward(Var loss) {
    for (Node& n : nodes_) {
        n.grad = Tensor(n.val.rows, n.val.cols);
    }
    nodes_[loss].grad.v[0] = 1.0;

    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = nodes_[id];
        bool any = false;
        for (double g : n.grad.v)
            if (g != 0.0) {
                any = true;
                break;
            }
        if (!any) continue;
        switch (n.op) {
        case Op::Leaf:
            break;
        case Op::MatVec: {
            Node& W = nodes_[n.a];
            Node& X = nodes_[n.b];
            for (int i = 0; i < W.val.rows; ++i) {
                double g = n.grad.v[i];
                if (g == 0.0) continue;
                double* wg = &W.grad.v[static_cast<std::size_t>(i) * W.val.cols];
                const double* wv = &W.val.v[static_cast<std::size_t>(i) * W.val.cols];
                for (int j = 0; j < W.val.cols; ++j) {
                    wg[j] += g * X.val.v[j];
                    X.grad.v[j] += g * wv[j];
                }
            }
            break;
        }
        case Op::Add: {
            Node& A = nodes_[n.a];
            Node& B = nodes_[n.b];
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                A.grad.v[i] += n.grad.v[i];
                B.grad.v[i] += n.grad.v[i];
            }
            break;
        }
        case Op::Tanh: {
            Node& A = nodes_[n.a];
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                A.grad.v[i] += n.grad.v[i] * (1.0 - n.val.v[i] * n.val.v[i]);
            break;
        }
        case Op::Row: {
            Node& W = nodes_[n.a];
            double* wg = &W.grad.v[static_cast<std::size_t>(n.index) * W.val.cols];
            for (int j = 0; j < W.val.cols; ++j) wg[j] += n.grad.v[j];
            break;
        }
        case Op::LogSoftmax: {
            Node& X = nodes_[n.a];
            double gsum = 0.0;
            for (double g : n.grad.v) gsum += g;
            for (std::size_t i = 0; i < n.grad.size(); ++i)
                X.grad.v[i] += n.grad.v[i] - std::exp(n.val.v[i]) * gsum;
            break;
        }
        case Op::Pick:
            nodes_[n.a].grad.v[n.index] += n.grad.v[0];
            break;
        case Op::ScalarAdd:
            nodes_[n.a].grad.v[0] += n.grad.v[0];
            nodes_[n.b].grad.v[0] += n.grad.v[0];
            break;
        case Op::LogSumExp: {
            double g = n.grad.v[0];
            double out = n.val.v[0];
            if (!std::isfinite(out)) break;
            for (int k = 0; k < n.args_len; ++k) {
                Node& arg = nodes_[arg_pool_[n.args_begin + k]];
                arg.grad.v[0] += g * std::exp(arg.val.v[0] - out);
            }
            break;
        }
        case Op::Stack:
            for (int k = 0; k < n.args_len; ++k) nodes_[arg_pool_[n.args_begin + k]].grad.v[0] += n.grad.v[k];
            break;
        case Op::ScaledSum: {
            double g = n.grad.v[0] * n.scale;
            for (int k = 0; k < n.args_len; ++k) nodes_[arg_pool_[n.args_begin + k]].grad.v[0] += g;
            break;
        }
        }
    }
}

} // namespace wug::ad
