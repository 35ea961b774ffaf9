#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hifibbrg/tensor.hpp"

// Minimal reverse-mode autodiff tape. Each op builds a Node holding its value,
// its parents, and a closure that pushes gradients back into the parents.
// Graphs are built per forward pass; leaves (parameters) persist across passes
// and accumulate into their grad tensors until zeroed.
namespace hifibbrg::ag {

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // lazily allocated, same shape as value
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;  // may be empty for leaves/constants

    Tensor& grad_ref();  // allocates zeros on first use
};

Var constant(Tensor v);
Var leaf(Tensor v);  // requires_grad = true (parameter)

// Runs reverse accumulation from a scalar root.
void backward(const Var& root);

// --- elementwise / structural ops ---
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var scale(const Var& a, double k);
Var silu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var concat_channels(const Var& a, const Var& b);
Var upsample_nearest2(const Var& x);

// y = x * s and y = x + s for a scalar-shaped Var s (broadcast over x)
Var scale_by(const Var& x, const Var& s);
Var shift_by(const Var& x, const Var& s);

// bias shaped (N,C,1,1) broadcast over the spatial dims
Var channel_bias_add(const Var& x, const Var& bias);

// y = x * (1 + gate) with gate shaped (N,C,1,1); lets a conditioning signal
// rescale a feature map multiplicatively around the identity
Var channel_gate_mul(const Var& x, const Var& gate);

// --- layers ---
// w: (Cout, Cin, kh, kw), b: (1, Cout, 1, 1)
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// gamma/beta: (1, C, 1, 1)
Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, double eps = 1e-5);

// --- reductions to scalar ---
Var mean_abs_diff(const Var& a, const Var& b);   // mean |a - b|
Var mean_sq_diff(const Var& a, const Var& b);    // mean (a - b)^2
Var mean_softplus(const Var& x);                 // mean softplus(x)  = mean -log(1 - sigmoid(x))
Var mean_softplus_neg(const Var& x);             // mean softplus(-x) = mean -log(sigmoid(x))
Var dot_const(const Var& x, const Tensor& wts);  // sum x .* wts

Var detach(const Var& x);

double stable_softplus(double x);

}  // namespace hifibbrg::ag
