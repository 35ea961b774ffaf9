#include "hifibbrg/autograd.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hifibbrg::ag {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::MatrixXd;

Tensor& Node::grad_ref() {
    if (grad.data.empty()) grad = Tensor{value.shape};
    return grad;
}

Var constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    return n;
}

Var leaf(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = true;
    return n;
}

static Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backprop = std::move(backprop);
    return n;
}

void backward(const Var& root) {
    if (root->value.size() != 1) {
        throw std::logic_error("backward: root must be scalar, got " + root->value.shape.str());
    }
    // iterative post-order DFS
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
    while (!stack.empty()) {
        auto& [node, child] = stack.back();
        if (!node->requires_grad || visited.count(node)) {
            stack.pop_back();
            continue;
        }
        if (child < node->parents.size()) {
            Node* next = node->parents[child++].get();
            if (next->requires_grad && !visited.count(next)) stack.emplace_back(next, 0);
        } else {
            visited.insert(node);
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->grad_ref()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

static void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!(a->value.shape == b->value.shape)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a->value.shape.str() +
                                    " vs " + b->value.shape.str());
    }
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->value + b->value;
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (int k = 0; k < 2; ++k) {
            auto& p = self.parents[k];
            if (!p->requires_grad) continue;
            Tensor& g = p->grad_ref();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->value - b->value;
    return make_op(std::move(out), {a, b}, [](Node& self) {
        if (self.parents[0]->requires_grad) {
            Tensor& g = self.parents[0]->grad_ref();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (self.parents[1]->requires_grad) {
            Tensor& g = self.parents[1]->grad_ref();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
        }
    });
}

Var scale(const Var& a, double k) {
    Tensor out = k * a->value;
    return make_op(std::move(out), {a}, [k](Node& self) {
        Tensor& g = self.parents[0]->grad_ref();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * self.grad[i];
    });
}

static double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

Var silu(const Var& x) {
    Tensor out = x->value;
    for (double& v : out.data) v *= sigmoid(v);
    return make_op(std::move(out), {x}, [](Node& self) {
        const Tensor& in = self.parents[0]->value;
        Tensor& g = self.parents[0]->grad_ref();
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s = sigmoid(in[i]);
            g[i] += self.grad[i] * s * (1.0 + in[i] * (1.0 - s));
        }
    });
}

Var leaky_relu(const Var& x, double slope) {
    Tensor out = x->value;
    for (double& v : out.data) {
        if (v < 0.0) v *= slope;
    }
    return make_op(std::move(out), {x}, [slope](Node& self) {
        const Tensor& in = self.parents[0]->value;
        Tensor& g = self.parents[0]->grad_ref();
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] += self.grad[i] * (in[i] >= 0.0 ? 1.0 : slope);
        }
    });
}

Var concat_channels(const Var& a, const Var& b) {
    const Shape& sa = a->value.shape;
    const Shape& sb = b->value.shape;
    if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w) {
        throw std::invalid_argument("concat_channels: incompatible shapes " + sa.str() + " vs " + sb.str());
    }
    Shape so{sa.n, sa.c + sb.c, sa.h, sa.w};
    Tensor out{so};
    std::size_t plane = static_cast<std::size_t>(sa.h) * sa.w;
    for (int n = 0; n < sa.n; ++n) {
        std::copy_n(&a->value.data[n * sa.c * plane], sa.c * plane, &out.data[n * so.c * plane]);
        std::copy_n(&b->value.data[n * sb.c * plane], sb.c * plane,
                    &out.data[n * so.c * plane + sa.c * plane]);
    }
    return make_op(std::move(out), {a, b}, [sa, sb, plane](Node& self) {
        Shape so = self.value.shape;
        for (int k = 0; k < 2; ++k) {
            auto& p = self.parents[k];
            if (!p->requires_grad) continue;
            Tensor& g = p->grad_ref();
            int pc = (k == 0) ? sa.c : sb.c;
            std::size_t off = (k == 0) ? 0 : sa.c * plane;
            for (int n = 0; n < so.n; ++n) {
                const double* src = &self.grad.data[n * so.c * plane + off];
                double* dst = &g.data[n * pc * plane];
                for (std::size_t i = 0; i < pc * plane; ++i) dst[i] += src[i];
            }
        }
    });
}

Var upsample_nearest2(const Var& x) {
    const Shape& s = x->value.shape;
    Shape so{s.n, s.c, s.h * 2, s.w * 2};
    Tensor out{so};
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < so.h; ++y)
                for (int xx = 0; xx < so.w; ++xx)
                    out.at(n, c, y, xx) = x->value.at(n, c, y / 2, xx / 2);
    return make_op(std::move(out), {x}, [s](Node& self) {
        Tensor& g = self.parents[0]->grad_ref();
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int y = 0; y < s.h * 2; ++y)
                    for (int xx = 0; xx < s.w * 2; ++xx)
                        g.at(n, c, y / 2, xx / 2) += self.grad.at(n, c, y, xx);
    });
}

Var scale_by(const Var& x, const Var& s) {
    if (s->value.size() != 1) throw std::invalid_argument("scale_by: s must be scalar");
    double k = s->value[0];
    Tensor out = k * x->value;
    return make_op(std::move(out), {x, s}, [k](Node& self) {
        const Tensor& xin = self.parents[0]->value;
        if (self.parents[0]->requires_grad) {
            Tensor& gx = self.parents[0]->grad_ref();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += k * self.grad[i];
        }
        if (self.parents[1]->requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < xin.size(); ++i) acc += self.grad[i] * xin[i];
            self.parents[1]->grad_ref()[0] += acc;
        }
    });
}

Var shift_by(const Var& x, const Var& s) {
    if (s->value.size() != 1) throw std::invalid_argument("shift_by: s must be scalar");
    Tensor out = x->value;
    for (double& v : out.data) v += s->value[0];
    return make_op(std::move(out), {x, s}, [](Node& self) {
        if (self.parents[0]->requires_grad) {
            Tensor& gx = self.parents[0]->grad_ref();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
        }
        if (self.parents[1]->requires_grad) {
            double acc = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i];
            self.parents[1]->grad_ref()[0] += acc;
        }
    });
}

Var channel_bias_add(const Var& x, const Var& bias) {
    const Shape& s = x->value.shape;
    const Shape& sb = bias->value.shape;
    if (sb.n != s.n || sb.c != s.c || sb.h != 1 || sb.w != 1) {
        throw std::invalid_argument("channel_bias_add: bias shape " + sb.str() + " vs x " + s.str());
    }
    Tensor out = x->value;
    std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            double b = bias->value.at(n, c, 0, 0);
            double* dst = &out.data[(n * s.c + c) * plane];
            for (std::size_t i = 0; i < plane; ++i) dst[i] += b;
        }
    return make_op(std::move(out), {x, bias}, [s, plane](Node& self) {
        if (self.parents[0]->requires_grad) {
            Tensor& gx = self.parents[0]->grad_ref();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
        }
        if (self.parents[1]->requires_grad) {
            Tensor& gb = self.parents[1]->grad_ref();
            for (int n = 0; n < s.n; ++n)
                for (int c = 0; c < s.c; ++c) {
                    const double* src = &self.grad.data[(n * s.c + c) * plane];
                    double acc = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) acc += src[i];
                    gb.at(n, c, 0, 0) += acc;
                }
        }
    });
}

Var channel_gate_mul(const Var& x, const Var& gate) {
    const Shape& s = x->value.shape;
    const Shape& sg = gate->value.shape;
    if (sg.n != s.n || sg.c != s.c || sg.h != 1 || sg.w != 1) {
        throw std::invalid_argument("channel_gate_mul: gate shape " + sg.str() + " vs x " +
                                    s.str());
    }
    Tensor out = x->value;
    std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            double g = 1.0 + gate->value.at(n, c, 0, 0);
            double* dst = &out.data[(n * s.c + c) * plane];
            for (std::size_t i = 0; i < plane; ++i) dst[i] *= g;
        }
    return make_op(std::move(out), {x, gate}, [s, plane](Node& self) {
        const Tensor& xin = self.parents[0]->value;
        const Tensor& gin = self.parents[1]->value;
        if (self.parents[0]->requires_grad) {
            Tensor& gx = self.parents[0]->grad_ref();
            for (int n = 0; n < s.n; ++n)
                for (int c = 0; c < s.c; ++c) {
                    double g = 1.0 + gin.at(n, c, 0, 0);
                    std::size_t base = (n * s.c + c) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        gx[base + i] += g * self.grad[base + i];
                    }
                }
        }
        if (self.parents[1]->requires_grad) {
            Tensor& gg = self.parents[1]->grad_ref();
            for (int n = 0; n < s.n; ++n)
                for (int c = 0; c < s.c; ++c) {
                    std::size_t base = (n * s.c + c) * plane;
                    double acc = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) {
                        acc += self.grad[base + i] * xin[base + i];
                    }
                    gg.at(n, c, 0, 0) += acc;
                }
        }
    });
}

// --- conv2d ---

namespace {

struct ConvDims {
    int N, Cin, H, W, Cout, kh, kw, stride, pad, Ho, Wo, K, P;
};

ConvDims conv_dims(const Shape& xs, const Shape& ws, int stride, int pad) {
    ConvDims d;
    d.N = xs.n; d.Cin = xs.c; d.H = xs.h; d.W = xs.w;
    d.Cout = ws.n; d.kh = ws.h; d.kw = ws.w;
    d.stride = stride; d.pad = pad;
    if (ws.c != d.Cin) {
        throw std::invalid_argument("conv2d: weight expects " + std::to_string(ws.c) +
                                    " input channels, got " + std::to_string(d.Cin));
    }
    d.Ho = (d.H + 2 * pad - d.kh) / stride + 1;
    d.Wo = (d.W + 2 * pad - d.kw) / stride + 1;
    if (d.Ho < 1 || d.Wo < 1) {
        throw std::invalid_argument("conv2d: input " + xs.str() + " too small for kernel");
    }
    d.K = d.Cin * d.kh * d.kw;
    d.P = d.Ho * d.Wo;
    return d;
}

// col is K x P, column-major: col[p * K + k]
void im2col(const double* x, const ConvDims& d, double* col) {
    for (int oy = 0; oy < d.Ho; ++oy) {
        for (int ox = 0; ox < d.Wo; ++ox) {
            double* dst = col + (static_cast<std::size_t>(oy) * d.Wo + ox) * d.K;
            int iy0 = oy * d.stride - d.pad;
            int ix0 = ox * d.stride - d.pad;
            for (int c = 0; c < d.Cin; ++c) {
                const double* plane = x + static_cast<std::size_t>(c) * d.H * d.W;
                for (int i = 0; i < d.kh; ++i) {
                    int iy = iy0 + i;
                    for (int j = 0; j < d.kw; ++j) {
                        int ix = ix0 + j;
                        *dst++ = (iy >= 0 && iy < d.H && ix >= 0 && ix < d.W)
                                     ? plane[iy * d.W + ix]
                                     : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_accum(const double* col, const ConvDims& d, double* gx) {
    for (int oy = 0; oy < d.Ho; ++oy) {
        for (int ox = 0; ox < d.Wo; ++ox) {
            const double* src = col + (static_cast<std::size_t>(oy) * d.Wo + ox) * d.K;
            int iy0 = oy * d.stride - d.pad;
            int ix0 = ox * d.stride - d.pad;
            for (int c = 0; c < d.Cin; ++c) {
                double* plane = gx + static_cast<std::size_t>(c) * d.H * d.W;
                for (int i = 0; i < d.kh; ++i) {
                    int iy = iy0 + i;
                    for (int j = 0; j < d.kw; ++j) {
                        int ix = ix0 + j;
                        double v = *src++;
                        if (iy >= 0 && iy < d.H && ix >= 0 && ix < d.W) plane[iy * d.W + ix] += v;
                    }
                }
            }
        }
    }
}

}  // namespace

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    ConvDims d = conv_dims(x->value.shape, w->value.shape, stride, pad);
    if (b->value.shape.c != d.Cout || b->value.size() != static_cast<std::size_t>(d.Cout)) {
        throw std::invalid_argument("conv2d: bias shape mismatch");
    }
    Tensor out{Shape{d.N, d.Cout, d.Ho, d.Wo}};

#pragma omp parallel for schedule(static)
    for (int n = 0; n < d.N; ++n) {
        std::vector<double> colbuf(static_cast<std::size_t>(d.K) * d.P);
        im2col(&x->value.data[static_cast<std::size_t>(n) * d.Cin * d.H * d.W], d, colbuf.data());
        Eigen::Map<const RowMat> Wm(w->value.data.data(), d.Cout, d.K);
        Eigen::Map<ColMat> Colm(colbuf.data(), d.K, d.P);
        Eigen::Map<RowMat> Outm(&out.data[static_cast<std::size_t>(n) * d.Cout * d.P], d.Cout, d.P);
        Outm.noalias() = Wm * Colm;
        for (int co = 0; co < d.Cout; ++co) {
            double bias = b->value[co];
            double* row = &out.data[(static_cast<std::size_t>(n) * d.Cout + co) * d.P];
            for (int p = 0; p < d.P; ++p) row[p] += bias;
        }
    }

    return make_op(std::move(out), {x, w, b}, [d](Node& self) {
        const Var& x = self.parents[0];
        const Var& w = self.parents[1];
        const Var& b = self.parents[2];
        bool need_dx = x->requires_grad;
        bool need_dw = w->requires_grad;
        bool need_db = b->requires_grad;

        std::vector<Tensor> dws;
        if (need_dw) dws.assign(d.N, Tensor{w->value.shape});
        Tensor* gx = need_dx ? &x->grad_ref() : nullptr;

#pragma omp parallel for schedule(static)
        for (int n = 0; n < d.N; ++n) {
            std::vector<double> colbuf(static_cast<std::size_t>(d.K) * d.P);
            im2col(&x->value.data[static_cast<std::size_t>(n) * d.Cin * d.H * d.W], d, colbuf.data());
            Eigen::Map<const RowMat> Gm(&self.grad.data[static_cast<std::size_t>(n) * d.Cout * d.P],
                                        d.Cout, d.P);
            Eigen::Map<ColMat> Colm(colbuf.data(), d.K, d.P);
            if (need_dw) {
                Eigen::Map<RowMat> dWm(dws[n].data.data(), d.Cout, d.K);
                dWm.noalias() = Gm * Colm.transpose();
            }
            if (gx) {
                std::vector<double> dcol(static_cast<std::size_t>(d.K) * d.P);
                Eigen::Map<const RowMat> Wm(w->value.data.data(), d.Cout, d.K);
                Eigen::Map<ColMat> dColm(dcol.data(), d.K, d.P);
                dColm.noalias() = Wm.transpose() * Gm;
                col2im_accum(dcol.data(), d,
                             &gx->data[static_cast<std::size_t>(n) * d.Cin * d.H * d.W]);
            }
        }
        if (need_dw) {
            Tensor& gw = w->grad_ref();
            for (int n = 0; n < d.N; ++n)
                for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += dws[n][i];
        }
        if (need_db) {
            Tensor& gb = b->grad_ref();
            for (int n = 0; n < d.N; ++n)
                for (int co = 0; co < d.Cout; ++co) {
                    const double* row =
                        &self.grad.data[(static_cast<std::size_t>(n) * d.Cout + co) * d.P];
                    double acc = 0.0;
                    for (int p = 0; p < d.P; ++p) acc += row[p];
                    gb[co] += acc;
                }
        }
    });
}

Var group_norm(const Var& x, const Var& gamma, const Var& beta, int groups, double eps) {
    const Shape& s = x->value.shape;
    if (groups < 1 || s.c % groups != 0) {
        throw std::invalid_argument("group_norm: channels " + std::to_string(s.c) +
                                    " not divisible by groups " + std::to_string(groups));
    }
    int cpg = s.c / groups;
    std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
    std::size_t m = cpg * plane;  // elements per group

    auto xhat = std::make_shared<Tensor>(s);
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(s.n) * groups);
    Tensor out{s};
    for (int n = 0; n < s.n; ++n) {
        for (int g = 0; g < groups; ++g) {
            const double* src = &x->value.data[(static_cast<std::size_t>(n) * s.c + g * cpg) * plane];
            double mu = 0.0;
            for (std::size_t i = 0; i < m; ++i) mu += src[i];
            mu /= static_cast<double>(m);
            double var = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                double dlt = src[i] - mu;
                var += dlt * dlt;
            }
            var /= static_cast<double>(m);
            double istd = 1.0 / std::sqrt(var + eps);
            (*inv_std)[n * groups + g] = istd;
            double* xh = &xhat->data[(static_cast<std::size_t>(n) * s.c + g * cpg) * plane];
            for (std::size_t i = 0; i < m; ++i) xh[i] = (src[i] - mu) * istd;
        }
        for (int c = 0; c < s.c; ++c) {
            double gm = gamma->value[c];
            double bt = beta->value[c];
            const double* xh = &xhat->data[(static_cast<std::size_t>(n) * s.c + c) * plane];
            double* dst = &out.data[(static_cast<std::size_t>(n) * s.c + c) * plane];
            for (std::size_t i = 0; i < plane; ++i) dst[i] = gm * xh[i] + bt;
        }
    }
    return make_op(std::move(out), {x, gamma, beta},
                   [s, groups, cpg, plane, m, xhat, inv_std](Node& self) {
        const Var& x = self.parents[0];
        const Var& gamma = self.parents[1];
        const Var& beta = self.parents[2];
        if (gamma->requires_grad || beta->requires_grad) {
            Tensor& gg = gamma->grad_ref();
            Tensor& gb = beta->grad_ref();
            for (int n = 0; n < s.n; ++n)
                for (int c = 0; c < s.c; ++c) {
                    const double* g = &self.grad.data[(static_cast<std::size_t>(n) * s.c + c) * plane];
                    const double* xh = &xhat->data[(static_cast<std::size_t>(n) * s.c + c) * plane];
                    double ag = 0.0, ab = 0.0;
                    for (std::size_t i = 0; i < plane; ++i) {
                        ag += g[i] * xh[i];
                        ab += g[i];
                    }
                    gg[c] += ag;
                    gb[c] += ab;
                }
        }
        if (!x->requires_grad) return;
        Tensor& gx = x->grad_ref();
        for (int n = 0; n < s.n; ++n) {
            for (int g = 0; g < groups; ++g) {
                double istd = (*inv_std)[n * groups + g];
                // dxhat = grad * gamma (per channel); then the standard norm backward
                double sum_dxh = 0.0, sum_dxh_xh = 0.0;
                std::size_t base = (static_cast<std::size_t>(n) * s.c + g * cpg) * plane;
                for (int cc = 0; cc < cpg; ++cc) {
                    double gm = gamma->value[g * cpg + cc];
                    const double* gr = &self.grad.data[base + cc * plane];
                    const double* xh = &xhat->data[base + cc * plane];
                    for (std::size_t i = 0; i < plane; ++i) {
                        double dxh = gr[i] * gm;
                        sum_dxh += dxh;
                        sum_dxh_xh += dxh * xh[i];
                    }
                }
                double mean_dxh = sum_dxh / static_cast<double>(m);
                double mean_dxh_xh = sum_dxh_xh / static_cast<double>(m);
                for (int cc = 0; cc < cpg; ++cc) {
                    double gm = gamma->value[g * cpg + cc];
                    const double* gr = &self.grad.data[base + cc * plane];
                    const double* xh = &xhat->data[base + cc * plane];
                    double* dst = &gx.data[base + cc * plane];
                    for (std::size_t i = 0; i < plane; ++i) {
                        double dxh = gr[i] * gm;
                        dst[i] += istd * (dxh - mean_dxh - xh[i] * mean_dxh_xh);
                    }
                }
            }
        }
    });
}

double stable_softplus(double x) {
    // log(1 + e^x) without overflow
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

Var mean_abs_diff(const Var& a, const Var& b) {
    check_same_shape(a, b, "mean_abs_diff");
    std::size_t cnt = a->value.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < cnt; ++i) acc += std::abs(a->value[i] - b->value[i]);
    return make_op(Tensor::scalar(acc / cnt), {a, b}, [cnt](Node& self) {
        double g = self.grad[0] / static_cast<double>(cnt);
        const Tensor& av = self.parents[0]->value;
        const Tensor& bv = self.parents[1]->value;
        for (int k = 0; k < 2; ++k) {
            auto& p = self.parents[k];
            if (!p->requires_grad) continue;
            Tensor& gp = p->grad_ref();
            double sign = (k == 0) ? 1.0 : -1.0;
            for (std::size_t i = 0; i < cnt; ++i) {
                double diff = av[i] - bv[i];
                double d = (diff > 0.0) ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                gp[i] += g * sign * d;
            }
        }
    });
}

Var mean_sq_diff(const Var& a, const Var& b) {
    check_same_shape(a, b, "mean_sq_diff");
    std::size_t cnt = a->value.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < cnt; ++i) {
        double d = a->value[i] - b->value[i];
        acc += d * d;
    }
    return make_op(Tensor::scalar(acc / cnt), {a, b}, [cnt](Node& self) {
        double g = self.grad[0] * 2.0 / static_cast<double>(cnt);
        const Tensor& av = self.parents[0]->value;
        const Tensor& bv = self.parents[1]->value;
        for (int k = 0; k < 2; ++k) {
            auto& p = self.parents[k];
            if (!p->requires_grad) continue;
            Tensor& gp = p->grad_ref();
            double sign = (k == 0) ? 1.0 : -1.0;
            for (std::size_t i = 0; i < cnt; ++i) gp[i] += g * sign * (av[i] - bv[i]);
        }
    });
}

Var mean_softplus(const Var& x) {
    std::size_t cnt = x->value.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < cnt; ++i) acc += stable_softplus(x->value[i]);
    return make_op(Tensor::scalar(acc / cnt), {x}, [cnt](Node& self) {
        double g = self.grad[0] / static_cast<double>(cnt);
        const Tensor& in = self.parents[0]->value;
        Tensor& gp = self.parents[0]->grad_ref();
        for (std::size_t i = 0; i < cnt; ++i) gp[i] += g * sigmoid(in[i]);
    });
}

Var mean_softplus_neg(const Var& x) {
    std::size_t cnt = x->value.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < cnt; ++i) acc += stable_softplus(-x->value[i]);
    return make_op(Tensor::scalar(acc / cnt), {x}, [cnt](Node& self) {
        double g = self.grad[0] / static_cast<double>(cnt);
        const Tensor& in = self.parents[0]->value;
        Tensor& gp = self.parents[0]->grad_ref();
        for (std::size_t i = 0; i < cnt; ++i) gp[i] -= g * sigmoid(-in[i]);
    });
}

Var dot_const(const Var& x, const Tensor& wts) {
    if (!(x->value.shape == wts.shape)) {
        throw std::invalid_argument("dot_const: shape mismatch");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < wts.size(); ++i) acc += x->value[i] * wts[i];
    return make_op(Tensor::scalar(acc), {x}, [wts](Node& self) {
        double g = self.grad[0];
        Tensor& gp = self.parents[0]->grad_ref();
        for (std::size_t i = 0; i < wts.size(); ++i) gp[i] += g * wts[i];
    });
}

Var detach(const Var& x) {
    return constant(x->value);
}

}  // namespace hifibbrg::ag
