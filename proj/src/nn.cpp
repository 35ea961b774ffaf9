#include "hifibbrg/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace hifibbrg::nn {

ag::Var ParamStore::create(const std::string& name, Tensor init) {
    for (const auto& p : items_) {
        if (p.name == name) throw std::logic_error("ParamStore: duplicate name " + name);
    }
    ag::Var v = ag::leaf(std::move(init));
    items_.push_back({name, v});
    return v;
}

ag::Var ParamStore::find(const std::string& name) const {
    for (const auto& p : items_) {
        if (p.name == name) return p.var;
    }
    throw std::out_of_range("ParamStore: no parameter named " + name);
}

std::size_t ParamStore::total_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += p.var->value.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& p : items_) {
        Tensor& g = p.var->grad_ref();
        std::fill(g.data.begin(), g.data.end(), 0.0);
    }
}

int pick_groups(int channels) {
    for (int g : {8, 4, 1}) {
        if (channels % g == 0) return g;
    }
    return 1;
}

Conv2d::Conv2d(ParamStore& store, const std::string& prefix, int in_ch, int out_ch, int kernel,
               int stride, int pad, Rng& rng, bool zero_init)
    : stride_(stride), pad_(pad) {
    if (in_ch < 1 || out_ch < 1 || kernel < 1) {
        throw std::invalid_argument("Conv2d: nonpositive layer size in " + prefix);
    }
    Tensor w{Shape{out_ch, in_ch, kernel, kernel}};
    if (!zero_init) {
        double std = std::sqrt(2.0 / (in_ch * kernel * kernel));
        for (double& v : w.data) v = std * rng.normal();
    }
    w_ = store.create(prefix + ".w", std::move(w));
    b_ = store.create(prefix + ".b", Tensor{Shape{1, out_ch, 1, 1}});
}

ag::Var Conv2d::operator()(const ag::Var& x) const {
    return ag::conv2d(x, w_, b_, stride_, pad_);
}

GroupNorm::GroupNorm(ParamStore& store, const std::string& prefix, int channels)
    : groups_(pick_groups(channels)) {
    gamma_ = store.create(prefix + ".gamma", Tensor{Shape{1, channels, 1, 1}, 1.0});
    beta_ = store.create(prefix + ".beta", Tensor{Shape{1, channels, 1, 1}});
}

ag::Var GroupNorm::operator()(const ag::Var& x) const {
    return ag::group_norm(x, gamma_, beta_, groups_);
}

Tensor sinusoidal_embedding(double s, int dim, int batch) {
    if (dim < 2 || dim % 2 != 0) {
        throw std::invalid_argument("sinusoidal_embedding: dim must be even and >= 2");
    }
    int half = dim / 2;
    Tensor emb{Shape{batch, dim, 1, 1}};
    // frequencies span 1 .. 10^4 geometrically; s is scaled to the schedule's
    // native 0..1000-ish range so neighbouring steps are distinguishable
    double t = s * 1000.0;
    for (int i = 0; i < half; ++i) {
        double freq = std::exp(-std::log(10000.0) * i / (half > 1 ? half - 1 : 1));
        double a = t * freq;
        for (int n = 0; n < batch; ++n) {
            emb.at(n, i, 0, 0) = std::sin(a);
            emb.at(n, half + i, 0, 0) = std::cos(a);
        }
    }
    return emb;
}

}  // namespace hifibbrg::nn
