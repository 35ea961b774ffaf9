#include "hifibbrg/models.hpp"

#include <stdexcept>
#include <string>

namespace hifibbrg::models {

void BackboneConfig::validate() const {
    if (depth < 1) throw std::invalid_argument("BackboneConfig: depth must be >= 1");
    if (base_width < 4) throw std::invalid_argument("BackboneConfig: base_width must be >= 4");
    if (in_channels < 1 || out_channels < 1) {
        throw std::invalid_argument("BackboneConfig: channel counts must be positive");
    }
    if (time_embedding && (time_embed_dim < 2 || time_embed_dim % 2 != 0)) {
        throw std::invalid_argument("BackboneConfig: time_embed_dim must be even and >= 2");
    }
}

void BackboneConfig::check_spatial(int h, int w) const {
    int div = 1 << depth;
    if (h % div != 0 || w % div != 0) {
        throw std::invalid_argument("BackboneConfig: spatial size " + std::to_string(h) + "x" +
                                    std::to_string(w) + " not divisible by 2^depth = " +
                                    std::to_string(div));
    }
}

UNet::UNet(const BackboneConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    auto width = [&](int level) { return cfg_.base_width << level; };

    stem_.emplace(store_, "stem", cfg_.in_channels, width(0), 3, 1, 1, rng);
    if (cfg_.time_embedding) {
        time_mlp_.emplace(store_, "time_mlp", cfg_.time_embed_dim, cfg_.time_embed_dim, 1, 1, 0,
                          rng);
    }
    for (int l = 0; l < cfg_.depth; ++l) {
        std::string p = "enc" + std::to_string(l);
        enc_gn_.emplace_back(store_, p + ".gn", width(l));
        enc_conv_.emplace_back(store_, p + ".conv", width(l), width(l), 3, 1, 1, rng);
        if (cfg_.time_embedding) {
            enc_time_.emplace_back(store_, p + ".time", cfg_.time_embed_dim, width(l), 1, 1, 0,
                                   rng);
        }
        down_.emplace_back(store_, p + ".down", width(l), width(l + 1), 3, 2, 1, rng);
    }
    mid_gn_.emplace(store_, "mid.gn", width(cfg_.depth));
    mid_conv_.emplace(store_, "mid.conv", width(cfg_.depth), width(cfg_.depth), 3, 1, 1, rng);
    if (cfg_.time_embedding) {
        mid_time_.emplace(store_, "mid.time", cfg_.time_embed_dim, width(cfg_.depth), 1, 1, 0, rng);
    }
    for (int l = cfg_.depth - 1; l >= 0; --l) {
        std::string p = "dec" + std::to_string(l);
        up_conv_.emplace_back(store_, p + ".up", width(l + 1), width(l), 3, 1, 1, rng);
        dec_gn_.emplace_back(store_, p + ".gn", 2 * width(l));
        dec_conv_.emplace_back(store_, p + ".conv", 2 * width(l), width(l), 3, 1, 1, rng);
        if (cfg_.time_embedding) {
            dec_time_.emplace_back(store_, p + ".time", cfg_.time_embed_dim, width(l), 1, 1, 0,
                                   rng);
        }
    }
    final_gn_.emplace(store_, "final.gn", width(0));
    final_conv_.emplace(store_, "final.conv", width(0), cfg_.out_channels, 3, 1, 1, rng,
                        cfg_.zero_init_final);
    if (cfg_.time_embedding) {
        // multiplicative output gate: the bridge target grows linearly in s, so
        // the head needs a way to rescale its prediction with the step
        final_time_.emplace(store_, "final.time", cfg_.time_embed_dim, cfg_.out_channels, 1, 1, 0,
                            rng);
    }
}

ag::Var UNet::forward(const ag::Var& x, double s) const {
    const Shape& sh = x->value.shape;
    if (sh.c != cfg_.in_channels) {
        throw std::invalid_argument("UNet: expected " + std::to_string(cfg_.in_channels) +
                                    " channels, got " + std::to_string(sh.c));
    }
    cfg_.check_spatial(sh.h, sh.w);

    ag::Var emb;
    if (cfg_.time_embedding) {
        ag::Var raw = ag::constant(nn::sinusoidal_embedding(s, cfg_.time_embed_dim, sh.n));
        emb = ag::silu((*time_mlp_)(raw));
    }

    ag::Var h = (*stem_)(x);
    std::vector<ag::Var> skips;
    for (int l = 0; l < cfg_.depth; ++l) {
        h = enc_conv_[l](ag::silu(enc_gn_[l](h)));
        if (cfg_.time_embedding) h = ag::channel_bias_add(h, enc_time_[l](emb));
        skips.push_back(h);
        h = down_[l](h);
    }
    h = (*mid_conv_)(ag::silu((*mid_gn_)(h)));
    if (cfg_.time_embedding) h = ag::channel_bias_add(h, (*mid_time_)(emb));
    for (int i = 0; i < cfg_.depth; ++i) {
        int l = cfg_.depth - 1 - i;
        h = up_conv_[i](ag::upsample_nearest2(h));
        h = ag::concat_channels(h, skips[l]);
        h = dec_conv_[i](ag::silu(dec_gn_[i](h)));
        if (cfg_.time_embedding) h = ag::channel_bias_add(h, dec_time_[i](emb));
    }
    ag::Var out = (*final_conv_)(ag::silu((*final_gn_)(h)));
    if (cfg_.time_embedding) out = ag::channel_gate_mul(out, (*final_time_)(emb));
    return out;
}

UNetEpsilon::UNetEpsilon(const BackboneConfig& cfg, int image_channels, bool use_condition,
                         Rng& rng)
    : use_condition_(use_condition) {
    BackboneConfig c = cfg;
    c.in_channels = use_condition ? 2 * image_channels : image_channels;
    c.out_channels = image_channels;
    c.time_embedding = true;
    c.zero_init_final = true;
    net_ = std::make_unique<UNet>(c, rng);
}

ag::Var UNetEpsilon::forward(const ag::Var& x_t, const ag::Var& x_T, int t, int T) {
    if (!(x_t->value.shape == x_T->value.shape)) {
        throw std::invalid_argument("UNetEpsilon: x_t/x_T shape mismatch");
    }
    if (t < 0 || t > T) throw std::out_of_range("UNetEpsilon: step outside [0, T]");
    double s = static_cast<double>(t) / T;
    ag::Var in = use_condition_ ? ag::concat_channels(x_t, x_T) : x_t;
    return net_->forward(in, s);
}

AffineEpsilon::AffineEpsilon(Rng& rng) {
    u_ = store_.create("u", Tensor::scalar(0.1 * rng.normal()));
    v_ = store_.create("v", Tensor::scalar(0.1 * rng.normal()));
    w_ = store_.create("w", Tensor::scalar(0.0));
}

ag::Var AffineEpsilon::forward(const ag::Var& x_t, const ag::Var& x_T, int t, int T) {
    (void)t;
    (void)T;
    return ag::shift_by(ag::add(ag::scale_by(x_t, u_), ag::scale_by(x_T, v_)), w_);
}

Generator::Generator(const BackboneConfig& cfg, int image_channels, Rng& rng) {
    BackboneConfig c = cfg;
    c.in_channels = image_channels;
    c.out_channels = image_channels;
    c.time_embedding = false;
    c.zero_init_final = false;
    net_ = std::make_unique<UNet>(c, rng);
}

ag::Var Generator::forward(const ag::Var& x0_hat) {
    return net_->forward(x0_hat, 0.0);
}

PatchDiscriminator::PatchDiscriminator(int in_channels, int base_width, int n_blocks, Rng& rng)
    : n_blocks_(n_blocks) {
    if (n_blocks < 1) throw std::invalid_argument("PatchDiscriminator: n_blocks must be >= 1");
    if (base_width < 4) throw std::invalid_argument("PatchDiscriminator: base_width must be >= 4");
    int ch = in_channels;
    for (int b = 0; b < n_blocks; ++b) {
        int out = base_width << b;
        std::string p = "block" + std::to_string(b);
        convs_.emplace_back(store_, p + ".conv", ch, out, 4, 2, 1, rng);
        if (b > 0) norms_.emplace_back(store_, p + ".gn", out);
        ch = out;
    }
    head_.emplace(store_, "head", ch, 1, 3, 1, 1, rng);
}

ag::Var PatchDiscriminator::forward(const ag::Var& x) {
    ag::Var h = x;
    for (int b = 0; b < n_blocks_; ++b) {
        h = convs_[b](h);
        if (b > 0) h = norms_[b - 1](h);
        h = ag::leaky_relu(h, 0.2);
    }
    return (*head_)(h);
}

ModelBundle build_models(const BackboneConfig& cfg, int image_channels, bool use_condition,
                         bool with_reconstruction, bool with_adversarial, std::uint64_t seed) {
    if (with_adversarial && !with_reconstruction) {
        throw std::invalid_argument("build_models: adversarial training requires reconstruction");
    }
    ModelBundle b;
    {
        Rng rng(seed);
        b.epsilon_net = std::make_shared<UNetEpsilon>(cfg, image_channels, use_condition, rng);
        b.epsilon_param_count = b.epsilon_net->params().total_count();
    }
    if (with_reconstruction) {
        Rng rng(seed + 1);
        b.generator = std::make_shared<Generator>(cfg, image_channels, rng);
        b.generator_param_count = b.generator->params().total_count();
    }
    if (with_adversarial) {
        Rng rng(seed + 2);
        b.discriminator =
            std::make_shared<PatchDiscriminator>(image_channels, cfg.base_width, 3, rng);
        b.discriminator_param_count = b.discriminator->params().total_count();
    }
    return b;
}

}  // namespace hifibbrg::models
