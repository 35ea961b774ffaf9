#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hifibbrg/nn.hpp"

namespace hifibbrg::models {

struct BackboneConfig {
    int in_channels = 1;
    int out_channels = 1;
    int base_width = 16;
    int depth = 2;
    bool time_embedding = true;
    int time_embed_dim = 32;
    bool zero_init_final = false;

    void validate() const;
    void check_spatial(int h, int w) const;  // input must divide by 2^depth
};

// Encoder-decoder backbone: per-level GN + SiLU + conv with skip connections,
// stride-2 conv down, nearest-neighbour upsample + conv up. Time enters as a
// per-level channel bias projected from a sinusoidal embedding of s = t/T.
class UNet {
public:
    UNet(const BackboneConfig& cfg, Rng& rng);

    ag::Var forward(const ag::Var& x, double s) const;
    nn::ParamStore& params() { return store_; }
    const nn::ParamStore& params() const { return store_; }
    const BackboneConfig& config() const { return cfg_; }

private:
    BackboneConfig cfg_;
    nn::ParamStore store_;

    std::optional<nn::Conv2d> stem_;
    std::vector<nn::GroupNorm> enc_gn_;
    std::vector<nn::Conv2d> enc_conv_, enc_time_, down_;
    std::optional<nn::GroupNorm> mid_gn_;
    std::optional<nn::Conv2d> mid_conv_, mid_time_;
    std::vector<nn::Conv2d> up_conv_;
    std::vector<nn::GroupNorm> dec_gn_;
    std::vector<nn::Conv2d> dec_conv_, dec_time_;
    std::optional<nn::GroupNorm> final_gn_;
    std::optional<nn::Conv2d> final_conv_;
    std::optional<nn::Conv2d> final_time_;
    std::optional<nn::Conv2d> time_mlp_;
};

// Bridge predictor interface; the UNet variant is the real model, the affine
// variant backs the scalar toy problem.
class EpsilonModel {
public:
    virtual ~EpsilonModel() = default;
    virtual ag::Var forward(const ag::Var& x_t, const ag::Var& x_T, int t, int T) = 0;
    virtual nn::ParamStore& params() = 0;
    virtual bool conditional() const = 0;
};

class UNetEpsilon : public EpsilonModel {
public:
    // Conditioning concatenates x_T into the channel dimension, so the
    // backbone consumes 2x image channels when use_condition is set.
    UNetEpsilon(const BackboneConfig& cfg, int image_channels, bool use_condition, Rng& rng);

    ag::Var forward(const ag::Var& x_t, const ag::Var& x_T, int t, int T) override;
    nn::ParamStore& params() override { return net_->params(); }
    bool conditional() const override { return use_condition_; }

private:
    std::unique_ptr<UNet> net_;
    bool use_condition_;
};

// pred = u * x_t + v * x_T + w with three scalar parameters
class AffineEpsilon : public EpsilonModel {
public:
    explicit AffineEpsilon(Rng& rng);

    ag::Var forward(const ag::Var& x_t, const ag::Var& x_T, int t, int T) override;
    nn::ParamStore& params() override { return store_; }
    bool conditional() const override { return true; }

private:
    nn::ParamStore store_;
    ag::Var u_, v_, w_;
};

// Reconstruction generator: the same backbone with time embeddings disabled.
class Generator {
public:
    Generator(const BackboneConfig& cfg, int image_channels, Rng& rng);

    ag::Var forward(const ag::Var& x0_hat);
    nn::ParamStore& params() { return net_->params(); }

private:
    std::unique_ptr<UNet> net_;
};

// Patch discriminator: n_blocks stride-2 4x4 convs with leaky activations,
// then a 3x3 projection to a one-channel logit map (no sigmoid).
class PatchDiscriminator {
public:
    PatchDiscriminator(int in_channels, int base_width, int n_blocks, Rng& rng);

    ag::Var forward(const ag::Var& x);
    nn::ParamStore& params() { return store_; }
    int stride_product() const { return 1 << n_blocks_; }

private:
    nn::ParamStore store_;
    int n_blocks_;
    std::vector<nn::Conv2d> convs_;
    std::vector<nn::GroupNorm> norms_;  // none on the first block
    std::optional<nn::Conv2d> head_;
};

struct ModelBundle {
    std::shared_ptr<EpsilonModel> epsilon_net;
    std::shared_ptr<Generator> generator;           // null when reconstruction is off
    std::shared_ptr<PatchDiscriminator> discriminator;  // null when adversarial is off
    std::size_t epsilon_param_count = 0;
    std::size_t generator_param_count = 0;
    std::size_t discriminator_param_count = 0;
};

ModelBundle build_models(const BackboneConfig& cfg, int image_channels, bool use_condition,
                         bool with_reconstruction, bool with_adversarial, std::uint64_t seed);

}  // namespace hifibbrg::models
