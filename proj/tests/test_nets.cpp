#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "hifibbrg/models.hpp"

using namespace hifibbrg;

namespace {

models::BackboneConfig tiny_cfg() {
    models::BackboneConfig cfg;
    cfg.in_channels = 1;
    cfg.out_channels = 1;
    cfg.base_width = 4;
    cfg.depth = 1;
    cfg.time_embedding = true;
    cfg.time_embed_dim = 4;
    return cfg;
}

// scalar projection of a tensor output so gradients can be checked end to end
Tensor projection_weights(const Shape& s, std::uint64_t seed) {
    Rng rng(seed);
    return rng.normal_tensor(s);
}

}  // namespace

TEST_CASE("config validation") {
    models::BackboneConfig cfg = tiny_cfg();
    CHECK_NOTHROW(cfg.validate());

    cfg.depth = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_cfg();
    cfg.base_width = 3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_cfg();
    cfg.time_embed_dim = 5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    models::BackboneConfig deep = tiny_cfg();
    deep.depth = 3;
    CHECK_NOTHROW(deep.check_spatial(32, 32));
    CHECK_THROWS_AS(deep.check_spatial(30, 30), std::invalid_argument);
}

TEST_CASE("seeded build is bit-identical") {
    models::BackboneConfig cfg = tiny_cfg();
    models::ModelBundle a = models::build_models(cfg, 1, true, true, true, 99);
    models::ModelBundle b = models::build_models(cfg, 1, true, true, true, 99);

    auto same_params = [](nn::ParamStore& x, nn::ParamStore& y) {
        REQUIRE(x.items().size() == y.items().size());
        for (std::size_t i = 0; i < x.items().size(); ++i) {
            REQUIRE(x.items()[i].name == y.items()[i].name);
            const Tensor& tx = x.items()[i].var->value;
            const Tensor& ty = y.items()[i].var->value;
            REQUIRE(tx.size() == ty.size());
            for (std::size_t j = 0; j < tx.size(); ++j) CHECK(tx[j] == ty[j]);
        }
    };
    same_params(a.epsilon_net->params(), b.epsilon_net->params());
    same_params(a.generator->params(), b.generator->params());
    same_params(a.discriminator->params(), b.discriminator->params());
}

TEST_CASE("parameter counts match the per-layer tally") {
    // backbone with base 4, depth 1, time dim 4, 1 channel in/out:
    //   stem 4*1*9+4 = 40, time_mlp 4*4+4 = 20
    //   enc0: gn 8, conv 4*4*9+4 = 148, time 4*4+4 = 20, down 8*4*9+8 = 296
    //   mid: gn 16, conv 8*8*9+8 = 584, time 8*4+8 = 40
    //   dec0: up 4*8*9+4 = 292, gn 16, conv 4*8*9+4 = 292, time 20
    //   final: gn 8, conv 1*4*9+1 = 37, time gate 1*4+1 = 5   -> 1842
    models::BackboneConfig cfg = tiny_cfg();
    Rng rng(0);
    models::UNet unet(cfg, rng);
    CHECK(unet.params().total_count() == 1842);

    // same backbone without time embeddings drops time_mlp + 3 time convs + gate
    models::BackboneConfig g = tiny_cfg();
    g.time_embedding = false;
    Rng rng2(0);
    models::UNet gen(g, rng2);
    CHECK(gen.params().total_count() == 1842 - 20 - 20 - 40 - 20 - 5);

    // discriminator, 1 channel, base 4, 2 blocks:
    //   block0 4*1*16+4 = 68, block1 8*4*16+8 = 520 + gn 16, head 1*8*9+1 = 73
    Rng rng3(0);
    models::PatchDiscriminator disc(1, 4, 2, rng3);
    CHECK(disc.params().total_count() == 677);
}

TEST_CASE("epsilon net doubles input channels when conditioned") {
    models::BackboneConfig cfg = tiny_cfg();
    models::ModelBundle bundle = models::build_models(cfg, 1, true, false, false, 5);
    CHECK(bundle.epsilon_net->conditional());
    CHECK(bundle.generator == nullptr);
    CHECK(bundle.discriminator == nullptr);

    Shape s{2, 1, 8, 8};
    Rng rng(1);
    ag::Var xt = ag::constant(rng.normal_tensor(s));
    ag::Var xT = ag::constant(rng.normal_tensor(s));
    ag::Var out = bundle.epsilon_net->forward(xt, xT, 3, 10);
    CHECK(out->value.shape == s);
    CHECK(out->value.all_finite());

    models::ModelBundle un = models::build_models(cfg, 1, false, false, false, 5);
    CHECK_FALSE(un.epsilon_net->conditional());
    CHECK(un.epsilon_param_count < bundle.epsilon_param_count);
}

TEST_CASE("zero-initialized final layer gives an exactly zero prediction") {
    models::BackboneConfig cfg = tiny_cfg();
    models::ModelBundle bundle = models::build_models(cfg, 1, true, false, false, 3);
    Shape s{1, 1, 8, 8};
    Rng rng(4);
    Tensor x = rng.normal_tensor(s);
    ag::Var out = bundle.epsilon_net->forward(ag::constant(x), ag::constant(x), 10, 10);
    for (double v : out->value.data) CHECK(v == 0.0);
}

TEST_CASE("forward shape contract across a config grid") {
    for (int depth : {1, 2, 3}) {
        for (int width : {4, 8, 16}) {
            for (int size : {16, 32}) {
                models::BackboneConfig cfg = tiny_cfg();
                cfg.depth = depth;
                cfg.base_width = width;
                Rng rng(depth * 100 + width);
                models::UNetEpsilon eps(cfg, 1, true, rng);
                Shape s{1, 1, size, size};
                Rng drng(size);
                Tensor x = drng.normal_tensor(s);
                ag::Var out = eps.forward(ag::constant(x), ag::constant(x), 1, 4);
                CHECK(out->value.shape == s);
                CHECK(out->value.all_finite());
            }
        }
    }
}

TEST_CASE("generator forward is deterministic and shape preserving") {
    models::BackboneConfig cfg = tiny_cfg();
    Rng rng(12);
    models::Generator gen(cfg, 1, rng);
    Shape s{1, 1, 8, 8};
    Rng drng(13);
    Tensor x = drng.normal_tensor(s);
    ag::Var a = gen.forward(ag::constant(x));
    ag::Var b = gen.forward(ag::constant(x));
    CHECK(a->value.shape == s);
    for (std::size_t i = 0; i < a->value.size(); ++i) CHECK(a->value[i] == b->value[i]);
}

TEST_CASE("discriminator output is a downsampled logit map") {
    Rng rng(8);
    models::PatchDiscriminator disc(1, 4, 3, rng);
    CHECK(disc.stride_product() == 8);
    Shape s{1, 1, 32, 32};
    Rng drng(9);
    ag::Var out = disc.forward(ag::constant(drng.normal_tensor(s)));
    CHECK(out->value.shape == Shape{1, 1, 4, 4});
    CHECK(out->value.all_finite());
}

TEST_CASE("condition sensitivity distinguishes the conditional mode") {
    models::BackboneConfig cfg = tiny_cfg();
    Rng rng(21);
    models::UNetEpsilon eps(cfg, 1, true, rng);
    // perturb the final conv away from its zero init so outputs are nonzero
    for (auto& p : eps.params().items()) {
        if (p.name.rfind("final.conv", 0) == 0) {
            Rng prng(22);
            for (double& v : p.var->value.data) v = 0.1 * prng.normal();
        }
    }
    Shape s{1, 1, 8, 8};
    Rng drng(23);
    Tensor xt = drng.normal_tensor(s);
    Tensor cond_a = drng.normal_tensor(s);
    Tensor cond_b = drng.normal_tensor(s);
    Tensor out_a = eps.forward(ag::constant(xt), ag::constant(cond_a), 2, 4)->value;
    Tensor out_b = eps.forward(ag::constant(xt), ag::constant(cond_b), 2, 4)->value;
    double diff = 0.0;
    for (std::size_t i = 0; i < out_a.size(); ++i) diff += std::abs(out_a[i] - out_b[i]);
    CHECK(diff > 1e-8);
}

TEST_CASE("finite-difference gradients on 4x4 inputs") {
    Shape s{1, 1, 4, 4};
    Rng drng(31);
    Tensor xt = drng.normal_tensor(s);
    Tensor xT = drng.normal_tensor(s);

    SUBCASE("bridge predictor") {
        models::BackboneConfig cfg = tiny_cfg();
        Rng rng(32);
        models::UNetEpsilon eps(cfg, 1, true, rng);
        // move final conv off its zero init so every layer sees signal
        for (auto& p : eps.params().items()) {
            if (p.name.rfind("final.conv", 0) == 0) {
                Rng prng(33);
                for (double& v : p.var->value.data) v = 0.2 * prng.normal();
            }
        }
        Tensor wts = projection_weights(s, 34);
        auto value = [&] {
            ag::Var out = eps.forward(ag::constant(xt), ag::constant(xT), 1, 4);
            return ag::dot_const(out, wts)->value.item();
        };
        auto bwd = [&] {
            ag::Var out = eps.forward(ag::constant(xt), ag::constant(xT), 1, 4);
            ag::backward(ag::dot_const(out, wts));
        };
        GradCheckResult res = finite_difference_check(eps.params(), value, bwd);
        INFO("worst " << res.worst_param << " rel " << res.worst_rel);
        CHECK(res.ok);
        CHECK(res.checked == static_cast<int>(eps.params().total_count()));
    }

    SUBCASE("generator") {
        models::BackboneConfig cfg = tiny_cfg();
        Rng rng(35);
        models::Generator gen(cfg, 1, rng);
        Tensor wts = projection_weights(s, 36);
        auto value = [&] {
            return ag::dot_const(gen.forward(ag::constant(xt)), wts)->value.item();
        };
        auto bwd = [&] { ag::backward(ag::dot_const(gen.forward(ag::constant(xt)), wts)); };
        GradCheckResult res = finite_difference_check(gen.params(), value, bwd);
        INFO("worst " << res.worst_param << " rel " << res.worst_rel);
        CHECK(res.ok);
    }

    SUBCASE("discriminator") {
        Rng rng(37);
        models::PatchDiscriminator disc(1, 4, 1, rng);
        Tensor wts = projection_weights(Shape{1, 1, 2, 2}, 38);
        auto value = [&] {
            return ag::dot_const(disc.forward(ag::constant(xt)), wts)->value.item();
        };
        auto bwd = [&] { ag::backward(ag::dot_const(disc.forward(ag::constant(xt)), wts)); };
        GradCheckResult res = finite_difference_check(disc.params(), value, bwd);
        INFO("worst " << res.worst_param << " rel " << res.worst_rel);
        CHECK(res.ok);
    }
}

TEST_CASE("adversarial mode requires the reconstruction mapping") {
    CHECK_THROWS_AS(models::build_models(tiny_cfg(), 1, true, false, true, 0),
                    std::invalid_argument);
}

TEST_CASE("sinusoidal embedding basics") {
    Tensor e = nn::sinusoidal_embedding(0.5, 8, 3);
    CHECK(e.shape == Shape{3, 8, 1, 1});
    CHECK(e.all_finite());
    // all batch rows identical
    for (int c = 0; c < 8; ++c) {
        CHECK(e.at(0, c, 0, 0) == e.at(1, c, 0, 0));
        CHECK(e.at(0, c, 0, 0) == e.at(2, c, 0, 0));
    }
    // different times give different embeddings
    Tensor e2 = nn::sinusoidal_embedding(0.25, 8, 1);
    double diff = 0.0;
    for (int c = 0; c < 8; ++c) diff += std::abs(e.at(0, c, 0, 0) - e2.at(0, c, 0, 0));
    CHECK(diff > 1e-6);
}

TEST_CASE("group picking divides the channel count") {
    CHECK(nn::pick_groups(8) == 8);
    CHECK(nn::pick_groups(12) == 4);
    CHECK(nn::pick_groups(6) == 1);
    CHECK(nn::pick_groups(16) == 8);
}
