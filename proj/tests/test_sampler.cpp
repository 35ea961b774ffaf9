#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "hifibbrg/bridge.hpp"
#include "hifibbrg/models.hpp"
#include "hifibbrg/sampler.hpp"

using namespace hifibbrg;

namespace {

models::BackboneConfig tiny_cfg() {
    models::BackboneConfig cfg;
    cfg.base_width = 4;
    cfg.depth = 1;
    cfg.time_embed_dim = 4;
    return cfg;
}

// perturbs the zero-initialized final layer so the net is a nontrivial map
void randomize_final(nn::ParamStore& store, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : store.items()) {
        if (p.name.rfind("final.conv", 0) == 0) {
            for (double& v : p.var->value.data) v = 0.3 * rng.normal();
        }
    }
}

// ideal predictor that knows the true target: eps*(x_t, x_T, t) = x_t - x0
class OracleEpsilon : public models::EpsilonModel {
public:
    explicit OracleEpsilon(Tensor x0) : x0_(std::move(x0)) {}

    ag::Var forward(const ag::Var& x_t, const ag::Var&, int, int) override {
        Tensor out = x_t->value - x0_;
        return ag::constant(out);
    }
    nn::ParamStore& params() override { return store_; }
    bool conditional() const override { return true; }

private:
    Tensor x0_;
    nn::ParamStore store_;
};

// predicts zero everywhere, so injected bridge noise carries through each state
class ZeroEpsilon : public models::EpsilonModel {
public:
    ag::Var forward(const ag::Var& x_t, const ag::Var&, int, int) override {
        return ag::constant(Tensor(x_t->value.shape));
    }
    nn::ParamStore& params() override { return store_; }
    bool conditional() const override { return false; }

private:
    nn::ParamStore store_;
};

}  // namespace

TEST_CASE("one-step sampling is the identity under zero initialization") {
    models::ModelBundle bundle = models::build_models(tiny_cfg(), 1, true, false, false, 7);
    bridge::ScheduleParams sched(1000);
    Shape s{1, 1, 8, 8};
    Rng rng(1);
    Tensor xT = rng.normal_tensor(s);
    Tensor out = sample::sample_one_step(xT, *bundle.epsilon_net, sched);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == xT[i]);
}

TEST_CASE("one-step sampling repeats bit-identically") {
    models::ModelBundle bundle = models::build_models(tiny_cfg(), 1, true, false, false, 7);
    randomize_final(bundle.epsilon_net->params(), 2);
    bridge::ScheduleParams sched(100);
    Shape s{1, 1, 8, 8};
    Rng rng(3);
    Tensor xT = rng.normal_tensor(s);

    std::vector<Tensor> trials;
    for (int i = 0; i < 5; ++i) trials.push_back(sample::sample_one_step(xT, *bundle.epsilon_net, sched));
    for (const Tensor& t : trials) {
        for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i] == trials[0][i]);
    }
    auto [map, mean] = sample::trajectory_std(trials);
    CHECK(mean == 0.0);
    for (double v : map.data) CHECK(v == 0.0);
}

TEST_CASE("multi-step with one step collapses to the one-step rule") {
    models::ModelBundle bundle = models::build_models(tiny_cfg(), 1, true, false, false, 11);
    randomize_final(bundle.epsilon_net->params(), 12);
    bridge::ScheduleParams sched(50);
    Shape s{1, 1, 8, 8};
    Rng rng(13);
    for (int rep = 0; rep < 100; ++rep) {
        Tensor xT = rng.normal_tensor(s);
        Tensor one = sample::sample_one_step(xT, *bundle.epsilon_net, sched);
        for (bool stoch : {false, true}) {
            sample::SampleRequest req{xT, 1, stoch, 1, static_cast<std::uint64_t>(999 + rep)};
            auto [multi, rec] = sample::sample_multi_step(req, *bundle.epsilon_net, sched);
            for (std::size_t i = 0; i < one.size(); ++i) CHECK(multi[i] == one[i]);
        }
    }
}

TEST_CASE("deterministic multi-step sampling repeats bit-identically") {
    models::ModelBundle bundle = models::build_models(tiny_cfg(), 1, true, false, false, 17);
    randomize_final(bundle.epsilon_net->params(), 18);
    bridge::ScheduleParams sched(40);
    Rng rng(19);
    Tensor xT = rng.normal_tensor(Shape{1, 1, 8, 8});
    sample::SampleRequest req{xT, 10, false, 4, 0};
    auto [out, rec] = sample::sample_multi_step(req, *bundle.epsilon_net, sched);
    CHECK(rec.mean_std == 0.0);
    for (double v : rec.final_std_map.data) CHECK(v == 0.0);
    // different seed, same result
    req.seed = 12345;
    auto [out2, rec2] = sample::sample_multi_step(req, *bundle.epsilon_net, sched);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == out2[i]);
}

TEST_CASE("perfect oracle recovers the target at any step count") {
    bridge::ScheduleParams sched(1000);
    Shape s{1, 1, 4, 4};
    Rng rng(23);
    Tensor x0 = rng.normal_tensor(s);
    Tensor xT = rng.normal_tensor(s);
    OracleEpsilon oracle(x0);
    for (int n_steps : {1, 3, 10, 100}) {
        sample::SampleRequest req{xT, n_steps, false, 1, 0};
        auto [out, rec] = sample::sample_multi_step(req, oracle, sched);
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] == doctest::Approx(x0[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("stochastic variance ordering across step counts") {
    // zero predictor on scalar states: the trial-to-trial variance obeys the
    // exact linear recurrence v <- (1-s')^2 v + B(s')^2, which lets the
    // empirical std be checked against a closed-form oracle
    const int T = 1000;
    bridge::ScheduleParams sched(T);
    Shape s{1, 1, 4, 4};
    ZeroEpsilon zero;
    Rng rng(41);
    Tensor xT = rng.normal_tensor(s);

    auto exact_std = [&](int n_steps) {
        double v = 0.0;
        for (int k = 1; k <= n_steps; ++k) {
            int t_next = static_cast<int>(
                std::llround(static_cast<double>(T) * (n_steps - k) / n_steps));
            if (t_next == 0) continue;
            double sp = static_cast<double>(t_next) / T;
            double b = bridge::noise_scale(sp);
            v = (1.0 - sp) * (1.0 - sp) * v + b * b;
        }
        return std::sqrt(v);
    };
    auto empirical_std = [&](int n_steps) {
        sample::SampleRequest req{xT, n_steps, true, 400, 77};
        auto [out, rec] = sample::sample_multi_step(req, zero, sched);
        return rec.mean_std;
    };

    double e1000 = exact_std(1000), e200 = exact_std(200);
    CHECK(e1000 > e200);
    CHECK(e200 > 0.0);
    CHECK(empirical_std(200) == doctest::Approx(e200).epsilon(0.05));
    CHECK(empirical_std(1000) == doctest::Approx(e1000).epsilon(0.05));

    sample::SampleRequest one{xT, 1, true, 8, 77};
    auto [out, rec] = sample::sample_multi_step(one, zero, sched);
    CHECK(rec.mean_std == 0.0);
}

TEST_CASE("trajectory std oracle cases") {
    std::vector<Tensor> pair{Tensor::scalar(0.0), Tensor::scalar(1.0)};
    auto [map, mean] = sample::trajectory_std(pair);
    CHECK(mean == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    std::vector<Tensor> same(5, Tensor(Shape{1, 1, 3, 3}, 0.4));
    auto [map2, mean2] = sample::trajectory_std(same);
    CHECK(mean2 == 0.0);

    CHECK_THROWS_AS(sample::trajectory_std({Tensor::scalar(1.0)}), std::invalid_argument);
    std::vector<Tensor> mixed{Tensor(Shape{1, 1, 2, 2}), Tensor(Shape{1, 1, 3, 3})};
    CHECK_THROWS_AS(sample::trajectory_std(mixed), std::invalid_argument);
}

TEST_CASE("sampler validates the request") {
    models::ModelBundle bundle = models::build_models(tiny_cfg(), 1, true, false, false, 1);
    bridge::ScheduleParams sched(10);
    Tensor xT(Shape{1, 1, 8, 8});
    sample::SampleRequest bad{xT, 11, false, 1, 0};
    CHECK_THROWS_AS(sample::sample_multi_step(bad, *bundle.epsilon_net, sched),
                    std::invalid_argument);
    sample::SampleRequest none{xT, 0, false, 1, 0};
    CHECK_THROWS_AS(sample::sample_multi_step(none, *bundle.epsilon_net, sched),
                    std::invalid_argument);
}
