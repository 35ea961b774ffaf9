#pragma once

#include <utility>
#include <vector>

#include "hifibbrg/bridge.hpp"
#include "hifibbrg/models.hpp"

namespace hifibbrg::sample {

struct SampleRequest {
    Tensor x_T;
    int n_steps = 1;
    bool stochastic = false;
    int trials = 1;
    std::uint64_t seed = 0;
};

struct TrajectoryRecord {
    // per trial: recorded (step, image) states, at most max_recorded of them
    std::vector<std::vector<std::pair<int, Tensor>>> trials;
    // per recorded step: per-pixel sample std across trials (empty if trials < 2)
    std::vector<std::pair<int, Tensor>> std_maps;
    Tensor final_std_map;    // std across trial outputs
    double mean_std = 0.0;   // pixel average of final_std_map
};

// Deterministic one-step rule: x_T - eps(x_T, x_T, T). Consumes no randomness.
Tensor sample_one_step(const Tensor& x_T, models::EpsilonModel& eps_net,
                       const bridge::ScheduleParams& sched);

// Iterated re-bridging over a uniform step grid from T down to 0: at step t,
// predict x0_hat = x - eps(x, x_T, t), then re-anchor the closed-form marginal
// at the next step (plus B(s') noise when stochastic). n_steps = 1 collapses
// exactly to sample_one_step.
std::pair<Tensor, TrajectoryRecord> sample_multi_step(const SampleRequest& req,
                                                      models::EpsilonModel& eps_net,
                                                      const bridge::ScheduleParams& sched,
                                                      int max_recorded = 16);

// Elementwise sample standard deviation (n-1 denominator) across trials plus
// its pixel mean. Requires at least two trials.
std::pair<Tensor, double> trajectory_std(const std::vector<Tensor>& outputs);

}  // namespace hifibbrg::sample
