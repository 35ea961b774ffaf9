#pragma once

#include "hifibbrg/tensor.hpp"

namespace hifibbrg::bridge {

// Discrete schedule: integer steps t in {0, ..., total_steps} map to unit time
// s = t / total_steps.
struct ScheduleParams {
    int total_steps = 1000;

    explicit ScheduleParams(int T);
    double unit_time(int t) const;  // throws if t outside [0, total_steps]
};

// Marginal noise scale B(s) = 2(1-s) sqrt(ln 1/(1-s)), extended by continuity
// with B(0) = B(1) = 0. Throws std::domain_error outside [0, 1].
double noise_scale(double s);

// X_t = s*xT + (1-s)*x0 + B(s)*eps with s = t/T. Endpoints are exact: the
// noise term is skipped entirely at t = 0 and t = T.
Tensor forward_sample(const Tensor& x0, const Tensor& xT, int t, const Tensor& eps,
                      const ScheduleParams& sched);

// Regression target X_t - X_0 = s*(xT - x0) + B(s)*eps.
Tensor bridge_target(const Tensor& x0, const Tensor& xT, int t, const Tensor& eps,
                     const ScheduleParams& sched);

struct BridgeState {
    Tensor x;
    int step = 0;
};

struct NoisePath {
    std::vector<BridgeState> states;  // t = 0 ... t = n_steps
    std::uint64_t seed = 0;
};

// Euler-Maruyama integration of dX = -(X - xT)/(1-s) ds + 2 sqrt(1-s) dW.
// Integration stops one step short of s = 1 (drift singularity) and snaps the
// final state to xT. With diffusion_on = false the path is the drift-only ODE.
NoisePath simulate_sde_path(const Tensor& x0, const Tensor& xT, int n_steps, std::uint64_t seed,
                            bool diffusion_on);

}  // namespace hifibbrg::bridge
