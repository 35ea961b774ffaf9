#include "hifibbrg/bridge.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hifibbrg::bridge {

ScheduleParams::ScheduleParams(int T) : total_steps(T) {
    if (T < 1) throw std::invalid_argument("ScheduleParams: total_steps must be >= 1");
}

double ScheduleParams::unit_time(int t) const {
    if (t < 0 || t > total_steps) {
        throw std::out_of_range("ScheduleParams: step " + std::to_string(t) + " outside [0, " +
                                std::to_string(total_steps) + "]");
    }
    return static_cast<double>(t) / total_steps;
}

double noise_scale(double s) {
    if (s < 0.0 || s > 1.0) {
        throw std::domain_error("noise_scale: s = " + std::to_string(s) + " outside [0, 1]");
    }
    if (s == 0.0 || s == 1.0) return 0.0;
    double u = 1.0 - s;
    return 2.0 * u * std::sqrt(-std::log(u));
}

static void check_triplet(const Tensor& x0, const Tensor& xT, const Tensor& eps, const char* op) {
    if (!(x0.shape == xT.shape) || !(x0.shape == eps.shape)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + x0.shape.str() + " / " +
                                    xT.shape.str() + " / " + eps.shape.str());
    }
}

Tensor forward_sample(const Tensor& x0, const Tensor& xT, int t, const Tensor& eps,
                      const ScheduleParams& sched) {
    check_triplet(x0, xT, eps, "forward_sample");
    if (t == 0) return x0;
    if (t == sched.total_steps) return xT;
    double s = sched.unit_time(t);
    double b = noise_scale(s);
    Tensor out{x0.shape};
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = s * xT[i] + (1.0 - s) * x0[i] + b * eps[i];
    }
    return out;
}

Tensor bridge_target(const Tensor& x0, const Tensor& xT, int t, const Tensor& eps,
                     const ScheduleParams& sched) {
    Tensor xt = forward_sample(x0, xT, t, eps, sched);
    return xt - x0;
}

NoisePath simulate_sde_path(const Tensor& x0, const Tensor& xT, int n_steps, std::uint64_t seed,
                            bool diffusion_on) {
    if (n_steps < 2) throw std::invalid_argument("simulate_sde_path: n_steps must be >= 2");
    if (!(x0.shape == xT.shape)) {
        throw std::invalid_argument("simulate_sde_path: shape mismatch " + x0.shape.str() + " vs " +
                                    xT.shape.str());
    }
    Rng rng(seed);
    double ds = 1.0 / n_steps;
    double sqrt_ds = std::sqrt(ds);

    NoisePath path;
    path.seed = seed;
    path.states.reserve(n_steps + 1);
    path.states.push_back({x0, 0});

    Tensor x = x0;
    for (int k = 0; k < n_steps - 1; ++k) {
        double s = static_cast<double>(k) * ds;
        double drift_gain = ds / (1.0 - s);
        double diff = diffusion_on ? 2.0 * std::sqrt(1.0 - s) * sqrt_ds : 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double v = x[i] - drift_gain * (x[i] - xT[i]);
            if (diffusion_on) v += diff * rng.normal();
            x[i] = v;
            if (!std::isfinite(v)) {
                throw std::runtime_error("simulate_sde_path: non-finite state at step " +
                                         std::to_string(k + 1));
            }
        }
        path.states.push_back({x, k + 1});
    }
    // last step would divide by 1-s = 0; snap to the pinned endpoint
    path.states.push_back({xT, n_steps});
    return path;
}

}  // namespace hifibbrg::bridge
