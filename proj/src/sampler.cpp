#include "hifibbrg/sampler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hifibbrg::sample {

Tensor sample_one_step(const Tensor& x_T, models::EpsilonModel& eps_net,
                       const bridge::ScheduleParams& sched) {
    if (!x_T.all_finite()) throw std::invalid_argument("sample_one_step: non-finite input");
    ag::Var x = ag::constant(x_T);
    ag::Var pred = eps_net.forward(x, x, sched.total_steps, sched.total_steps);
    return x_T - pred->value;
}

std::pair<Tensor, TrajectoryRecord> sample_multi_step(const SampleRequest& req,
                                                      models::EpsilonModel& eps_net,
                                                      const bridge::ScheduleParams& sched,
                                                      int max_recorded) {
    int T = sched.total_steps;
    if (req.n_steps < 1 || req.n_steps > T) {
        throw std::invalid_argument("sample_multi_step: n_steps must lie in [1, T]");
    }
    if (req.trials < 1) throw std::invalid_argument("sample_multi_step: trials must be >= 1");

    // uniform partition of {T, ..., 0}
    std::vector<int> grid(req.n_steps + 1);
    for (int k = 0; k <= req.n_steps; ++k) {
        grid[k] = static_cast<int>(std::llround(static_cast<double>(T) *
                                                (req.n_steps - k) / req.n_steps));
    }

    int record_stride = std::max(1, (req.n_steps + max_recorded - 1) / max_recorded);

    TrajectoryRecord rec;
    std::vector<Tensor> finals;
    for (int trial = 0; trial < req.trials; ++trial) {
        Rng rng(req.seed + static_cast<std::uint64_t>(trial));
        Tensor x = req.x_T;
        std::vector<std::pair<int, Tensor>> states;
        Tensor x0_hat;
        for (int k = 1; k <= req.n_steps; ++k) {
            int t_prev = grid[k - 1];
            int t_next = grid[k];
            ag::Var xv = ag::constant(x);
            ag::Var cond = ag::constant(req.x_T);
            ag::Var pred = eps_net.forward(xv, cond, t_prev, T);
            x0_hat = x - pred->value;
            if (t_next == 0) {
                x = x0_hat;
            } else {
                double s = sched.unit_time(t_next);
                double b = bridge::noise_scale(s);
                Tensor next{x.shape};
                if (req.stochastic) {
                    Tensor noise = rng.normal_tensor(x.shape);
                    for (std::size_t i = 0; i < next.size(); ++i) {
                        next[i] = (1.0 - s) * x0_hat[i] + s * req.x_T[i] + b * noise[i];
                    }
                } else {
                    for (std::size_t i = 0; i < next.size(); ++i) {
                        next[i] = (1.0 - s) * x0_hat[i] + s * req.x_T[i];
                    }
                }
                x = std::move(next);
            }
            if (!x.all_finite()) {
                throw std::runtime_error("sample_multi_step: non-finite state at step t=" +
                                         std::to_string(t_next));
            }
            if (k % record_stride == 0 || k == req.n_steps) states.emplace_back(t_next, x);
        }
        finals.push_back(x);
        rec.trials.push_back(std::move(states));
    }

    if (req.trials >= 2) {
        for (std::size_t si = 0; si < rec.trials[0].size(); ++si) {
            std::vector<Tensor> at_step;
            at_step.reserve(req.trials);
            for (const auto& tr : rec.trials) at_step.push_back(tr[si].second);
            rec.std_maps.emplace_back(rec.trials[0][si].first, trajectory_std(at_step).first);
        }
        auto [map, mean] = trajectory_std(finals);
        rec.final_std_map = std::move(map);
        rec.mean_std = mean;
    } else {
        rec.final_std_map = Tensor{req.x_T.shape};
    }
    return {finals.front(), std::move(rec)};
}

std::pair<Tensor, double> trajectory_std(const std::vector<Tensor>& outputs) {
    if (outputs.size() < 2) throw std::invalid_argument("trajectory_std: need at least 2 trials");
    const Shape& s = outputs[0].shape;
    for (const Tensor& t : outputs) {
        if (!(t.shape == s)) throw std::invalid_argument("trajectory_std: shape mismatch");
    }
    double n = static_cast<double>(outputs.size());
    Tensor map{s};
    for (std::size_t i = 0; i < map.size(); ++i) {
        // deviations from the first trial keep identical trials at exactly zero
        double base = outputs[0][i];
        double mean = 0.0;
        for (const Tensor& t : outputs) mean += t[i] - base;
        mean = base + mean / n;
        double ss = 0.0;
        for (const Tensor& t : outputs) {
            double d = t[i] - mean;
            ss += d * d;
        }
        map[i] = std::sqrt(ss / (n - 1.0));
    }
    return {map, map.mean()};
}

}  // namespace hifibbrg::sample
