#pragma once

#include "hifibbrg/autograd.hpp"

namespace hifibbrg::losses {

enum class NormKind { L1, L2 };

struct LossRecord {
    double l_diff = 0.0;
    double l_fidelity = 0.0;
    double l_adv_d = 0.0;
    double l_adv_g = 0.0;
    double l_total_gen = 0.0;
};

// mean |target - pred| (or squared) with target = x_t - x_0
ag::Var diffusion_loss(const ag::Var& pred, const Tensor& x_t, const Tensor& x_0,
                       NormKind norm = NormKind::L1);
double diffusion_loss_value(const Tensor& pred, const Tensor& x_t, const Tensor& x_0,
                            NormKind norm = NormKind::L1);

// mean |x_T - xT_hat| (or squared)
ag::Var fidelity_loss(const Tensor& x_T, const ag::Var& xT_hat, NormKind norm = NormKind::L1);
double fidelity_loss_value(const Tensor& x_T, const Tensor& xT_hat, NormKind norm = NormKind::L1);

// mean over patch positions of -[log(1 - sigmoid(d_f)) + log sigmoid(d_r)],
// evaluated through softplus so extreme logits stay finite
ag::Var discriminator_loss(const ag::Var& d_f, const ag::Var& d_r);
double discriminator_loss_value(const Tensor& d_f, const Tensor& d_r);

// non-saturating generator objective: mean -log sigmoid(d_f)
ag::Var generator_adversarial_loss(const ag::Var& d_f);
double generator_adversarial_loss_value(const Tensor& d_f);

// l_diff + lambda * l_fidelity + l_adv_g
ag::Var total_generator_loss(const ag::Var& l_diff, const ag::Var& l_fidelity,
                             const ag::Var& l_adv_g, double lambda);
double total_generator_loss_value(double l_diff, double l_fidelity, double l_adv_g, double lambda);

}  // namespace hifibbrg::losses
