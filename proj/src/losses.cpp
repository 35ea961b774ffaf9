#include "hifibbrg/losses.hpp"

#include <stdexcept>

namespace hifibbrg::losses {

static void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) {
        throw std::invalid_argument(std::string("losses: non-finite values in ") + what);
    }
}

static ag::Var norm_reduce(const ag::Var& a, const ag::Var& b, NormKind norm) {
    return norm == NormKind::L1 ? ag::mean_abs_diff(a, b) : ag::mean_sq_diff(a, b);
}

ag::Var diffusion_loss(const ag::Var& pred, const Tensor& x_t, const Tensor& x_0, NormKind norm) {
    require_finite(x_t, "x_t");
    require_finite(x_0, "x_0");
    return norm_reduce(ag::constant(x_t - x_0), pred, norm);
}

double diffusion_loss_value(const Tensor& pred, const Tensor& x_t, const Tensor& x_0,
                            NormKind norm) {
    require_finite(pred, "pred");
    return diffusion_loss(ag::constant(pred), x_t, x_0, norm)->value.item();
}

ag::Var fidelity_loss(const Tensor& x_T, const ag::Var& xT_hat, NormKind norm) {
    require_finite(x_T, "x_T");
    return norm_reduce(ag::constant(x_T), xT_hat, norm);
}

double fidelity_loss_value(const Tensor& x_T, const Tensor& xT_hat, NormKind norm) {
    require_finite(xT_hat, "xT_hat");
    return fidelity_loss(x_T, ag::constant(xT_hat), norm)->value.item();
}

ag::Var discriminator_loss(const ag::Var& d_f, const ag::Var& d_r) {
    require_finite(d_f->value, "fake logits");
    require_finite(d_r->value, "real logits");
    // -log(1 - sigmoid(x)) = softplus(x), -log sigmoid(x) = softplus(-x)
    return ag::add(ag::mean_softplus(d_f), ag::mean_softplus_neg(d_r));
}

double discriminator_loss_value(const Tensor& d_f, const Tensor& d_r) {
    return discriminator_loss(ag::constant(d_f), ag::constant(d_r))->value.item();
}

ag::Var generator_adversarial_loss(const ag::Var& d_f) {
    require_finite(d_f->value, "fake logits");
    return ag::mean_softplus_neg(d_f);
}

double generator_adversarial_loss_value(const Tensor& d_f) {
    return generator_adversarial_loss(ag::constant(d_f))->value.item();
}

ag::Var total_generator_loss(const ag::Var& l_diff, const ag::Var& l_fidelity,
                             const ag::Var& l_adv_g, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("total_generator_loss: lambda must be >= 0");
    return ag::add(ag::add(l_diff, ag::scale(l_fidelity, lambda)), l_adv_g);
}

double total_generator_loss_value(double l_diff, double l_fidelity, double l_adv_g, double lambda) {
    return total_generator_loss(ag::constant(Tensor::scalar(l_diff)),
                                ag::constant(Tensor::scalar(l_fidelity)),
                                ag::constant(Tensor::scalar(l_adv_g)), lambda)
        ->value.item();
}

}  // namespace hifibbrg::losses
