#pragma once

#include <string>
#include <vector>

#include "hifibbrg/autograd.hpp"
#include "hifibbrg/tensor.hpp"

namespace hifibbrg::nn {

struct Param {
    std::string name;
    ag::Var var;
};

// Flat, name-addressed registry of trainable tensors. One store per model;
// names are stable so checkpoints can restore by name.
class ParamStore {
public:
    ag::Var create(const std::string& name, Tensor init);
    ag::Var find(const std::string& name) const;  // throws if absent

    std::vector<Param>& items() { return items_; }
    const std::vector<Param>& items() const { return items_; }
    std::size_t total_count() const;  // total scalar parameter count
    void zero_grad();

private:
    std::vector<Param> items_;
};

// Largest of {8, 4, 1} that divides the channel count.
int pick_groups(int channels);

class Conv2d {
public:
    // He-style init scaled by fan-in; zero_init forces w = b = 0 (used for the
    // final projection of the bridge predictor).
    Conv2d(ParamStore& store, const std::string& prefix, int in_ch, int out_ch, int kernel,
           int stride, int pad, Rng& rng, bool zero_init = false);
    ag::Var operator()(const ag::Var& x) const;

private:
    ag::Var w_, b_;
    int stride_, pad_;
};

class GroupNorm {
public:
    GroupNorm(ParamStore& store, const std::string& prefix, int channels);
    ag::Var operator()(const ag::Var& x) const;

private:
    ag::Var gamma_, beta_;
    int groups_;
};

// Sinusoidal embedding of unit time s, shape (batch, dim, 1, 1); same value
// broadcast to every batch row.
Tensor sinusoidal_embedding(double s, int dim, int batch);

}  // namespace hifibbrg::nn
