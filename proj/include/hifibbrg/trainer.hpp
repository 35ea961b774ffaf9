#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hifibbrg/bridge.hpp"
#include "hifibbrg/data.hpp"
#include "hifibbrg/losses.hpp"
#include "hifibbrg/models.hpp"

namespace hifibbrg::train {

struct TrainConfig {
    int total_steps = 1000;          // T
    double lambda_fidelity = 1.0;    // lambda of the total objective
    double lr_epsilon = 2e-5;
    double lr_generator = 2e-5;
    double lr_discriminator = 2e-4;
    int batch_size = 8;
    int epochs = 1;
    std::uint64_t seed = 0;
    bool use_condition = true;
    bool use_reconstruction = true;
    bool use_adversarial = true;
    losses::NormKind norm_kind = losses::NormKind::L1;
    double lr_decay = 1.0;           // per-epoch multiplicative decay of all lrs
    bool per_sample_t = false;       // default: one t drawn per batch
    int checkpoint_every = 0;        // epochs between periodic checkpoints, 0 = final only
    int early_stop_patience = 0;     // 0 disables the validation-PSNR early stop

    void validate() const;
    std::map<std::string, std::string> to_map() const;
    static TrainConfig from_map(const std::map<std::string, std::string>& m);
};

// Everything needed to rebuild the model bundle deterministically on resume.
struct ModelSpec {
    models::BackboneConfig backbone;
    int image_channels = 1;
    bool affine_toy = false;  // scalar affine epsilon model instead of the UNet

    std::map<std::string, std::string> to_map() const;
    static ModelSpec from_map(const std::map<std::string, std::string>& m);
};

class Adam {
public:
    explicit Adam(double lr);

    void step(nn::ParamStore& params);
    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }

    struct Slot {
        Tensor m, v;
    };
    std::map<std::string, Slot>& slots() { return slots_; }
    std::int64_t& step_count() { return t_; }

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::map<std::string, Slot> slots_;
    std::int64_t t_ = 0;
};

struct FitResult {
    std::vector<losses::LossRecord> history;
    std::vector<std::string> checkpoint_paths;
    int epochs_run = 0;
};

class Trainer {
public:
    Trainer(const ModelSpec& spec, const TrainConfig& cfg);
    static Trainer from_checkpoint(const std::string& path);

    // One Algorithm-1 iteration on a batch: forward sampling, diffusion loss,
    // optional reconstruction + adversarial updates, Adam parameter updates.
    losses::LossRecord train_step(const Tensor& x_T, const Tensor& x_0);

    // Runs the epoch loop over the dataset. out_dir may be empty to skip all
    // file output. validation enables the optional PSNR-plateau early stop.
    FitResult fit(const data::PairedDataset& ds, const std::string& out_dir = "",
                  const data::PairedDataset* validation = nullptr);

    void save(const std::string& path) const;

    models::ModelBundle& bundle() { return bundle_; }
    const TrainConfig& config() const { return cfg_; }
    const ModelSpec& model_spec() const { return spec_; }
    const std::vector<losses::LossRecord>& history() const { return history_; }
    int next_epoch() const { return next_epoch_; }

private:
    losses::LossRecord step_with_t(const Tensor& x_T, const Tensor& x_0, int t,
                                   const Tensor& eps);
    double validation_psnr(const data::PairedDataset& val);

    ModelSpec spec_;
    TrainConfig cfg_;
    models::ModelBundle bundle_;
    Adam opt_eps_, opt_gen_, opt_disc_;
    Rng rng_;
    std::vector<losses::LossRecord> history_;
    int next_epoch_ = 0;
};

void write_history_csv(const std::string& path, const std::vector<losses::LossRecord>& history);

// Versioned binary checkpoint container with a CRC32 trailer; load verifies
// the checksum and format version before touching any state.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;
    std::map<std::string, std::string> config;
    int next_epoch = 0;
    std::vector<std::pair<std::string, Tensor>> params;  // names prefixed eps/ gen/ disc/
    struct OptBlob {
        std::int64_t t = 0;
        std::vector<std::pair<std::string, Adam::Slot>> slots;
    } opt_eps, opt_gen, opt_disc;
    std::string rng_state;
    std::vector<losses::LossRecord> history;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hifibbrg::train
