#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hifibbrg/tensor.hpp"

namespace hifibbrg::data {

// Index-aligned pairs (source domain A = X_T, target domain B = X_0), every
// image shaped (1, C, H, W) with values in [-1, 1].
struct PairedDataset {
    std::vector<Tensor> source;  // X_T
    std::vector<Tensor> target;  // X_0
    int channels = 1;
    int height = 0;
    int width = 0;
    std::string provenance;

    std::size_t size() const { return source.size(); }
    // Stacks the given indices into batched (x_T, x_0) tensors.
    std::pair<Tensor, Tensor> batch(const std::vector<std::size_t>& idx) const;
    void validate() const;
};

enum class TaskKind { BlurDeblur, EdgeToFill, BiasField };

struct SyntheticTaskSpec {
    TaskKind kind = TaskKind::BlurDeblur;
    int size = 64;
    int n_samples = 16;
    std::uint64_t seed = 0;
    double blur_sigma = 2.0;   // 0 makes blur-deblur the identity task
    double gamma = 1.0;        // contrast warp exponent, 1 = none
    double texture_amp = 0.0;  // fine-grain texture strength on targets, 0 = smooth shapes only
};

TaskKind task_kind_from_string(const std::string& s);
std::string to_string(TaskKind k);

// Deterministic corruption X_0 -> X_T for the given sample index. The dataset
// generator uses exactly this function, so every pair carries its own oracle.
Tensor apply_corruption(const SyntheticTaskSpec& spec, const Tensor& x0,
                        std::uint64_t sample_index);

// Target images are random soft ellipses/rectangles with smooth intensity
// ramps; sources are the corrupted counterparts. Bit-reproducible per seed.
PairedDataset generate_synthetic_pairs(const SyntheticTaskSpec& spec);

// PNG folders with matching filenames, lexicographic order, resized (bilinear)
// to size x size and normalized to [-1, 1].
PairedDataset load_paired_folder(const std::string& path_a, const std::string& path_b, int size);

Tensor normalize(const Tensor& raw, double lo, double hi);
Tensor denormalize(const Tensor& x, double lo, double hi);

struct SplitResult {
    PairedDataset train, val, test;
};
SplitResult split(const PairedDataset& ds, double f_train, double f_val, double f_test,
                  std::uint64_t seed);

// Writes dir/A/NNNNNN.png, dir/B/NNNNNN.png and dir/manifest.json; returns the
// content hash recorded in the manifest.
std::string export_png_pairs(const PairedDataset& ds, const std::string& dir);

void write_png(const std::string& path, const Tensor& img);

// Raw float dump: magic "HBRGRAW1", four int32 dims, int32 dtype code (8 =
// float64), then little-endian payload.
void write_raw(const std::string& path, const Tensor& t);
Tensor read_raw(const std::string& path);

}  // namespace hifibbrg::data
