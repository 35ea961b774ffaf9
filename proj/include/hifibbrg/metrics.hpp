#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hifibbrg/tensor.hpp"

namespace hifibbrg::metrics {

inline constexpr double kPsnrCapDb = 100.0;

// 10 log10(range^2 / MSE); identical images return the cap value.
double psnr(const Tensor& a, const Tensor& b, double data_range = 2.0);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;      // <= 0 selects a uniform window
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 2.0;
};

// Mean local SSIM over the valid window grid (no padding).
double ssim(const Tensor& a, const Tensor& b, const SsimOptions& opt = {});

// Mean per-pixel sample std across repeated sampling trials.
double determinism_std(const std::vector<Tensor>& outputs);

// Pluggable perceptual metric slot (e.g. LPIPS); absent by default.
using PerceptualMetric = std::function<double(const Tensor&, const Tensor&)>;

struct MetricRow {
    std::string variant;
    int sampling_steps = 1;
    std::optional<double> lpips;
    double psnr = 0.0;
    double ssim = 0.0;
    double std_dev = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> rows;  // uniquely keyed by (variant, steps)
    std::string dataset_id;
    std::uint64_t seed = 0;
    std::string config_hash;

    void validate() const;
};

// Column order mirrors the ablation table: model,steps,lpips,psnr,ssim,std.
// A missing perceptual metric renders as "-".
void emit_report_csv(const MetricReport& report, const std::string& path);
void emit_report_json(const MetricReport& report, const std::string& path);
MetricReport read_report_json(const std::string& path);

}  // namespace hifibbrg::metrics
