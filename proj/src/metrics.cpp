#include "hifibbrg/metrics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "hifibbrg/sampler.hpp"

namespace hifibbrg::metrics {

double psnr(const Tensor& a, const Tensor& b, double data_range) {
    if (!(a.shape == b.shape)) {
        throw std::invalid_argument("psnr: shape mismatch " + a.shape.str() + " vs " +
                                    b.shape.str());
    }
    if (data_range <= 0.0) throw std::invalid_argument("psnr: data_range must be > 0");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(data_range * data_range / mse));
}

double ssim(const Tensor& a, const Tensor& b, const SsimOptions& opt) {
    if (!(a.shape == b.shape)) {
        throw std::invalid_argument("ssim: shape mismatch " + a.shape.str() + " vs " +
                                    b.shape.str());
    }
    const Shape& s = a.shape;
    if (s.h < opt.window || s.w < opt.window) {
        throw std::invalid_argument("ssim: image " + s.str() + " smaller than window " +
                                    std::to_string(opt.window));
    }
    // window weights
    std::vector<double> wts(static_cast<std::size_t>(opt.window) * opt.window);
    if (opt.sigma > 0.0) {
        double sum = 0.0;
        int r = opt.window / 2;
        for (int i = 0; i < opt.window; ++i)
            for (int j = 0; j < opt.window; ++j) {
                double dy = i - r, dx = j - r;
                double v = std::exp(-0.5 * (dx * dx + dy * dy) / (opt.sigma * opt.sigma));
                wts[i * opt.window + j] = v;
                sum += v;
            }
        for (double& v : wts) v /= sum;
    } else {
        double v = 1.0 / static_cast<double>(wts.size());
        for (double& w : wts) w = v;
    }

    double c1 = (opt.k1 * opt.data_range) * (opt.k1 * opt.data_range);
    double c2 = (opt.k2 * opt.data_range) * (opt.k2 * opt.data_range);

    double acc = 0.0;
    std::size_t count = 0;
    for (int n = 0; n < s.n; ++n) {
        for (int c = 0; c < s.c; ++c) {
            for (int y = 0; y + opt.window <= s.h; ++y) {
                for (int x = 0; x + opt.window <= s.w; ++x) {
                    double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
                    for (int i = 0; i < opt.window; ++i)
                        for (int j = 0; j < opt.window; ++j) {
                            double w = wts[i * opt.window + j];
                            double va = a.at(n, c, y + i, x + j);
                            double vb = b.at(n, c, y + i, x + j);
                            mu_a += w * va;
                            mu_b += w * vb;
                            aa += w * va * va;
                            bb += w * vb * vb;
                            ab += w * va * vb;
                        }
                    double var_a = aa - mu_a * mu_a;
                    double var_b = bb - mu_b * mu_b;
                    double cov = ab - mu_a * mu_b;
                    double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
                    double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                    acc += num / den;
                    ++count;
                }
            }
        }
    }
    return acc / static_cast<double>(count);
}

double determinism_std(const std::vector<Tensor>& outputs) {
    return sample::trajectory_std(outputs).second;
}

void MetricReport::validate() const {
    std::set<std::pair<std::string, int>> keys;
    for (const auto& r : rows) {
        if (!keys.insert({r.variant, r.sampling_steps}).second) {
            throw std::logic_error("MetricReport: duplicate row (" + r.variant + ", " +
                                   std::to_string(r.sampling_steps) + ")");
        }
        if (!std::isfinite(r.psnr) || r.psnr > kPsnrCapDb) {
            throw std::logic_error("MetricReport: psnr out of range for " + r.variant);
        }
        if (r.ssim < -1.0 || r.ssim > 1.0) {
            throw std::logic_error("MetricReport: ssim outside [-1, 1] for " + r.variant);
        }
        if (r.std_dev < 0.0) throw std::logic_error("MetricReport: negative std for " + r.variant);
    }
}

void emit_report_csv(const MetricReport& report, const std::string& path) {
    report.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_report_csv: cannot open " + path);
    out << "model,steps,lpips,psnr,ssim,std\n";
    out.precision(6);
    out.setf(std::ios::fixed);
    for (const auto& r : report.rows) {
        out << r.variant << "," << r.sampling_steps << ",";
        if (r.lpips) {
            out << *r.lpips;
        } else {
            out << "-";
        }
        out << "," << r.psnr << "," << r.ssim << "," << r.std_dev << "\n";
    }
    if (!out) throw std::runtime_error("emit_report_csv: write failure on " + path);
}

void emit_report_json(const MetricReport& report, const std::string& path) {
    report.validate();
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row{{"model", r.variant},
                           {"steps", r.sampling_steps},
                           {"psnr", r.psnr},
                           {"ssim", r.ssim},
                           {"std", r.std_dev}};
        if (r.lpips) {
            row["lpips"] = *r.lpips;
        } else {
            row["lpips"] = nullptr;
        }
        rows.push_back(row);
    }
    nlohmann::json doc{{"dataset_id", report.dataset_id},
                       {"seed", report.seed},
                       {"config_hash", report.config_hash},
                       {"rows", rows}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_report_json: cannot open " + path);
    out << doc.dump(2) << "\n";
}

MetricReport read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_report_json: cannot open " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    MetricReport report;
    report.dataset_id = doc.at("dataset_id").get<std::string>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.config_hash = doc.at("config_hash").get<std::string>();
    for (const auto& row : doc.at("rows")) {
        MetricRow r;
        r.variant = row.at("model").get<std::string>();
        r.sampling_steps = row.at("steps").get<int>();
        if (!row.at("lpips").is_null()) r.lpips = row.at("lpips").get<double>();
        r.psnr = row.at("psnr").get<double>();
        r.ssim = row.at("ssim").get<double>();
        r.std_dev = row.at("std").get<double>();
        report.rows.push_back(r);
    }
    report.validate();
    return report;
}

}  // namespace hifibbrg::metrics
