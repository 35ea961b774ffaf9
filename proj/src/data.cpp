#include "hifibbrg/data.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace hifibbrg::data {

std::pair<Tensor, Tensor> PairedDataset::batch(const std::vector<std::size_t>& idx) const {
    if (idx.empty()) throw std::invalid_argument("PairedDataset::batch: empty index list");
    Shape s{static_cast<int>(idx.size()), channels, height, width};
    Tensor xt{s}, x0{s};
    std::size_t plane = s.numel() / idx.size();
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= size()) throw std::out_of_range("PairedDataset::batch: index out of range");
        std::copy_n(source[idx[k]].data.data(), plane, &xt.data[k * plane]);
        std::copy_n(target[idx[k]].data.data(), plane, &x0.data[k * plane]);
    }
    return {xt, x0};
}

void PairedDataset::validate() const {
    if (source.size() != target.size()) {
        throw std::logic_error("PairedDataset: source/target count mismatch");
    }
    Shape want{1, channels, height, width};
    for (std::size_t i = 0; i < source.size(); ++i) {
        for (const Tensor* t : {&source[i], &target[i]}) {
            if (!(t->shape == want)) {
                throw std::logic_error("PairedDataset: image " + std::to_string(i) +
                                       " has shape " + t->shape.str());
            }
            if (!t->all_finite() || t->min() < -1.0 || t->max() > 1.0) {
                throw std::logic_error("PairedDataset: image " + std::to_string(i) +
                                       " outside [-1, 1]");
            }
        }
    }
}

TaskKind task_kind_from_string(const std::string& s) {
    if (s == "blur-deblur") return TaskKind::BlurDeblur;
    if (s == "edge-to-fill") return TaskKind::EdgeToFill;
    if (s == "bias-field") return TaskKind::BiasField;
    throw std::invalid_argument("unknown synthetic task kind: " + s);
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::BlurDeblur: return "blur-deblur";
        case TaskKind::EdgeToFill: return "edge-to-fill";
        case TaskKind::BiasField: return "bias-field";
    }
    return "?";
}

namespace {

std::uint64_t sample_seed(std::uint64_t base, std::uint64_t index) {
    return base ^ (0x9E3779B97F4A7C15ull * (index + 1));
}

int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

Tensor gaussian_blur(const Tensor& x, double sigma) {
    if (sigma <= 0.0) return x;
    int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        kernel[i + r] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += kernel[i + r];
    }
    for (double& k : kernel) k /= sum;

    const Shape& s = x.shape;
    Tensor tmp{s}, out{s};
    for (int c = 0; c < s.c; ++c) {
        for (int y = 0; y < s.h; ++y)
            for (int xx = 0; xx < s.w; ++xx) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += kernel[i + r] * x.at(0, c, y, reflect(xx + i, s.w));
                tmp.at(0, c, y, xx) = acc;
            }
        for (int y = 0; y < s.h; ++y)
            for (int xx = 0; xx < s.w; ++xx) {
                double acc = 0.0;
                for (int i = -r; i <= r; ++i) acc += kernel[i + r] * tmp.at(0, c, reflect(y + i, s.h), xx);
                out.at(0, c, y, xx) = acc;
            }
    }
    return out;
}

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

double smoothstep(double e0, double e1, double v) {
    double t = std::clamp((v - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

Tensor draw_soft_shapes(int size, int channels, Rng& rng) {
    Tensor img{Shape{1, channels, size, size}};
    double bg = -0.9 + 0.3 * rng.uniform();
    for (double& v : img.data) v = bg;

    int n_shapes = 2 + rng.uniform_int(0, 2);
    for (int k = 0; k < n_shapes; ++k) {
        bool ellipse = rng.uniform() < 0.5;
        double cx = size * (0.15 + 0.7 * rng.uniform());
        double cy = size * (0.15 + 0.7 * rng.uniform());
        double rx = size * (0.08 + 0.22 * rng.uniform());
        double ry = size * (0.08 + 0.22 * rng.uniform());
        double amp = 0.4 + 1.2 * rng.uniform();
        double ramp_dir = rng.uniform() * 2.0 * M_PI;
        double ramp_gain = 0.4 * rng.uniform();
        double edge = 0.12 + 0.2 * rng.uniform();  // soft edge width, relative
        for (int c = 0; c < channels; ++c) {
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) {
                    double dx = (x - cx) / rx, dy = (y - cy) / ry;
                    double d = ellipse ? std::sqrt(dx * dx + dy * dy)
                                       : std::max(std::abs(dx), std::abs(dy));
                    double mask = 1.0 - smoothstep(1.0 - edge, 1.0 + edge, d);
                    if (mask <= 0.0) continue;
                    double ramp = 1.0 + ramp_gain * ((x - cx) * std::cos(ramp_dir) +
                                                     (y - cy) * std::sin(ramp_dir)) /
                                            size;
                    double& px = img.at(0, c, y, x);
                    px = clamp1(px + amp * ramp * mask);
                }
            }
        }
    }
    return img;
}

// High-frequency grain added to clean targets. Only the sub-pixel band is kept
// (white noise minus its own slight blur), so a blur corruption erases it
// completely and the source carries no information about it.
void add_texture(Tensor& x0, double amp, Rng& rng) {
    Tensor raw{x0.shape};
    for (double& v : raw.data) v = 2.0 * rng.uniform() - 1.0;
    Tensor low = gaussian_blur(raw, 1.2);
    double m = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        double v = raw[i] - low[i];
        raw[i] = v;
        m += v;
        m2 += v * v;
    }
    m /= raw.size();
    m2 /= raw.size();
    double sd = std::sqrt(std::max(1e-12, m2 - m * m));
    for (std::size_t i = 0; i < x0.size(); ++i) {
        x0[i] = clamp1(x0[i] + amp * (raw[i] - m) / sd);
    }
}

}  // namespace

Tensor apply_corruption(const SyntheticTaskSpec& spec, const Tensor& x0,
                        std::uint64_t sample_index) {
    const Shape& s = x0.shape;
    switch (spec.kind) {
        case TaskKind::BlurDeblur: {
            Tensor out = gaussian_blur(x0, spec.blur_sigma);
            if (spec.gamma != 1.0) {
                for (double& v : out.data) {
                    v = (v >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(v), spec.gamma);
                }
            }
            for (double& v : out.data) v = clamp1(v);
            return out;
        }
        case TaskKind::EdgeToFill: {
            // Sobel gradient magnitude on a fixed scale, mapped to [-1, 1]
            Tensor out{s};
            for (int c = 0; c < s.c; ++c)
                for (int y = 0; y < s.h; ++y)
                    for (int x = 0; x < s.w; ++x) {
                        auto px = [&](int yy, int xx) {
                            return x0.at(0, c, reflect(yy, s.h), reflect(xx, s.w));
                        };
                        double gx = px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1) -
                                    px(y - 1, x - 1) - 2 * px(y, x - 1) - px(y + 1, x - 1);
                        double gy = px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1) -
                                    px(y - 1, x - 1) - 2 * px(y - 1, x) - px(y - 1, x + 1);
                        double m = std::sqrt(gx * gx + gy * gy) / 8.0;
                        out.at(0, c, y, x) = clamp1(2.0 * std::min(m, 1.0) - 1.0);
                    }
            return out;
        }
        case TaskKind::BiasField: {
            Rng rng(sample_seed(spec.seed, sample_index));
            double amp = 0.15 + 0.15 * rng.uniform();
            double fx = 1.0 + rng.uniform_int(0, 1);
            double fy = 1.0 + rng.uniform_int(0, 1);
            double px = rng.uniform(), py = rng.uniform();
            Tensor out{s};
            for (int c = 0; c < s.c; ++c)
                for (int y = 0; y < s.h; ++y)
                    for (int x = 0; x < s.w; ++x) {
                        double field = 1.0 + amp * std::sin(2.0 * M_PI * (fx * x / s.w + px)) *
                                                 std::sin(2.0 * M_PI * (fy * y / s.h + py));
                        double v01 = (x0.at(0, c, y, x) + 1.0) * 0.5;
                        out.at(0, c, y, x) = 2.0 * std::clamp(v01 * field, 0.0, 1.0) - 1.0;
                    }
            return out;
        }
    }
    throw std::logic_error("apply_corruption: unhandled kind");
}

PairedDataset generate_synthetic_pairs(const SyntheticTaskSpec& spec) {
    if (spec.n_samples < 1) {
        throw std::invalid_argument("generate_synthetic_pairs: n_samples must be >= 1");
    }
    if (spec.size < 8) throw std::invalid_argument("generate_synthetic_pairs: size must be >= 8");
    if (spec.blur_sigma < 0.0) {
        throw std::invalid_argument("generate_synthetic_pairs: blur_sigma must be >= 0");
    }
    if (spec.texture_amp < 0.0) {
        throw std::invalid_argument("generate_synthetic_pairs: texture_amp must be >= 0");
    }
    PairedDataset ds;
    ds.channels = 1;
    ds.height = ds.width = spec.size;
    ds.provenance = "synthetic:" + to_string(spec.kind) + ":seed=" + std::to_string(spec.seed);
    for (int i = 0; i < spec.n_samples; ++i) {
        Rng rng(sample_seed(spec.seed, static_cast<std::uint64_t>(i)));
        Tensor x0 = draw_soft_shapes(spec.size, 1, rng);
        if (spec.texture_amp > 0.0) add_texture(x0, spec.texture_amp, rng);
        ds.target.push_back(x0);
        ds.source.push_back(apply_corruption(spec, x0, static_cast<std::uint64_t>(i)));
    }
    return ds;
}

namespace {

Tensor mat_to_tensor(const cv::Mat& m) {
    Tensor t{Shape{1, m.channels(), m.rows, m.cols}};
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            for (int c = 0; c < m.channels(); ++c) {
                t.at(0, c, y, x) = m.ptr<double>(y)[x * m.channels() + c];
            }
    return t;
}

}  // namespace

PairedDataset load_paired_folder(const std::string& path_a, const std::string& path_b, int size) {
    for (const std::string& p : {path_a, path_b}) {
        if (!fs::is_directory(p)) throw std::invalid_argument("load_paired_folder: not a directory: " + p);
    }
    auto listing = [](const std::string& dir) {
        static const std::set<std::string> exts{".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"};
        std::set<std::string> names;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (!e.is_regular_file()) continue;
            std::string ext = e.path().extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (exts.count(ext)) names.insert(e.path().filename().string());
        }
        return names;
    };
    std::set<std::string> a = listing(path_a), b = listing(path_b);
    std::vector<std::string> only_a, only_b;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
    if (!only_a.empty() || !only_b.empty()) {
        std::ostringstream os;
        os << "load_paired_folder: unmatched filenames:";
        for (const auto& n : only_a) os << " A/" << n;
        for (const auto& n : only_b) os << " B/" << n;
        throw std::runtime_error(os.str());
    }
    if (a.empty()) throw std::runtime_error("load_paired_folder: no images found");

    PairedDataset ds;
    ds.height = ds.width = size;
    ds.provenance = "folder:" + path_a + "|" + path_b;
    int channels = -1;
    for (const std::string& name : a) {  // std::set iterates lexicographically
        for (int side = 0; side < 2; ++side) {
            fs::path p = fs::path(side == 0 ? path_a : path_b) / name;
            cv::Mat raw = cv::imread(p.string(), cv::IMREAD_UNCHANGED);
            if (raw.empty()) throw std::runtime_error("load_paired_folder: unreadable image " + p.string());
            double hi = raw.depth() == CV_16U ? 65535.0 : 255.0;
            if (channels == -1) channels = raw.channels();
            if (raw.channels() != channels) {
                throw std::runtime_error("load_paired_folder: inconsistent channel count in " +
                                         p.string());
            }
            cv::Mat f;
            raw.convertTo(f, CV_64F);
            cv::Mat resized;
            cv::resize(f, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
            Tensor t = normalize(mat_to_tensor(resized), 0.0, hi);
            for (double& v : t.data) v = clamp1(v);
            (side == 0 ? ds.source : ds.target).push_back(std::move(t));
        }
    }
    ds.channels = channels;
    ds.validate();
    return ds;
}

Tensor normalize(const Tensor& raw, double lo, double hi) {
    if (hi <= lo) throw std::invalid_argument("normalize: hi must exceed lo");
    Tensor out = raw;
    double scale = 2.0 / (hi - lo);
    for (double& v : out.data) v = (v - lo) * scale - 1.0;
    return out;
}

Tensor denormalize(const Tensor& x, double lo, double hi) {
    if (hi <= lo) throw std::invalid_argument("denormalize: hi must exceed lo");
    Tensor out = x;
    double scale = (hi - lo) / 2.0;
    for (double& v : out.data) v = (v + 1.0) * scale + lo;
    return out;
}

SplitResult split(const PairedDataset& ds, double f_train, double f_val, double f_test,
                  std::uint64_t seed) {
    if (f_train < 0 || f_val < 0 || f_test < 0 ||
        std::abs(f_train + f_val + f_test - 1.0) > 1e-9) {
        throw std::invalid_argument("split: fractions must be non-negative and sum to 1");
    }
    Rng rng(seed);
    std::vector<std::size_t> perm = rng.permutation(ds.size());
    std::size_t n = ds.size();
    std::size_t n_train = static_cast<std::size_t>(std::llround(f_train * n));
    std::size_t n_val = static_cast<std::size_t>(std::llround(f_val * n));
    if (n_train + n_val > n) n_val = n - n_train;

    SplitResult r;
    auto fill = [&](PairedDataset& out, std::size_t begin, std::size_t end, const char* tag) {
        out.channels = ds.channels;
        out.height = ds.height;
        out.width = ds.width;
        out.provenance = ds.provenance + ":" + tag;
        for (std::size_t i = begin; i < end; ++i) {
            out.source.push_back(ds.source[perm[i]]);
            out.target.push_back(ds.target[perm[i]]);
        }
    };
    fill(r.train, 0, n_train, "train");
    fill(r.val, n_train, n_train + n_val, "val");
    fill(r.test, n_train + n_val, n, "test");
    return r;
}

void write_png(const std::string& path, const Tensor& img) {
    const Shape& s = img.shape;
    if (s.n != 1 || (s.c != 1 && s.c != 3)) {
        throw std::invalid_argument("write_png: expected (1,{1|3},H,W), got " + s.str());
    }
    cv::Mat m(s.h, s.w, s.c == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
            for (int c = 0; c < s.c; ++c) {
                double v = std::clamp((img.at(0, c, y, x) + 1.0) * 0.5 * 255.0, 0.0, 255.0);
                m.ptr<uchar>(y)[x * s.c + c] = static_cast<uchar>(std::lround(v));
            }
    if (!cv::imwrite(path, m)) throw std::runtime_error("write_png: failed to write " + path);
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace

std::string export_png_pairs(const PairedDataset& ds, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "A");
    fs::create_directories(fs::path(dir) / "B");
    std::uint64_t hash = 0xCBF29CE484222325ull;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        write_png((fs::path(dir) / "A" / name).string(), ds.source[i]);
        write_png((fs::path(dir) / "B" / name).string(), ds.target[i]);
        hash = fnv1a(hash, ds.source[i].data.data(), ds.source[i].size() * sizeof(double));
        hash = fnv1a(hash, ds.target[i].data.data(), ds.target[i].size() * sizeof(double));
    }
    std::ostringstream hs;
    hs << std::hex << hash;

    nlohmann::json manifest{{"provenance", ds.provenance},
                            {"n_pairs", ds.size()},
                            {"channels", ds.channels},
                            {"height", ds.height},
                            {"width", ds.width},
                            {"content_hash", hs.str()}};
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("export_png_pairs: cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
    return hs.str();
}

static constexpr char kRawMagic[8] = {'H', 'B', 'R', 'G', 'R', 'A', 'W', '1'};

void write_raw(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_raw: cannot open " + path);
    out.write(kRawMagic, 8);
    std::int32_t dims[5] = {t.shape.n, t.shape.c, t.shape.h, t.shape.w, 8};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(t.data.data()), t.size() * sizeof(double));
    if (!out) throw std::runtime_error("write_raw: short write to " + path);
}

Tensor read_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_raw: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kRawMagic, 8) != 0) {
        throw std::runtime_error("read_raw: bad magic in " + path);
    }
    std::int32_t dims[5];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || dims[4] != 8) throw std::runtime_error("read_raw: bad header in " + path);
    Tensor t{Shape{dims[0], dims[1], dims[2], dims[3]}};
    in.read(reinterpret_cast<char*>(t.data.data()), t.size() * sizeof(double));
    if (!in) throw std::runtime_error("read_raw: truncated payload in " + path);
    return t;
}

}  // namespace hifibbrg::data
