#include "hifibbrg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hifibbrg {

std::string Shape::str() const {
    std::ostringstream os;
    os << "(" << n << "," << c << "," << h << "," << w << ")";
    return os.str();
}

Tensor::Tensor(Shape s, double fill) : shape(s), data(s.numel(), fill) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
        throw std::invalid_argument("Tensor: non-positive dimension " + s.str());
    }
}

Tensor Tensor::scalar(double v) {
    Tensor t{Shape{1, 1, 1, 1}};
    t.data[0] = v;
    return t;
}

double& Tensor::at(int n, int c, int y, int x) {
    return data[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
}

double Tensor::at(int n, int c, int y, int x) const {
    return data[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
}

double Tensor::item() const {
    if (data.size() != 1) {
        throw std::logic_error("Tensor::item on non-scalar tensor " + shape.str());
    }
    return data[0];
}

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::min() const {
    return *std::min_element(data.begin(), data.end());
}

double Tensor::max() const {
    return *std::max_element(data.begin(), data.end());
}

double Tensor::mean() const {
    if (data.empty()) return 0.0;
    return std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(data.size());
}

static void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!(a.shape == b.shape)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape.str() +
                                    " vs " + b.shape.str());
    }
}

Tensor operator+(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "operator+");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
    return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "operator-");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor operator*(double k, const Tensor& a) {
    Tensor out = a;
    for (double& v : out.data) v *= k;
    return out;
}

Rng::Rng(std::uint64_t seed) : eng_(seed) {}

double Rng::uniform() {
    // 53 random bits -> [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = std::numeric_limits<double>::min();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("Rng::uniform_int: empty range");
    std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
    return lo + static_cast<int>(eng_() % span);
}

Tensor Rng::normal_tensor(const Shape& s) {
    Tensor t{s};
    for (double& v : t.data) v = normal();
    return t;
}

std::vector<std::size_t> Rng::permutation(std::size_t count) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = count; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(eng_() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
}

void Rng::deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (is.fail()) throw std::runtime_error("Rng::deserialize: malformed state");
}

}  // namespace hifibbrg
