#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hifibbrg {

// All tensors are rank-4 (batch, channels, height, width); scalars use (1,1,1,1).
struct Shape {
    int n = 1, c = 1, h = 1, w = 1;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0);
    static Tensor scalar(double v);

    Shape shape;
    std::vector<double> data;

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    double& at(int n, int c, int y, int x);
    double at(int n, int c, int y, int x) const;

    double item() const;  // requires numel == 1
    bool all_finite() const;
    double min() const;
    double max() const;
    double mean() const;
};

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(double k, const Tensor& a);

// Deterministic RNG with a fully serializable state. normal() is Box-Muller on
// top of mt19937_64, so identical seeds give identical streams on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    double uniform();                  // [0, 1)
    double normal();                   // standard normal
    int uniform_int(int lo, int hi);   // inclusive range
    Tensor normal_tensor(const Shape& s);
    std::vector<std::size_t> permutation(std::size_t count);

    std::string serialize() const;
    void deserialize(const std::string& s);

private:
    std::mt19937_64 eng_;
};

}  // namespace hifibbrg
