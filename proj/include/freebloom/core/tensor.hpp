#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace freebloom {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major block of doubles with an explicit shape.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);  // zero-filled
    Tensor(Shape shape, std::vector<double> values);

    static Tensor filled(Shape shape, double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }

    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> values_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// a*x + b*y
Tensor axpby(double a, const Tensor& x, double b, const Tensor& y);
Tensor scaled(const Tensor& x, double a);

double dot(const Tensor& a, const Tensor& b);
double squared_norm(const Tensor& x);
double norm(const Tensor& x);
double squared_distance(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

} // namespace freebloom
