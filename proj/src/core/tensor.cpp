#include "freebloom/core/tensor.hpp"

#include "freebloom/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace freebloom {

std::size_t shape_size(const Shape& shape) {
    if (shape.empty()) {
        return 0;
    }
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

namespace {

void validate_shape(const Shape& shape) {
    if (shape.empty()) {
        throw InvalidArgument("tensor shape must be non-empty");
    }
    for (auto dim : shape) {
        if (dim == 0) {
            throw InvalidArgument("tensor dimensions must be positive, got " + shape_to_string(shape));
        }
    }
}

} // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    values_.assign(shape_size(shape_), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    validate_shape(shape_);
    if (values_.size() != shape_size(shape_)) {
        throw InvalidArgument("value count " + std::to_string(values_.size()) +
                              " does not match shape " + shape_to_string(shape_));
    }
}

Tensor Tensor::filled(Shape shape, double value) {
    Tensor t(std::move(shape));
    std::fill(t.values_.begin(), t.values_.end(), value);
    return t;
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw InvalidArgument(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) +
                              " vs " + shape_to_string(b.shape()));
    }
}

Tensor axpby(double a, const Tensor& x, double b, const Tensor& y) {
    require_same_shape(x, y, "axpby");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = a * x[i] + b * y[i];
    }
    return out;
}

Tensor scaled(const Tensor& x, double a) {
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = a * x[i];
    }
    return out;
}

double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += a[i] * b[i];
    }
    return sum;
}

double squared_norm(const Tensor& x) {
    double sum = 0.0;
    for (double v : x.values()) {
        sum += v * v;
    }
    return sum;
}

double norm(const Tensor& x) { return std::sqrt(squared_norm(x)); }

double squared_distance(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "squared_distance");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

} // namespace freebloom
