#include "fedspectra/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "fedspectra/errors.hpp"

namespace fedspectra {

namespace {

void require_finite(const std::vector<double>& data, const char* op) {
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw DomainError(std::string(op) + ": non-finite value in result");
        }
    }
}

template <typename Fn>
Tensor zip(const Tensor& x, const Tensor& y, const char* op, Fn fn) {
    require_same_shape(x, y, op);
    std::vector<double> out(x.size());
    auto xs = x.data();
    auto ys = y.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(xs[i], ys[i]);
    require_finite(out, op);
    return Tensor(x.shape(), std::move(out));
}

}  // namespace

std::size_t shape_volume(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    for (auto d : shape_) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_to_string(shape_));
    }
    data_.assign(shape_volume(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto d : shape_) {
        if (d == 0) throw ShapeError("tensor dimensions must be positive: " + shape_to_string(shape_));
    }
    if (data_.size() != shape_volume(shape_)) {
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_to_string(shape_));
    }
    require_finite(data_, "Tensor");
}

Tensor Tensor::from(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
    return Tensor({rows, cols}, std::move(data));
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_volume(shape) != data_.size()) {
        throw ShapeError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
    }
}

Tensor add(const Tensor& x, const Tensor& y) {
    return zip(x, y, "add", [](double a, double b) { return a + b; });
}

Tensor sub(const Tensor& x, const Tensor& y) {
    return zip(x, y, "sub", [](double a, double b) { return a - b; });
}

Tensor scale(double a, const Tensor& x) {
    std::vector<double> out(x.values());
    for (double& v : out) v *= a;
    require_finite(out, "scale");
    return Tensor(x.shape(), std::move(out));
}

Tensor axpy(double a, const Tensor& x, const Tensor& y) {
    return zip(x, y, "axpy", [a](double xv, double yv) { return a * xv + yv; });
}

Tensor mean(std::span<const Tensor> tensors) {
    if (tensors.empty()) throw DomainError("mean: empty tensor list");
    std::vector<double> acc(tensors.front().size(), 0.0);
    for (const auto& t : tensors) {
        require_same_shape(tensors.front(), t, "mean");
        auto d = t.data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
    }
    const double inv = 1.0 / static_cast<double>(tensors.size());
    for (double& v : acc) v *= inv;
    require_finite(acc, "mean");
    return Tensor(tensors.front().shape(), std::move(acc));
}

Tensor weighted_mean(std::span<const Tensor> tensors, std::span<const double> weights) {
    if (tensors.empty()) throw DomainError("weighted_mean: empty tensor list");
    if (weights.size() != tensors.size()) throw DomainError("weighted_mean: one weight per tensor required");
    double total = 0.0;
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("weighted_mean: weights must be positive");
        total += w;
    }
    std::vector<double> acc(tensors.front().size(), 0.0);
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        require_same_shape(tensors.front(), tensors[k], "weighted_mean");
        const double w = weights[k] / total;
        auto d = tensors[k].data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * d[i];
    }
    require_finite(acc, "weighted_mean");
    return Tensor(tensors.front().shape(), std::move(acc));
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Tensor reshape_conv_to_matrix(const Tensor& w) {
    if (w.ndim() != 4) {
        throw ShapeError("reshape_conv_to_matrix: expected 4 dimensions, got " + shape_to_string(w.shape()));
    }
    const std::size_t A = w.dim(0), B = w.dim(1), c1 = w.dim(2), c2 = w.dim(3);
    const std::size_t cols = c2 * B;
    std::vector<double> out(w.size());
    auto src = w.data();
    std::size_t idx = 0;
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < c1; ++i)
                for (std::size_t j = 0; j < c2; ++j) out[(a * c1 + i) * cols + b * c2 + j] = src[idx++];
    return Tensor({c1 * A, cols}, std::move(out));
}

Tensor matrix_to_conv(const Tensor& m, std::size_t out_channels, std::size_t in_channels,
                      std::size_t kernel_rows, std::size_t kernel_cols) {
    if (m.ndim() != 2) throw ShapeError("matrix_to_conv: expected a matrix, got " + shape_to_string(m.shape()));
    const std::size_t A = out_channels, B = in_channels, c1 = kernel_rows, c2 = kernel_cols;
    if (A == 0 || B == 0 || c1 == 0 || c2 == 0 || m.dim(0) != A * c1 || m.dim(1) != B * c2) {
        throw ShapeError("matrix_to_conv: matrix " + shape_to_string(m.shape()) + " is not divisible into " +
                         shape_to_string({A, B, c1, c2}));
    }
    const std::size_t cols = m.dim(1);
    std::vector<double> out(m.size());
    auto src = m.data();
    std::size_t idx = 0;
    for (std::size_t a = 0; a < A; ++a)
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t i = 0; i < c1; ++i)
                for (std::size_t j = 0; j < c2; ++j) out[idx++] = src[(a * c1 + i) * cols + b * c2 + j];
    return Tensor({A, B, c1, c2}, std::move(out));
}

const char* to_string(ParamKind kind) {
    switch (kind) {
        case ParamKind::Conv4d: return "conv4d";
        case ParamKind::Matrix2d: return "matrix2d";
        case ParamKind::Vector1d: return "vector1d";
    }
    return "?";
}

ParamKind param_kind_from_string(const std::string& s) {
    if (s == "conv4d") return ParamKind::Conv4d;
    if (s == "matrix2d") return ParamKind::Matrix2d;
    if (s == "vector1d") return ParamKind::Vector1d;
    throw IngestionError("unknown parameter kind '" + s + "'");
}

void ParameterSet::add(std::string name, Tensor tensor, ParamKind kind, bool is_batchnorm) {
    add(ParamEntry{std::move(name), std::move(tensor), kind, is_batchnorm});
}

void ParameterSet::add(ParamEntry entry) {
    if (find(entry.name) != nullptr) throw CongruenceError("duplicate parameter name '" + entry.name + "'");
    const std::size_t want = entry.kind == ParamKind::Conv4d ? 4 : entry.kind == ParamKind::Matrix2d ? 2 : 1;
    if (entry.tensor.ndim() != want) {
        throw ShapeError("parameter '" + entry.name + "' of kind " + to_string(entry.kind) + " has shape " +
                         shape_to_string(entry.tensor.shape()));
    }
    entries_.push_back(std::move(entry));
}

std::size_t ParameterSet::total_values() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
}

const ParamEntry* ParameterSet::find(const std::string& name) const {
    auto it = std::find_if(entries_.begin(), entries_.end(), [&](const ParamEntry& e) { return e.name == name; });
    return it == entries_.end() ? nullptr : &*it;
}

namespace {

std::string first_mismatch(const ParameterSet& a, const ParameterSet& b) {
    if (a.size() != b.size()) {
        return "entry count " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a[i];
        const auto& y = b[i];
        if (x.name != y.name) return "entry " + std::to_string(i) + " name '" + x.name + "' vs '" + y.name + "'";
        if (x.kind != y.kind) return "entry '" + x.name + "' kind differs";
        if (x.tensor.shape() != y.tensor.shape()) {
            return "entry '" + x.name + "' shape " + shape_to_string(x.tensor.shape()) + " vs " +
                   shape_to_string(y.tensor.shape());
        }
    }
    return {};
}

}  // namespace

bool congruent(const ParameterSet& a, const ParameterSet& b) { return first_mismatch(a, b).empty(); }

void require_congruent(const ParameterSet& a, const ParameterSet& b) {
    auto why = first_mismatch(a, b);
    if (!why.empty()) throw CongruenceError("parameter sets are not congruent: " + why);
}

double max_abs_diff(const ParameterSet& a, const ParameterSet& b) {
    require_congruent(a, b);
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_abs_diff(a[i].tensor, b[i].tensor));
    return m;
}

}  // namespace fedspectra
