#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace fedspectra {

using Shape = std::vector<std::size_t>;

std::size_t shape_volume(const Shape& shape);
std::string shape_to_string(const Shape& shape);

/// Dense row-major tensor of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor from(std::initializer_list<double> values);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t ndim() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }

    /// Same data, new shape of equal volume.
    Tensor reshaped(Shape shape) const;

    bool all_finite() const noexcept;
    double max_abs() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

Tensor add(const Tensor& x, const Tensor& y);
Tensor sub(const Tensor& x, const Tensor& y);
Tensor scale(double a, const Tensor& x);
/// a*x + y
Tensor axpy(double a, const Tensor& x, const Tensor& y);
/// Element-wise mean, accumulated in list order.
Tensor mean(std::span<const Tensor> tensors);
/// Weighted element-wise mean; weights are normalised to sum 1.
Tensor weighted_mean(std::span<const Tensor> tensors, std::span<const double> weights);
double max_abs_diff(const Tensor& a, const Tensor& b);

/// [A,B,c1,c2] -> [c1*A, c2*B]; w(a,b,i,j) lands at row a*c1+i, column b*c2+j.
Tensor reshape_conv_to_matrix(const Tensor& w);
/// Inverse of reshape_conv_to_matrix.
Tensor matrix_to_conv(const Tensor& m, std::size_t out_channels, std::size_t in_channels,
                      std::size_t kernel_rows, std::size_t kernel_cols);

enum class ParamKind { Conv4d, Matrix2d, Vector1d };

const char* to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

struct ParamEntry {
    std::string name;
    Tensor tensor;
    ParamKind kind = ParamKind::Vector1d;
    bool is_batchnorm = false;

    friend bool operator==(const ParamEntry&, const ParamEntry&) = default;
};

/// Ordered, uniquely named collection of parameter tensors.
class ParameterSet {
public:
    ParameterSet() = default;

    void add(std::string name, Tensor tensor, ParamKind kind, bool is_batchnorm = false);
    void add(ParamEntry entry);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t total_values() const noexcept;

    const ParamEntry& operator[](std::size_t i) const { return entries_[i]; }
    ParamEntry& operator[](std::size_t i) { return entries_[i]; }
    const ParamEntry* find(const std::string& name) const;

    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }
    auto begin() noexcept { return entries_.begin(); }
    auto end() noexcept { return entries_.end(); }

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::vector<ParamEntry> entries_;
};

bool congruent(const ParameterSet& a, const ParameterSet& b);
/// Throws CongruenceError naming the first mismatch.
void require_congruent(const ParameterSet& a, const ParameterSet& b);
double max_abs_diff(const ParameterSet& a, const ParameterSet& b);

}  // namespace fedspectra
