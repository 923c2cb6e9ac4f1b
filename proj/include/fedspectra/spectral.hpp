#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedspectra/fft.hpp"
#include "fedspectra/tensor.hpp"

namespace fedspectra {

/// Boolean selector over unshifted DFT bins. DC sits at (0,0); negative
/// frequencies wrap to the high end of each axis.
class FrequencyMask {
public:
    FrequencyMask(std::size_t rows, std::size_t cols);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool test(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
    void set(std::size_t r, std::size_t c, bool on = true) { bits_[r * cols_ + c] = on ? 1 : 0; }
    std::size_t count() const noexcept;
    /// bits[a,b] == bits[-a mod rows, -b mod cols] for every bin.
    bool conjugate_symmetric() const noexcept;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<unsigned char> bits_;
};

/// Low-frequency band: |a| <= floor(s*rows), |b| <= floor(s*cols), wrapped.
/// Requires 0 < s < 0.5.
FrequencyMask build_mask(std::size_t rows, std::size_t cols, double s);

/// Linear threshold ramp from s0 at epoch 0 to s1 at total_epochs.
struct CfaSchedule {
    double s0 = 0.26;
    double s1 = 0.55;
    int total_epochs = 300;

    void validate() const;
};

double schedule_threshold(const CfaSchedule& schedule, double epoch);

/// Largest threshold build_mask accepts; scheduled values at or above 0.5
/// saturate here.
double mask_threshold(double scheduled);

enum class DomainMode { Complex, AmplitudePhase };

const char* to_string(DomainMode mode);
DomainMode domain_mode_from_string(const std::string& s);

using MaskFactory = std::function<FrequencyMask(std::size_t rows, std::size_t cols)>;

/// Cumulative Fourier aggregation. For every matrix-shaped entry (conv kernels
/// are reshaped first) the masked band of each client's spectrum is replaced by
/// the cross-client mean while the unmasked bins stay client-specific. 1-D
/// entries are averaged. Returns one personalised set per input, in order.
std::vector<ParameterSet> cfa_aggregate(std::span<const ParameterSet> clients, double s,
                                        DomainMode mode = DomainMode::Complex);
/// Single-threaded reference path; bit-identical to cfa_aggregate.
std::vector<ParameterSet> cfa_aggregate_serial(std::span<const ParameterSet> clients, double s,
                                               DomainMode mode = DomainMode::Complex);

/// Same rule with an arbitrary mask per matrix shape.
std::vector<ParameterSet> cfa_aggregate_with_mask(std::span<const ParameterSet> clients, const MaskFactory& masks,
                                                  DomainMode mode, bool parallel);

namespace testing_hooks {
/// Every bin set. Not reachable through build_mask; used to check the FedAvg limit.
FrequencyMask full_mask(std::size_t rows, std::size_t cols);
/// Only the DC bin set.
FrequencyMask dc_mask(std::size_t rows, std::size_t cols);
}  // namespace testing_hooks

}  // namespace fedspectra
