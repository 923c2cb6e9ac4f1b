#include "fedspectra/spectral.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <algorithm>

#include "fedspectra/errors.hpp"
#include "fedspectra/parallel.hpp"

namespace fedspectra {

FrequencyMask::FrequencyMask(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {
    if (rows == 0 || cols == 0) throw ShapeError("FrequencyMask: empty shape");
}

std::size_t FrequencyMask::count() const noexcept {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
}

bool FrequencyMask::conjugate_symmetric() const noexcept {
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) {
            if (test(r, c) != test((rows_ - r) % rows_, (cols_ - c) % cols_)) return false;
        }
    }
    return true;
}

FrequencyMask build_mask(std::size_t rows, std::size_t cols, double s) {
    if (!(s > 0.0 && s < 0.5)) throw DomainError("build_mask: threshold must lie in (0, 0.5), got " + std::to_string(s));
    FrequencyMask mask(rows, cols);
    const auto hr = static_cast<std::size_t>(std::floor(s * static_cast<double>(rows)));
    const auto hc = static_cast<std::size_t>(std::floor(s * static_cast<double>(cols)));
    // s < 0.5 keeps 2h+1 <= dim, so the wrapped ranges never overlap.
    for (std::size_t dr = 0; dr <= hr; ++dr) {
        for (std::size_t dc = 0; dc <= hc; ++dc) {
            const std::size_t r_pos = dr, r_neg = (rows - dr) % rows;
            const std::size_t c_pos = dc, c_neg = (cols - dc) % cols;
            mask.set(r_pos, c_pos);
            mask.set(r_pos, c_neg);
            mask.set(r_neg, c_pos);
            mask.set(r_neg, c_neg);
        }
    }
    return mask;
}

void CfaSchedule::validate() const {
    if (!(s0 > 0.0 && s0 < 0.5)) throw ConfigError("s0 must lie in (0, 0.5)");
    if (!(s1 >= s0 && s1 < 1.0)) throw ConfigError("s1 must satisfy s0 <= s1 < 1");
    if (total_epochs < 1) throw ConfigError("total_epochs must be positive");
}

double schedule_threshold(const CfaSchedule& schedule, double epoch) {
    if (epoch < 0.0 || !std::isfinite(epoch)) throw DomainError("schedule_threshold: epoch must be non-negative");
    if (epoch >= schedule.total_epochs) return schedule.s1;
    if (epoch == 0.0) return schedule.s0;
    const double s = schedule.s0 + (schedule.s1 - schedule.s0) * (epoch / schedule.total_epochs);
    return std::clamp(s, schedule.s0, schedule.s1);
}

double mask_threshold(double scheduled) { return std::min(scheduled, std::nextafter(0.5, 0.0)); }

const char* to_string(DomainMode mode) {
    return mode == DomainMode::Complex ? "complex" : "amplitude_phase";
}

DomainMode domain_mode_from_string(const std::string& s) {
    if (s == "complex") return DomainMode::Complex;
    if (s == "amplitude_phase") return DomainMode::AmplitudePhase;
    throw ConfigError("domain_mode must be 'complex' or 'amplitude_phase', got '" + s + "'");
}

namespace {

// Mean of the masked band across clients, written back into every spectrum.
void merge_band_complex(std::vector<ComplexMatrix>& spectra, const FrequencyMask& mask) {
    const double inv = 1.0 / static_cast<double>(spectra.size());
    const std::size_t cols = mask.cols();
    for (std::size_t r = 0; r < mask.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (!mask.test(r, c)) continue;
            const std::size_t i = r * cols + c;
            double re = 0.0, im = 0.0;
            for (const auto& f : spectra) {
                re += f.re[i];
                im += f.im[i];
            }
            re *= inv;
            im *= inv;
            for (auto& f : spectra) {
                f.re[i] = re;
                f.im[i] = im;
            }
        }
    }
}

// Amplitudes are averaged; phases use the circular mean.
void merge_band_amplitude_phase(std::vector<ComplexMatrix>& spectra, const FrequencyMask& mask) {
    const double inv = 1.0 / static_cast<double>(spectra.size());
    const std::size_t cols = mask.cols();
    for (std::size_t r = 0; r < mask.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (!mask.test(r, c)) continue;
            const std::size_t i = r * cols + c;
            double amp = 0.0, sin_sum = 0.0, cos_sum = 0.0;
            for (const auto& f : spectra) {
                const double a = std::hypot(f.re[i], f.im[i]);
                amp += a;
                if (a > 0.0) {
                    sin_sum += f.im[i] / a;
                    cos_sum += f.re[i] / a;
                }
            }
            amp *= inv;
            const double phase = (sin_sum == 0.0 && cos_sum == 0.0) ? 0.0 : std::atan2(sin_sum, cos_sum);
            const double re = amp * std::cos(phase), im = amp * std::sin(phase);
            for (auto& f : spectra) {
                f.re[i] = re;
                f.im[i] = im;
            }
        }
    }
}

std::vector<Tensor> aggregate_matrices(const std::vector<Tensor>& mats, const FrequencyMask& mask, DomainMode mode) {
    std::vector<ComplexMatrix> spectra;
    spectra.reserve(mats.size());
    for (const auto& m : mats) spectra.push_back(fft2d_serial(m));
    if (mode == DomainMode::Complex) {
        merge_band_complex(spectra, mask);
    } else {
        merge_band_amplitude_phase(spectra, mask);
    }
    std::vector<Tensor> out;
    out.reserve(mats.size());
    for (const auto& f : spectra) out.push_back(ifft2d_serial(f));
    return out;
}

}  // namespace

std::vector<ParameterSet> cfa_aggregate_with_mask(std::span<const ParameterSet> clients, const MaskFactory& masks,
                                                  DomainMode mode, bool parallel) {
    if (clients.empty()) throw DomainError("cfa_aggregate: no client parameter sets");
    for (const auto& set : clients) require_congruent(clients.front(), set);

    const std::size_t n_clients = clients.size();
    const std::size_t n_entries = clients.front().size();
    // results[e][k]: aggregated tensor of entry e for client k.
    std::vector<std::vector<Tensor>> results(n_entries);

    // Masks are built up front so the factory need not be thread-safe.
    std::vector<std::optional<FrequencyMask>> entry_masks(n_entries);
    for (std::size_t e = 0; e < n_entries; ++e) {
        const auto& entry = clients.front()[e];
        if (entry.kind == ParamKind::Vector1d) continue;
        const Shape& s = entry.tensor.shape();
        const std::size_t rows = entry.kind == ParamKind::Conv4d ? s[0] * s[2] : s[0];
        const std::size_t cols = entry.kind == ParamKind::Conv4d ? s[1] * s[3] : s[1];
        entry_masks[e] = masks(rows, cols);
        if (entry_masks[e]->rows() != rows || entry_masks[e]->cols() != cols) {
            throw ShapeError("cfa_aggregate: mask shape does not match entry '" + entry.name + "'");
        }
    }

    parallel_for(n_entries, parallel ? available_threads() : 1, [&](std::size_t e) {
        const auto& proto = clients.front()[e];
        std::vector<Tensor> inputs;
        inputs.reserve(n_clients);
        for (const auto& set : clients) inputs.push_back(set[e].tensor);

        switch (proto.kind) {
            case ParamKind::Vector1d: {
                Tensor avg = mean(inputs);
                results[e].assign(n_clients, avg);
                break;
            }
            case ParamKind::Matrix2d:
                results[e] = aggregate_matrices(inputs, *entry_masks[e], mode);
                break;
            case ParamKind::Conv4d: {
                const Shape& s = proto.tensor.shape();
                std::vector<Tensor> mats;
                mats.reserve(n_clients);
                for (const auto& t : inputs) mats.push_back(reshape_conv_to_matrix(t));
                auto merged = aggregate_matrices(mats, *entry_masks[e], mode);
                results[e].reserve(n_clients);
                for (const auto& m : merged) results[e].push_back(matrix_to_conv(m, s[0], s[1], s[2], s[3]));
                break;
            }
        }
    });

    std::vector<ParameterSet> out(n_clients);
    for (std::size_t k = 0; k < n_clients; ++k) {
        for (std::size_t e = 0; e < n_entries; ++e) {
            const auto& proto = clients[k][e];
            out[k].add(proto.name, std::move(results[e][k]), proto.kind, proto.is_batchnorm);
        }
    }
    return out;
}

std::vector<ParameterSet> cfa_aggregate(std::span<const ParameterSet> clients, double s, DomainMode mode) {
    if (!(s > 0.0 && s < 0.5)) throw DomainError("cfa_aggregate: threshold must lie in (0, 0.5)");
    return cfa_aggregate_with_mask(
        clients, [s](std::size_t r, std::size_t c) { return build_mask(r, c, s); }, mode, true);
}

std::vector<ParameterSet> cfa_aggregate_serial(std::span<const ParameterSet> clients, double s, DomainMode mode) {
    if (!(s > 0.0 && s < 0.5)) throw DomainError("cfa_aggregate: threshold must lie in (0, 0.5)");
    return cfa_aggregate_with_mask(
        clients, [s](std::size_t r, std::size_t c) { return build_mask(r, c, s); }, mode, false);
}

namespace testing_hooks {

FrequencyMask full_mask(std::size_t rows, std::size_t cols) {
    FrequencyMask m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m.set(r, c);
    return m;
}

FrequencyMask dc_mask(std::size_t rows, std::size_t cols) {
    FrequencyMask m(rows, cols);
    m.set(0, 0);
    return m;
}

}  // namespace testing_hooks

}  // namespace fedspectra
