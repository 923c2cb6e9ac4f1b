#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "fedspectra/rng.hpp"
#include "fedspectra/tensor.hpp"

namespace fedspectra {

/// Images [C,H,W] with integer labels.
struct DataSplit {
    std::vector<Tensor> images;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    bool empty() const noexcept { return labels.empty(); }
    std::vector<std::size_t> class_counts(std::size_t classes) const;
    /// Stacks the selected samples into one [n,C,H,W] batch.
    Tensor batch(std::span<const std::size_t> indices) const;
    Tensor all() const;

    friend bool operator==(const DataSplit&, const DataSplit&) = default;
};

struct ClientPartition {
    int client_id = 0;
    DataSplit train;
    DataSplit val;
    DataSplit test;

    friend bool operator==(const ClientPartition&, const ClientPartition&) = default;
};

/// Per-client class counts for three classes at full scale.
std::vector<std::vector<int>> default_label_table();

struct SynthSpec {
    std::size_t classes = 3;
    std::size_t channels = 1;
    std::size_t height = 32;
    std::size_t width = 32;
    std::size_t num_clients = 4;
    /// Row k % rows gives client k's class proportions.
    std::vector<std::vector<int>> label_table = default_label_table();
    double count_scale = 0.1;
    /// Gaussian pixel noise standard deviation.
    double noise = 0.35;
    /// Random phase, frequency and blob-position variation within a class.
    bool intra_class_jitter = true;
    /// Multiplier on the per-client brightness/contrast shift.
    double style_shift = 1.0;
    std::uint64_t seed = 1;

    void validate() const;
    /// Class counts of client k before splitting. With more clients than table rows
    /// the counts shrink by rows / num_clients so total data stays roughly fixed.
    std::vector<int> client_counts(std::size_t client) const;
};

struct ClientStyle {
    double brightness = 0.0;
    double contrast = 1.0;
};

ClientStyle client_style(const SynthSpec& spec, std::size_t client);

/// Deterministic procedural data, split 70/15/15 per client (stratified when every
/// present class has at least 3 samples).
std::vector<ClientPartition> generate(const SynthSpec& spec);

/// One sample of `label` for `client`, drawing jitter and noise from rng.
Tensor render_sample(const SynthSpec& spec, std::size_t client, int label, Rng& rng);

struct AugmentParams {
    bool hflip = false;
    bool vflip = false;
    int quarter_turns = 0;  // counter-clockwise, 0..3

    friend bool operator==(const AugmentParams&, const AugmentParams&) = default;
};

AugmentParams draw_augment(Rng& rng);
/// Horizontal flip, then vertical flip, then rotation. Rotation needs square images.
Tensor augment_with(const Tensor& image, const AugmentParams& params);
Tensor augment(const Tensor& image, Rng& rng);

/// Writes `<root>/client_<k>/images/*.fmmt` and `<root>/client_<k>/labels.csv`.
void export_dataset(const std::filesystem::path& root, const std::vector<ClientPartition>& clients);
/// Reads the layout written by export_dataset. Labels must be < classes when given.
std::vector<ClientPartition> load_dataset(const std::filesystem::path& root,
                                          std::optional<std::size_t> classes = std::nullopt);

}  // namespace fedspectra
