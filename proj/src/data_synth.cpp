#include "fedspectra/data_synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fedspectra/errors.hpp"
#include "fedspectra/log.hpp"

namespace fedspectra {

std::vector<std::vector<int>> default_label_table() {
    return {{1832, 475, 680}, {3720, 124, 24}, {803, 490, 342}, {1372, 254, 374}};
}

std::vector<std::size_t> DataSplit::class_counts(std::size_t classes) const {
    std::vector<std::size_t> counts(classes, 0);
    for (int l : labels) counts.at(static_cast<std::size_t>(l))++;
    return counts;
}

Tensor DataSplit::batch(std::span<const std::size_t> indices) const {
    if (indices.empty()) throw DomainError("DataSplit::batch: no samples selected");
    const Shape& sample = images.at(indices[0]).shape();
    Shape shape{indices.size()};
    shape.insert(shape.end(), sample.begin(), sample.end());
    std::vector<double> data;
    data.reserve(shape_volume(shape));
    for (auto i : indices) {
        const auto& img = images.at(i);
        if (img.shape() != sample) throw ShapeError("DataSplit::batch: inconsistent image shapes");
        data.insert(data.end(), img.data().begin(), img.data().end());
    }
    return Tensor(std::move(shape), std::move(data));
}

Tensor DataSplit::all() const {
    std::vector<std::size_t> idx(size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return batch(idx);
}

void SynthSpec::validate() const {
    if (classes < 2) throw ConfigError("classes must be >= 2");
    if (channels == 0 || height < 4 || width < 4) throw ConfigError("image must be at least 1x4x4");
    if (num_clients == 0) throw ConfigError("num_clients must be >= 1");
    if (label_table.empty()) throw ConfigError("label table is empty");
    for (const auto& row : label_table) {
        if (row.size() != classes) throw ConfigError("label table rows must have one count per class");
        for (int c : row) {
            if (c < 0) throw ConfigError("class counts must be non-negative");
        }
        if (std::all_of(row.begin(), row.end(), [](int c) { return c == 0; })) {
            throw ConfigError("every label table row needs a nonzero count");
        }
    }
    if (!(count_scale > 0.0)) throw ConfigError("count_scale must be positive");
    if (!(noise >= 0.0)) throw ConfigError("noise must be non-negative");
    if (!(style_shift >= 0.0)) throw ConfigError("style_shift must be non-negative");
}

std::vector<int> SynthSpec::client_counts(std::size_t client) const {
    const auto& row = label_table[client % label_table.size()];
    double factor = count_scale;
    if (num_clients > label_table.size()) {
        factor *= static_cast<double>(label_table.size()) / static_cast<double>(num_clients);
    }
    std::vector<int> counts(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
        counts[c] = static_cast<int>(std::llround(row[c] * factor));
    }
    if (std::all_of(counts.begin(), counts.end(), [](int c) { return c == 0; })) {
        counts[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())] = 1;
    }
    return counts;
}

ClientStyle client_style(const SynthSpec& spec, std::size_t client) {
    static constexpr std::array<ClientStyle, 4> kSites = {
        ClientStyle{0.0, 1.0}, ClientStyle{0.3, 0.6}, ClientStyle{-0.25, 1.4}, ClientStyle{0.15, 0.8}};
    ClientStyle base;
    if (client < kSites.size()) {
        base = kSites[client];
    } else {
        Rng rng(mix_seed(0xC11E47, client));
        base.brightness = rng.uniform(-0.3, 0.3);
        base.contrast = rng.uniform(0.6, 1.4);
    }
    return {base.brightness * spec.style_shift, 1.0 + (base.contrast - 1.0) * spec.style_shift};
}

Tensor render_sample(const SynthSpec& spec, std::size_t client, int label, Rng& rng) {
    const double k = static_cast<double>(label);
    // Classes differ in texture frequency and central blob width; both survive flips
    // and quarter turns, so augmentation keeps labels meaningful.
    double freq = 2.0 + 2.5 * k;
    double sigma = 0.08 + 0.07 * k;
    double theta = 0.0, phase = 0.0, cx = 0.5, cy = 0.5;
    if (spec.intra_class_jitter) {
        theta = rng.uniform(0.0, std::numbers::pi);
        phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        freq *= rng.uniform(0.9, 1.1);
        sigma *= rng.uniform(0.9, 1.1);
        cx += rng.uniform(-0.05, 0.05);
        cy += rng.uniform(-0.05, 0.05);
    }
    const ClientStyle style = client_style(spec, client);
    const double ct = std::cos(theta), st = std::sin(theta);
    Tensor img({spec.channels, spec.height, spec.width});
    for (std::size_t ch = 0; ch < spec.channels; ++ch) {
        const double channel_gain = 1.0 - 0.15 * static_cast<double>(ch);
        for (std::size_t y = 0; y < spec.height; ++y) {
            const double v = static_cast<double>(y) / static_cast<double>(spec.height);
            for (std::size_t x = 0; x < spec.width; ++x) {
                const double u = static_cast<double>(x) / static_cast<double>(spec.width);
                const double wave = 0.6 * std::sin(2.0 * std::numbers::pi * freq * (u * ct + v * st) + phase);
                const double r2 = (u - cx) * (u - cx) + (v - cy) * (v - cy);
                const double blob = 0.8 * std::exp(-r2 / (2.0 * sigma * sigma));
                double value = style.contrast * channel_gain * (wave + blob) + style.brightness;
                if (spec.noise > 0.0) value += spec.noise * rng.normal();
                img[(ch * spec.height + y) * spec.width + x] = value;
            }
        }
    }
    return img;
}

namespace {

struct SplitPlan {
    std::vector<std::size_t> train, val, test;
};

std::size_t share(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
}

SplitPlan plan_split(const std::vector<int>& labels, std::size_t classes, int client_id, Rng& rng) {
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    const bool stratify = std::all_of(by_class.begin(), by_class.end(),
                                      [](const auto& idx) { return idx.empty() || idx.size() >= 3; });
    SplitPlan plan;
    auto take = [&](std::vector<std::size_t>& idx) {
        rng.shuffle(std::span(idx));
        const std::size_t n_val = std::max<std::size_t>(1, share(idx.size(), 0.15));
        const std::size_t n_test = std::max<std::size_t>(1, share(idx.size(), 0.15));
        plan.val.insert(plan.val.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        plan.test.insert(plan.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val),
                         idx.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
        plan.train.insert(plan.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), idx.end());
    };
    if (stratify) {
        for (auto& idx : by_class) {
            if (!idx.empty()) take(idx);
        }
    } else {
        log_warning("client " + std::to_string(client_id) +
                    ": a class has fewer than 3 samples, using an unstratified split");
        std::vector<std::size_t> all(labels.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        take(all);
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.val.begin(), plan.val.end());
    std::sort(plan.test.begin(), plan.test.end());
    return plan;
}

DataSplit gather(const std::vector<Tensor>& images, const std::vector<int>& labels,
                 const std::vector<std::size_t>& idx) {
    DataSplit split;
    for (auto i : idx) {
        split.images.push_back(images[i]);
        split.labels.push_back(labels[i]);
    }
    return split;
}

}  // namespace

std::vector<ClientPartition> generate(const SynthSpec& spec) {
    spec.validate();
    std::vector<ClientPartition> out;
    out.reserve(spec.num_clients);
    for (std::size_t k = 0; k < spec.num_clients; ++k) {
        Rng rng(mix_seed(spec.seed, k));
        const auto counts = spec.client_counts(k);
        std::vector<Tensor> images;
        std::vector<int> labels;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            for (int i = 0; i < counts[c]; ++i) {
                images.push_back(render_sample(spec, k, static_cast<int>(c), rng));
                labels.push_back(static_cast<int>(c));
            }
        }
        if (labels.size() < 3) {
            throw DomainError("client " + std::to_string(k) + " has fewer than 3 samples; raise count_scale");
        }
        const auto plan = plan_split(labels, spec.classes, static_cast<int>(k), rng);
        ClientPartition part;
        part.client_id = static_cast<int>(k);
        part.train = gather(images, labels, plan.train);
        part.val = gather(images, labels, plan.val);
        part.test = gather(images, labels, plan.test);
        out.push_back(std::move(part));
    }
    return out;
}

AugmentParams draw_augment(Rng& rng) {
    AugmentParams p;
    p.hflip = rng.coin();
    p.vflip = rng.coin();
    p.quarter_turns = static_cast<int>(rng.below(4));
    return p;
}

Tensor augment_with(const Tensor& image, const AugmentParams& params) {
    if (image.ndim() != 3) throw ShapeError("augment: expected [C,H,W], got " + shape_to_string(image.shape()));
    const std::size_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
    const int turns = ((params.quarter_turns % 4) + 4) % 4;
    if (turns != 0 && H != W) throw ShapeError("augment: rotation requires square images");
    Tensor out = image;
    auto px = [&](Tensor& t, std::size_t c, std::size_t y, std::size_t x) -> double& { return t[(c * H + y) * W + x]; };
    if (params.hflip) {
        Tensor src = out;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) px(out, c, y, x) = px(src, c, y, W - 1 - x);
    }
    if (params.vflip) {
        Tensor src = out;
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) px(out, c, y, x) = px(src, c, H - 1 - y, x);
    }
    for (int t = 0; t < turns; ++t) {
        Tensor src = out;
        // Counter-clockwise quarter turn.
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) px(out, c, y, x) = px(src, c, x, W - 1 - y);
    }
    return out;
}

Tensor augment(const Tensor& image, Rng& rng) { return augment_with(image, draw_augment(rng)); }

}  // namespace fedspectra
