#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fedspectra/data_synth.hpp"
#include "fedspectra/errors.hpp"
#include "fedspectra/fmmt.hpp"

namespace fs = std::filesystem;

namespace fedspectra {

namespace {

constexpr const char* kManifest = "labels.csv";
constexpr const char* kHeader = "filename,label,split";

std::string sample_name(const char* split, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%05zu.fmmt", split, index);
    return buf;
}

std::optional<int> client_number(const fs::path& dir) {
    const std::string name = dir.filename().string();
    if (name.rfind("client_", 0) != 0 || name.size() == 7) return std::nullopt;
    int k = 0;
    const char* first = name.data() + 7;
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, k);
    if (ec != std::errc() || ptr != last || k < 0) return std::nullopt;
    return k;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

void export_dataset(const fs::path& root, const std::vector<ClientPartition>& clients) {
    for (const auto& client : clients) {
        const fs::path dir = root / ("client_" + std::to_string(client.client_id));
        fs::create_directories(dir / "images");
        std::ofstream manifest(dir / kManifest, std::ios::binary);
        if (!manifest) throw IngestionError("cannot write " + (dir / kManifest).string());
        manifest << kHeader << '\n';
        const std::pair<const char*, const DataSplit*> splits[] = {
            {"train", &client.train}, {"val", &client.val}, {"test", &client.test}};
        for (const auto& [name, split] : splits) {
            for (std::size_t i = 0; i < split->size(); ++i) {
                const std::string file = sample_name(name, i);
                save_fmmt(dir / "images" / file, split->images[i]);
                manifest << file << ',' << split->labels[i] << ',' << name << '\n';
            }
        }
    }
}

std::vector<ClientPartition> load_dataset(const fs::path& root, std::optional<std::size_t> classes) {
    if (!fs::is_directory(root)) throw IngestionError("dataset root " + root.string() + " is not a directory");
    std::map<int, fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        if (auto k = client_number(entry.path())) dirs.emplace(*k, entry.path());
    }
    if (dirs.empty()) throw IngestionError("no clients found under " + root.string());

    std::optional<Shape> image_shape;
    std::vector<ClientPartition> out;
    for (const auto& [k, dir] : dirs) {
        const fs::path manifest_path = dir / kManifest;
        std::ifstream manifest(manifest_path);
        if (!manifest) throw IngestionError("missing manifest " + manifest_path.string());
        std::string line;
        if (!std::getline(manifest, line) || line != kHeader) {
            throw IngestionError(manifest_path.string() + ": expected header '" + kHeader + "'");
        }
        ClientPartition part;
        part.client_id = k;
        int line_no = 1;
        while (std::getline(manifest, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
            const auto fields = split_csv(line);
            if (fields.size() != 3) throw IngestionError(where + ": expected 3 fields");
            int label = -1;
            auto [ptr, ec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), label);
            if (ec != std::errc() || ptr != fields[1].data() + fields[1].size() || label < 0 ||
                (classes && static_cast<std::size_t>(label) >= *classes)) {
                throw IngestionError(where + ": unknown label '" + fields[1] + "'");
            }
            DataSplit* split = nullptr;
            if (fields[2] == "train") split = &part.train;
            else if (fields[2] == "val") split = &part.val;
            else if (fields[2] == "test") split = &part.test;
            else throw IngestionError(where + ": unknown split '" + fields[2] + "' (allowed: train, val, test)");

            Tensor img = load_fmmt(dir / "images" / fields[0]);
            if (img.ndim() != 3) throw IngestionError(where + ": image must be [C,H,W]");
            if (!image_shape) image_shape = img.shape();
            if (img.shape() != *image_shape) {
                throw IngestionError(where + ": shape mismatch " + shape_to_string(img.shape()) + " vs " +
                                     shape_to_string(*image_shape));
            }
            split->images.push_back(std::move(img));
            split->labels.push_back(label);
        }
        out.push_back(std::move(part));
    }
    return out;
}

}  // namespace fedspectra
