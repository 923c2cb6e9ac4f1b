#include "fedspectra/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "fedspectra/errors.hpp"
#include "fedspectra/fmmt.hpp"

namespace fs = std::filesystem;

namespace fedspectra {

namespace {
constexpr const char* kManifestHeader = "name,kind,is_batchnorm,file";
}

void save_checkpoint(const fs::path& dir, const ParameterSet& params) {
    fs::create_directories(dir);
    std::ofstream manifest(dir / "manifest.csv", std::ios::binary);
    if (!manifest) throw IngestionError("cannot write checkpoint manifest in " + dir.string());
    manifest << kManifestHeader << '\n';
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& e = params[i];
        const std::string file = std::to_string(i) + "_" + e.name + ".fmmt";
        save_fmmt(dir / file, e.tensor);
        manifest << e.name << ',' << to_string(e.kind) << ',' << (e.is_batchnorm ? 1 : 0) << ',' << file << '\n';
    }
}

ParameterSet load_checkpoint(const fs::path& dir) {
    std::ifstream manifest(dir / "manifest.csv");
    if (!manifest) throw IngestionError("missing checkpoint manifest in " + dir.string());
    std::string line;
    if (!std::getline(manifest, line) || line != kManifestHeader) {
        throw IngestionError(dir.string() + ": bad checkpoint manifest header");
    }
    ParameterSet set;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 4 || (f[2] != "0" && f[2] != "1")) {
            throw IngestionError(dir.string() + ": malformed manifest row '" + line + "'");
        }
        set.add(f[0], load_fmmt(dir / f[3]), param_kind_from_string(f[1]), f[2] == "1");
    }
    return set;
}

}  // namespace fedspectra
