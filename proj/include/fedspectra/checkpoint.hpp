#pragma once

#include <filesystem>

#include "fedspectra/tensor.hpp"

namespace fedspectra {

// A checkpoint directory holds one FMMT file per entry plus manifest.csv with
// columns name,kind,is_batchnorm,file in entry order.
void save_checkpoint(const std::filesystem::path& dir, const ParameterSet& params);
ParameterSet load_checkpoint(const std::filesystem::path& dir);

}  // namespace fedspectra
