#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "fedspectra/tensor.hpp"

namespace fedspectra {

/// On-disk element type of an FMMT tensor file.
enum class FmmtDtype : std::uint8_t { Float32 = 1, Float64 = 2 };

inline constexpr std::uint32_t kFmmtVersion = 1;

// Layout: "FMMT", u32 version, u8 dtype, u32 ndim, ndim x u32 dims, row-major payload.
// All integers and floats little-endian.
void write_fmmt(std::ostream& out, const Tensor& t, FmmtDtype dtype = FmmtDtype::Float64);
Tensor read_fmmt(std::istream& in);

void save_fmmt(const std::filesystem::path& path, const Tensor& t, FmmtDtype dtype = FmmtDtype::Float64);
Tensor load_fmmt(const std::filesystem::path& path);

}  // namespace fedspectra
