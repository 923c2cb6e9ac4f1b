#include "fedspectra/fmmt.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "fedspectra/errors.hpp"

namespace fedspectra {

namespace {

constexpr std::array<char, 4> kMagic = {'F', 'M', 'M', 'T'};

template <typename UInt>
void put_le(std::ostream& out, UInt v) {
    std::array<char, sizeof(UInt)> buf{};
    for (std::size_t i = 0; i < sizeof(UInt); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(buf.data(), buf.size());
}

template <typename UInt>
UInt get_le(std::istream& in) {
    std::array<unsigned char, sizeof(UInt)> buf{};
    if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw IngestionError("FMMT: truncated header");
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_fmmt(std::ostream& out, const Tensor& t, FmmtDtype dtype) {
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kFmmtVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
    for (auto d : t.shape()) put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) {
        if (dtype == FmmtDtype::Float64) {
            put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
        } else {
            put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    if (!out) throw IngestionError("FMMT: write failed");
}

Tensor read_fmmt(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw IngestionError("FMMT: bad magic");
    const auto version = get_le<std::uint32_t>(in);
    if (version != kFmmtVersion) throw IngestionError("FMMT: unsupported version " + std::to_string(version));
    const auto dtype = get_le<std::uint8_t>(in);
    if (dtype != 1 && dtype != 2) throw IngestionError("FMMT: unknown dtype code " + std::to_string(dtype));
    const auto ndim = get_le<std::uint32_t>(in);
    if (ndim == 0 || ndim > 16) throw IngestionError("FMMT: unsupported ndim " + std::to_string(ndim));
    Shape shape(ndim);
    for (auto& d : shape) {
        d = get_le<std::uint32_t>(in);
        if (d == 0) throw IngestionError("FMMT: zero-length dimension");
    }
    std::vector<double> data(shape_volume(shape));
    for (double& v : data) {
        if (dtype == 2) {
            v = std::bit_cast<double>(get_le<std::uint64_t>(in));
        } else {
            v = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(in)));
        }
    }
    try {
        return Tensor(std::move(shape), std::move(data));
    } catch (const std::exception& e) {
        throw IngestionError(std::string("FMMT: ") + e.what());
    }
}

void save_fmmt(const std::filesystem::path& path, const Tensor& t, FmmtDtype dtype) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError("cannot open " + path.string() + " for writing");
    write_fmmt(out, t, dtype);
}

Tensor load_fmmt(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open " + path.string());
    try {
        return read_fmmt(in);
    } catch (const IngestionError& e) {
        throw IngestionError(path.string() + ": " + e.what());
    }
}

}  // namespace fedspectra
