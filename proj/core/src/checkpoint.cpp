#include "absa/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "absa/error.hpp"

namespace absa {

namespace {

constexpr char kMagic[8] = {'A', 'B', 'S', 'A', 'C', 'K', 'P', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw ParseError("checkpoint: truncated u32");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw ParseError("checkpoint: truncated u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_f32(std::ostream& os, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(os, bits);
}

float get_f32(std::istream& is) {
    std::uint32_t bits = get_u32(is);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& params, const std::string& manifest) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);

    os.write(kMagic, sizeof(kMagic));
    put_u32(os, static_cast<std::uint32_t>(manifest.size()));
    os.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
    put_u32(os, static_cast<std::uint32_t>(params.size()));

    for (const auto& name : params.names()) {
        const Tensor& t = params.at(name);
        put_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        put_u32(os, static_cast<std::uint32_t>(t.rank()));
        for (std::size_t e : t.shape()) put_u64(os, e);
        if constexpr (std::endian::native == std::endian::little) {
            os.write(reinterpret_cast<const char*>(t.values().data()),
                     static_cast<std::streamsize>(t.size() * sizeof(float)));
        } else {
            for (float f : t.values()) put_f32(os, f);
        }
    }
    if (!os) throw IoError("write failed for checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint for reading: " + path);

    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw ParseError("not a checkpoint file: " + path);
    }

    Checkpoint ckpt;
    std::uint32_t manifest_len = get_u32(is);
    ckpt.manifest.resize(manifest_len);
    if (manifest_len && !is.read(ckpt.manifest.data(), manifest_len)) {
        throw ParseError("checkpoint: truncated manifest");
    }

    std::uint32_t count = get_u32(is);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = get_u32(is);
        std::string name(name_len, '\0');
        if (name_len && !is.read(name.data(), name_len)) throw ParseError("checkpoint: truncated name");
        std::uint32_t rank = get_u32(is);
        if (rank == 0 || rank > 8) throw ParseError("checkpoint: bad rank for tensor '" + name + "'");
        Shape shape(rank);
        for (auto& e : shape) e = get_u64(is);

        Tensor& t = ckpt.params.create(name, shape);
        if constexpr (std::endian::native == std::endian::little) {
            if (!is.read(reinterpret_cast<char*>(t.values().data()),
                         static_cast<std::streamsize>(t.size() * sizeof(float)))) {
                throw ParseError("checkpoint: truncated data for tensor '" + name + "'");
            }
        } else {
            for (auto& f : t.values()) f = get_f32(is);
        }
    }
    return ckpt;
}

}  // namespace absa
