#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "craft/params.hpp"

namespace craft {

inline constexpr char kCheckpointMagic[] = "CRAFTCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

inline float read_f32(std::istream& is) {
    std::uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace detail

// Versioned binary container: magic, version, config echo (JSON text),
// then each parameter as name length, name, rows, cols, little-endian
// 32-bit floats.
template <typename Real>
void save_checkpoint(const std::string& path, const ParamStore<Real>& store,
                     const std::string& config_json) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorKind::missing_file, "cannot write checkpoint: " + path);
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
    detail::write_u32(os, kCheckpointVersion);
    detail::write_u32(os, static_cast<std::uint32_t>(config_json.size()));
    os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    detail::write_u32(os, static_cast<std::uint32_t>(store.values.size()));
    for (const auto& [name, m] : store.values) {
        detail::write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(m.rows));
        detail::write_u32(os, static_cast<std::uint32_t>(m.cols));
        for (Real v : m.data) detail::write_f32(os, static_cast<float>(v));
    }
    if (!os) fail(ErrorKind::generic, "checkpoint write failed: " + path);
}

// Returns the config echo; fills `store` with the saved parameters.
template <typename Real>
std::string load_checkpoint(const std::string& path, ParamStore<Real>& store) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorKind::missing_file, "cannot open checkpoint: " + path);
    char magic[sizeof(kCheckpointMagic) - 1];
    is.read(magic, sizeof(magic));
    if (!is || std::string(magic, sizeof(magic)) != kCheckpointMagic)
        fail(ErrorKind::checkpoint_version, "not a checkpoint file: " + path);
    std::uint32_t version = detail::read_u32(is);
    if (version != kCheckpointVersion)
        fail(ErrorKind::checkpoint_version,
             "unsupported checkpoint version " + std::to_string(version));
    std::uint32_t cfg_len = detail::read_u32(is);
    std::string config(cfg_len, '\0');
    is.read(config.data(), cfg_len);
    std::uint32_t n_params = detail::read_u32(is);
    for (std::uint32_t p = 0; p < n_params; ++p) {
        std::uint32_t name_len = detail::read_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        std::uint32_t rows = detail::read_u32(is);
        std::uint32_t cols = detail::read_u32(is);
        Mat<Real> m(rows, cols);
        for (auto& v : m.data) v = static_cast<Real>(detail::read_f32(is));
        if (!is) fail(ErrorKind::checkpoint_version, "truncated checkpoint: " + path);
        store.add(name, std::move(m));
    }
    return config;
}

}  // namespace craft
