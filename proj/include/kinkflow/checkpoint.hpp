#ifndef KINKFLOW_CHECKPOINT_HPP
#define KINKFLOW_CHECKPOINT_HPP

// Checkpoint file: little-endian binary; header
//   magic "KFLW", version u32, d u32, n_transverse u32, n_z u32,
//   L_z f64, t f64
// followed by the real-space f samples as f64 in z-major order (z is the
// fastest-varying index).

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

#include "kinkflow/grid.hpp"

namespace kinkflow {

inline constexpr std::uint32_t checkpoint_version = 1;

inline void save_checkpoint(const std::string& path, const RealField& f, double t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out.write("KFLW", 4);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_u32(checkpoint_version);
    put_u32(std::uint32_t(f.spec.d));
    put_u32(std::uint32_t(f.spec.n_transverse));
    put_u32(std::uint32_t(f.spec.n_z));
    put_f64(f.spec.L_z);
    put_f64(t);
    out.write(reinterpret_cast<const char*>(f.values.data()),
              std::streamsize(f.values.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_checkpoint: write failed on " + path);
}

inline RealField load_checkpoint(const std::string& path, double& t) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "KFLW", 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path);
    auto get_u32 = [&]() { std::uint32_t v; in.read(reinterpret_cast<char*>(&v), 4); return v; };
    auto get_f64 = [&]() { double v; in.read(reinterpret_cast<char*>(&v), 8); return v; };
    std::uint32_t version = get_u32();
    if (version != checkpoint_version)
        throw std::runtime_error("load_checkpoint: unsupported version");
    GridSpec spec;
    spec.d = int(get_u32());
    spec.n_transverse = int(get_u32());
    spec.n_z = int(get_u32());
    spec.L_z = get_f64();
    t = get_f64();
    spec.validate();
    RealField f(spec);
    in.read(reinterpret_cast<char*>(f.values.data()),
            std::streamsize(f.values.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
    return f;
}

}  // namespace kinkflow

#endif
