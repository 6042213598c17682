#pragma once

// Binary serialization and disk caching for Stokes bases.  The Dirichlet
// eigensolve is the expensive step of every run, so bases are cached under a
// key derived from the exact build parameters; the torus basis is cheap but
// round-trips through the same format so that run manifests can always
// record a basis fingerprint.
//
// Format (little-endian, version 1):
//   magic "SNSB" | u32 version | u32 kind | f64 side_length | u32 grid_points
//   | u32 dim | eigenvalues (dim f64) | quad_weights | vx | vy (column-major)
//   | u32 n_wavevectors | per wavevector: i32 k1, i32 k2, u8 is_sine

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "snse/basis.hpp"
#include "snse/sha256.hpp"

namespace snse {

namespace detail {

inline void put_bytes(std::vector<unsigned char>& out, const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out.insert(out.end(), b, b + n);
}

template <typename T>
inline void put_pod(std::vector<unsigned char>& out, T v) {
    put_bytes(out, &v, sizeof(T));
}

class ByteReader {
public:
    ByteReader(const unsigned char* data, std::size_t size) : data_(data), size_(size) {}

    void read(void* dst, std::size_t n) {
        require_config(pos_ + n <= size_, "basis file truncated");
        std::memcpy(dst, data_ + pos_, n);
        pos_ += n;
    }

    template <typename T>
    T pod() {
        T v{};
        read(&v, sizeof(T));
        return v;
    }

    bool exhausted() const { return pos_ == size_; }

private:
    const unsigned char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<unsigned char> serialize_basis(const StokesBasis& b) {
    std::vector<unsigned char> out;
    out.reserve(64 + static_cast<std::size_t>(b.node_count()) * static_cast<std::size_t>(b.dim()) * 16);
    detail::put_bytes(out, "SNSB", 4);
    detail::put_pod<std::uint32_t>(out, 1u);
    detail::put_pod<std::uint32_t>(out, b.domain.kind == DomainKind::PeriodicTorus ? 0u : 1u);
    detail::put_pod<double>(out, b.domain.side_length);
    detail::put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(b.domain.grid_points));
    detail::put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(b.dim()));
    auto put_vec = [&out](const Eigen::VectorXd& v) {
        detail::put_bytes(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
    };
    auto put_mat = [&out](const Eigen::MatrixXd& m) {
        detail::put_bytes(out, m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    };
    put_vec(b.eigenvalues);
    put_vec(b.quad_weights);
    put_mat(b.vx);
    put_mat(b.vy);
    detail::put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(b.modes.size()));
    for (const PeriodicMode& m : b.modes) {
        detail::put_pod<std::int32_t>(out, m.k1);
        detail::put_pod<std::int32_t>(out, m.k2);
        detail::put_pod<std::uint8_t>(out, m.is_sine ? 1 : 0);
    }
    return out;
}

inline StokesBasis deserialize_basis(const std::vector<unsigned char>& bytes) {
    detail::ByteReader r(bytes.data(), bytes.size());
    char magic[4];
    r.read(magic, 4);
    require_config(std::memcmp(magic, "SNSB", 4) == 0, "not a basis file (bad magic)");
    const auto version = r.pod<std::uint32_t>();
    require_config(version == 1, "unsupported basis file version " + std::to_string(version));
    StokesBasis b;
    const auto kind = r.pod<std::uint32_t>();
    require_config(kind <= 1, "corrupt basis file (kind)");
    b.domain.kind = kind == 0 ? DomainKind::PeriodicTorus : DomainKind::DirichletSquare;
    b.domain.side_length = r.pod<double>();
    b.domain.grid_points = static_cast<int>(r.pod<std::uint32_t>());
    const int dim = static_cast<int>(r.pod<std::uint32_t>());
    require_config(dim >= 1 && dim <= 100000, "corrupt basis file (dim)");
    b.domain.validate();
    const int p = b.domain.node_count();
    b.eigenvalues.resize(dim);
    r.read(b.eigenvalues.data(), sizeof(double) * static_cast<std::size_t>(dim));
    b.quad_weights.resize(p);
    r.read(b.quad_weights.data(), sizeof(double) * static_cast<std::size_t>(p));
    b.vx.resize(p, dim);
    r.read(b.vx.data(), sizeof(double) * static_cast<std::size_t>(b.vx.size()));
    b.vy.resize(p, dim);
    r.read(b.vy.data(), sizeof(double) * static_cast<std::size_t>(b.vy.size()));
    const auto n_waves = r.pod<std::uint32_t>();
    require_config(n_waves == 0 || static_cast<int>(n_waves) == dim, "corrupt basis file (wavevectors)");
    b.modes.resize(n_waves);
    for (auto& m : b.modes) {
        m.k1 = r.pod<std::int32_t>();
        m.k2 = r.pod<std::int32_t>();
        m.is_sine = r.pod<std::uint8_t>() != 0;
    }
    require_config(r.exhausted(), "basis file has trailing bytes");
    return b;
}

inline void save_basis(const StokesBasis& b, const std::string& path) {
    const std::vector<unsigned char> bytes = serialize_basis(b);
    const std::string tmp = path + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    require_config(f != nullptr, "cannot write basis file: " + tmp);
    const std::size_t wrote = std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    require_config(wrote == bytes.size(), "short write on basis file: " + tmp);
    std::filesystem::rename(tmp, path);
}

inline StokesBasis load_basis(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    require_config(f != nullptr, "cannot open basis file: " + path);
    std::fseek(f, 0, SEEK_END);
    const long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    const std::size_t got = std::fread(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    require_config(got == bytes.size(), "short read on basis file: " + path);
    return deserialize_basis(bytes);
}

/// Cache file name for a build request; distinct parameters map to distinct
/// names, and the name is stable across runs.
inline std::string basis_cache_name(const DomainSpec& d, int n_modes) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "basis_%s_L%.17g_g%d_n%d.snsb", to_string(d.kind).c_str(),
                  d.side_length, d.grid_points, n_modes);
    return buf;
}

/// Build a basis, consulting/filling a disk cache when cache_dir is nonempty.
/// Always returns the basis together with the SHA-256 of its serialized form,
/// which run manifests record as the basis fingerprint.
struct CachedBasis {
    StokesBasis basis;
    std::string sha256;
    bool from_cache = false;
};

inline CachedBasis build_or_load_basis(const DomainSpec& domain, int n_modes,
                                       const std::string& cache_dir) {
    CachedBasis out;
    if (!cache_dir.empty()) {
        std::filesystem::create_directories(cache_dir);
        const std::string path =
            (std::filesystem::path(cache_dir) / basis_cache_name(domain, n_modes)).string();
        if (std::filesystem::exists(path)) {
            out.basis = load_basis(path);
            require_config(out.basis.domain == domain && out.basis.dim() == n_modes,
                           "basis cache collision at " + path);
            out.sha256 = sha256_file(path);
            out.from_cache = true;
            return out;
        }
        out.basis = build_basis(domain, n_modes);
        save_basis(out.basis, path);
        out.sha256 = sha256_file(path);
        return out;
    }
    out.basis = build_basis(domain, n_modes);
    out.sha256 = sha256_hex(serialize_basis(out.basis));
    return out;
}

} // namespace snse
