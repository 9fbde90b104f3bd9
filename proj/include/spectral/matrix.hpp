#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "spectral/error.hpp"

namespace spectral {

/// Dense real symmetric matrix stored as a packed lower triangle,
/// row-major: row i holds entries (i,0) .. (i,i) contiguously.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;
    explicit SymmetricMatrix(std::size_t n) : n_(n), data_(packed_size(n), 0.0) {}

    /// Builds from full row-major rows; only the lower triangle is read,
    /// but the input must be symmetric.
    static SymmetricMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t n = rows.size();
        std::vector<std::vector<double>> full;
        for (const auto& r : rows) {
            if (r.size() != n) throw ValidationError("from_rows: matrix is not square");
            full.emplace_back(r);
        }
        SymmetricMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                if (full[i][j] != full[j][i]) throw ValidationError("from_rows: matrix is not symmetric");
                m.set(i, j, full[i][j]);
            }
        }
        return m;
    }

    static SymmetricMatrix diagonal(std::span<const double> d) {
        SymmetricMatrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
        return m;
    }

    static constexpr std::size_t packed_size(std::size_t n) { return n * (n + 1) / 2; }

    std::size_t size() const { return n_; }

    double operator()(std::size_t i, std::size_t j) const {
        if (i < j) std::swap(i, j);
        return data_[offset(i) + j];
    }
    void set(std::size_t i, std::size_t j, double v) {
        if (i < j) std::swap(i, j);
        data_[offset(i) + j] = v;
    }

    std::span<double> row(std::size_t i) { return {data_.data() + offset(i), i + 1}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + offset(i), i + 1}; }

    std::span<double> packed() { return data_; }
    std::span<const double> packed() const { return data_; }

    double trace() const {
        double s = 0.0;
        for (std::size_t i = 0; i < n_; ++i) s += data_[offset(i) + i];
        return s;
    }

    double frobenius_norm_sq() const {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const auto r = row(i);
            for (std::size_t j = 0; j < i; ++j) off += r[j] * r[j];
            diag += r[i] * r[i];
        }
        return diag + 2.0 * off;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const SymmetricMatrix&, const SymmetricMatrix&) = default;

private:
    static constexpr std::size_t offset(std::size_t i) { return i * (i + 1) / 2; }

    std::size_t n_ = 0;
    std::vector<double> data_;
};

// Binary layout: "SYMM", u64 n, packed lower triangle as f64; little-endian.
static_assert(std::endian::native == std::endian::little,
              "SYMM export assumes a little-endian host");

inline void write_symm(std::ostream& out, const SymmetricMatrix& m) {
    const char magic[4] = {'S', 'Y', 'M', 'M'};
    const std::uint64_t n = m.size();
    out.write(magic, 4);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    const auto p = m.packed();
    out.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size_bytes()));
    if (!out) throw Error("write_symm: stream write failed");
}

inline SymmetricMatrix read_symm(std::istream& in) {
    char magic[4] = {};
    std::uint64_t n = 0;
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SYMM", 4) != 0) throw ValidationError("read_symm: bad magic");
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in) throw ValidationError("read_symm: truncated header");
    SymmetricMatrix m(static_cast<std::size_t>(n));
    auto p = m.packed();
    in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size_bytes()));
    if (!in) throw ValidationError("read_symm: truncated payload");
    return m;
}

} // namespace spectral
