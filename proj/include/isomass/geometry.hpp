#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace isomass {

/// Cartesian point / vector in the asymptotically flat coordinate chart.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }

    constexpr bool operator==(const Vec3& o) const = default;
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Symmetric 3x3 matrix stored as the six independent entries.
struct Sym3 {
    // xx, yy, zz, xy, xz, yz
    std::array<double, 6> m{};

    static constexpr Sym3 zero() { return {}; }
    static constexpr Sym3 identity() { return Sym3{{1.0, 1.0, 1.0, 0.0, 0.0, 0.0}}; }

    constexpr double xx() const { return m[0]; }
    constexpr double yy() const { return m[1]; }
    constexpr double zz() const { return m[2]; }
    constexpr double xy() const { return m[3]; }
    constexpr double xz() const { return m[4]; }
    constexpr double yz() const { return m[5]; }

    constexpr double operator()(int i, int j) const {
        if (i == j) return m[static_cast<std::size_t>(i)];
        int a = i + j;           // xy:1, xz:2, yz:3
        return m[static_cast<std::size_t>(2 + a)];
    }

    constexpr Sym3 operator+(const Sym3& o) const {
        Sym3 r;
        for (std::size_t k = 0; k < 6; ++k) r.m[k] = m[k] + o.m[k];
        return r;
    }

    /// Quadratic form v^T M v.
    constexpr double quad(const Vec3& u, const Vec3& v) const {
        return u.x * (xx() * v.x + xy() * v.y + xz() * v.z) +
               u.y * (xy() * v.x + yy() * v.y + yz() * v.z) +
               u.z * (xz() * v.x + yz() * v.y + zz() * v.z);
    }

    constexpr double det() const {
        return xx() * (yy() * zz() - yz() * yz()) - xy() * (xy() * zz() - yz() * xz()) +
               xz() * (xy() * yz() - yy() * xz());
    }

    double max_abs() const {
        double r = 0.0;
        for (double v : m) r = std::max(r, std::fabs(v));
        return r;
    }
};

/// Orthonormal frame whose third axis points along `axis` (any axis for axis ~ 0).
struct Frame {
    Vec3 e1, e2, e3;
};

inline Frame frame_with_axis(const Vec3& axis) {
    const double n = axis.norm();
    if (n < 1e-300) return {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const Vec3 e3 = axis * (1.0 / n);
    // pick the coordinate direction least aligned with e3
    Vec3 h = std::fabs(e3.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 e1 = h - e3 * h.dot(e3);
    e1 = e1 * (1.0 / e1.norm());
    const Vec3 e2{e3.y * e1.z - e3.z * e1.y, e3.z * e1.x - e3.x * e1.z,
                  e3.x * e1.y - e3.y * e1.x};
    return {e1, e2, e3};
}

/// Deterministic quasi-uniform directions on the unit sphere (Fibonacci lattice).
inline std::vector<Vec3> fibonacci_directions(std::size_t count) {
    std::vector<Vec3> dirs;
    dirs.reserve(count);
    const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = 2.0 * M_PI * static_cast<double>(i) / golden;
        dirs.push_back({rho * std::cos(phi), rho * std::sin(phi), z});
    }
    return dirs;
}

}  // namespace isomass
