#ifndef BODYFIT_VEC_HPP
#define BODYFIT_VEC_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>

namespace bodyfit {

/// Fixed-size Euclidean vector in D dimensions.
template <int D>
struct Vec {
    static_assert(D >= 1 && D <= 3, "bodyfit supports 1D to 3D");

    std::array<double, D> v{};

    constexpr Vec() = default;
    constexpr explicit Vec(const std::array<double, D>& a) : v(a) {}

    template <typename... Ts>
        requires(sizeof...(Ts) == D && D > 1)
    constexpr Vec(Ts... xs) : v{static_cast<double>(xs)...} {}

    constexpr static Vec filled(double x) {
        Vec r;
        r.v.fill(x);
        return r;
    }

    constexpr double& operator[](std::size_t i) { return v[i]; }
    constexpr double operator[](std::size_t i) const { return v[i]; }

    constexpr Vec& operator+=(const Vec& o) {
        for (int i = 0; i < D; ++i) v[i] += o.v[i];
        return *this;
    }
    constexpr Vec& operator-=(const Vec& o) {
        for (int i = 0; i < D; ++i) v[i] -= o.v[i];
        return *this;
    }
    constexpr Vec& operator*=(double s) {
        for (int i = 0; i < D; ++i) v[i] *= s;
        return *this;
    }
    constexpr Vec& operator/=(double s) {
        for (int i = 0; i < D; ++i) v[i] /= s;
        return *this;
    }

    friend constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend constexpr Vec operator*(Vec a, double s) { return a *= s; }
    friend constexpr Vec operator*(double s, Vec a) { return a *= s; }
    friend constexpr Vec operator/(Vec a, double s) { return a /= s; }
    friend constexpr Vec operator-(Vec a) {
        for (int i = 0; i < D; ++i) a.v[i] = -a.v[i];
        return a;
    }
    friend constexpr bool operator==(const Vec&, const Vec&) = default;

    friend std::ostream& operator<<(std::ostream& os, const Vec& a) {
        os << '(';
        for (int i = 0; i < D; ++i) os << (i ? ", " : "") << a.v[i];
        return os << ')';
    }
};

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;

template <int D>
constexpr double dot(const Vec<D>& a, const Vec<D>& b) {
    double s = 0.0;
    for (int i = 0; i < D; ++i) s += a[i] * b[i];
    return s;
}

template <int D>
constexpr double squared_norm(const Vec<D>& a) {
    return dot(a, a);
}

template <int D>
inline double norm(const Vec<D>& a) {
    return std::sqrt(dot(a, a));
}

template <int D>
constexpr Vec<D> cwise_min(const Vec<D>& a, const Vec<D>& b) {
    Vec<D> r;
    for (int i = 0; i < D; ++i) r[i] = a[i] < b[i] ? a[i] : b[i];
    return r;
}

template <int D>
constexpr Vec<D> cwise_max(const Vec<D>& a, const Vec<D>& b) {
    Vec<D> r;
    for (int i = 0; i < D; ++i) r[i] = a[i] > b[i] ? a[i] : b[i];
    return r;
}

template <int D>
inline bool all_finite(const Vec<D>& a) {
    for (int i = 0; i < D; ++i)
        if (!std::isfinite(a[i])) return false;
    return true;
}

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// 2D cross product (determinant of the column matrix [a b]).
constexpr double cross(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }

}  // namespace bodyfit

#endif  // BODYFIT_VEC_HPP
