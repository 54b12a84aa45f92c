#ifndef BODYFIT_KERNELS_HPP
#define BODYFIT_KERNELS_HPP

#include <numbers>
#include <span>

#include "bodyfit/error.hpp"
#include "bodyfit/vec.hpp"

namespace bodyfit {

/// Quintic (Schoenberg) spline kernel with compact support 3h.
template <int D>
class QuinticKernel {
public:
    static constexpr double support_factor = 3.0;

    explicit QuinticKernel(double h) : h_(h) {
        if (!(h > 0.0)) throw Error("smoothing length must be positive");
        double hd = 1.0;
        for (int i = 0; i < D; ++i) hd *= h;
        value_scale_ = sigma() / hd;
        gradient_scale_ = value_scale_ / h;
    }

    static constexpr double sigma() {
        if constexpr (D == 1) return 1.0 / 120.0;
        else if constexpr (D == 2) return 7.0 / (478.0 * std::numbers::pi);
        else return 1.0 / (120.0 * std::numbers::pi);
    }

    double smoothing_length() const { return h_; }
    double compact_support() const { return support_factor * h_; }

    /// Dimensionless profile w(q) without the normalization constant.
    static double profile(double q) {
        if (q >= 3.0) return 0.0;
        const double a = 3.0 - q;
        double w = pow5(a);
        if (q < 2.0) {
            w -= 6.0 * pow5(2.0 - q);
            if (q < 1.0) w += 15.0 * pow5(1.0 - q);
        }
        return w;
    }

    /// dw/dq.
    static double profile_derivative(double q) {
        if (q >= 3.0) return 0.0;
        double d = pow4(3.0 - q);
        if (q < 2.0) {
            d -= 6.0 * pow4(2.0 - q);
            if (q < 1.0) d += 15.0 * pow4(1.0 - q);
        }
        return -5.0 * d;
    }

    /// W as a function of distance.
    double value(double r) const { return value_scale_ * profile(r / h_); }

    /// dW/dr as a function of distance.
    double radial_derivative(double r) const { return gradient_scale_ * profile_derivative(r / h_); }

    double value(const Vec<D>& r) const { return value(norm(r)); }

    /// Gradient with respect to the first argument of W(r_i - r_j); zero at r = 0.
    Vec<D> gradient(const Vec<D>& r) const {
        const double d = norm(r);
        if (d == 0.0) return Vec<D>{};
        return r * (radial_derivative(d) / d);
    }

private:
    static double pow4(double x) {
        const double x2 = x * x;
        return x2 * x2;
    }
    static double pow5(double x) { return pow4(x) * x; }

    double h_;
    double value_scale_;
    double gradient_scale_;
};

/// One fixed point of a signed distance cloud.
template <int D>
struct CloudSample {
    Vec<D> position;
    double phi;
    Vec<D> normal;
};

enum class ShepardStatus { ok, empty_support, zero_normal };

template <int D>
struct ShepardResult {
    ShepardStatus status = ShepardStatus::empty_support;
    double phi = 0.0;
    Vec<D> normal{};
    double weight_sum = 0.0;

    bool ok() const { return status == ShepardStatus::ok; }
};

/// Running sums for kernel-weighted (Shepard) averaging of distance and normal.
template <int D>
class ShepardAccumulator {
public:
    void add(double weight, double phi, const Vec<D>& normal) {
        weight_sum_ += weight;
        phi_sum_ += weight * phi;
        normal_sum_ += weight * normal;
    }

    ShepardResult<D> finish() const {
        ShepardResult<D> r;
        r.weight_sum = weight_sum_;
        if (!(weight_sum_ > 0.0)) return r;
        r.phi = phi_sum_ / weight_sum_;
        const Vec<D> n = normal_sum_ / weight_sum_;
        const double len = norm(n);
        if (!(len > 1e-10)) {
            r.status = ShepardStatus::zero_normal;
            return r;
        }
        r.normal = n / len;
        r.status = ShepardStatus::ok;
        return r;
    }

private:
    double weight_sum_ = 0.0;
    double phi_sum_ = 0.0;
    Vec<D> normal_sum_{};
};

/// Shepard interpolation of (phi, n) at `query`, normal renormalized to unit length.
template <int D>
ShepardResult<D> shepard_interpolate(const Vec<D>& query, std::span<const CloudSample<D>> neighbors,
                                     const QuinticKernel<D>& kernel) {
    ShepardAccumulator<D> acc;
    for (const auto& s : neighbors) {
        const double w = kernel.value(query - s.position);
        if (w > 0.0) acc.add(w, s.phi, s.normal);
    }
    return acc.finish();
}

}  // namespace bodyfit

#endif  // BODYFIT_KERNELS_HPP
