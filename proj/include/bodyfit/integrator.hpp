#ifndef BODYFIT_INTEGRATOR_HPP
#define BODYFIT_INTEGRATOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "bodyfit/error.hpp"

namespace bodyfit {

enum class RungeKuttaScheme { bogacki_shampine_3_2, dormand_prince_5_4 };

inline std::string_view scheme_name(RungeKuttaScheme s) {
    return s == RungeKuttaScheme::bogacki_shampine_3_2 ? "bs32" : "dp54";
}

inline RungeKuttaScheme parse_scheme(std::string_view s) {
    if (s == "bs32" || s == "bogacki_shampine_3_2") return RungeKuttaScheme::bogacki_shampine_3_2;
    if (s == "dp54" || s == "dormand_prince_5_4") return RungeKuttaScheme::dormand_prince_5_4;
    throw Error("unknown integrator scheme '" + std::string(s) + "' (expected bs32 or dp54)");
}

/// Explicit embedded pair: the solution uses `weights`, the error estimate `weights - embedded`.
struct EmbeddedTableau {
    int stages = 0;
    int order = 0;
    int embedded_order = 0;
    std::vector<double> nodes;
    std::vector<std::vector<double>> coupling;  ///< row i holds a_{i,0..i-1}
    std::vector<double> weights;
    std::vector<double> error_weights;
};

inline const EmbeddedTableau& tableau(RungeKuttaScheme s) {
    static const EmbeddedTableau bs32 = [] {
        EmbeddedTableau t;
        t.stages = 4;
        t.order = 3;
        t.embedded_order = 2;
        t.nodes = {0.0, 0.5, 0.75, 1.0};
        t.coupling = {{}, {0.5}, {0.0, 0.75}, {2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0}};
        t.weights = {2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0, 0.0};
        const std::array<double, 4> low = {7.0 / 24.0, 0.25, 1.0 / 3.0, 0.125};
        for (int i = 0; i < 4; ++i) t.error_weights.push_back(t.weights[static_cast<std::size_t>(i)] - low[static_cast<std::size_t>(i)]);
        return t;
    }();
    static const EmbeddedTableau dp54 = [] {
        EmbeddedTableau t;
        t.stages = 7;
        t.order = 5;
        t.embedded_order = 4;
        t.nodes = {0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0};
        t.coupling = {{},
                      {0.2},
                      {3.0 / 40.0, 9.0 / 40.0},
                      {44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0},
                      {19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0},
                      {9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0},
                      {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0}};
        t.weights = {35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0};
        const std::array<double, 7> low = {5179.0 / 57600.0,     0.0,           7571.0 / 16695.0, 393.0 / 640.0,
                                           -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0};
        for (int i = 0; i < 7; ++i) t.error_weights.push_back(t.weights[static_cast<std::size_t>(i)] - low[static_cast<std::size_t>(i)]);
        return t;
    }();
    return s == RungeKuttaScheme::bogacki_shampine_3_2 ? bs32 : dp54;
}

struct StepOutcome {
    double dt = 0.0;          ///< size of the accepted step
    double error = 0.0;       ///< scaled error norm of the accepted step (<= 1)
    int rejected = 0;         ///< rejected attempts before acceptance
    int evaluations = 0;      ///< right-hand side evaluations spent
};

/// Adaptive one-step driver for autonomous systems y' = f(y) with PI step-size control.
///
/// rhs(y, dydt) must fill dydt (same length as y). The error norm is the RMS of
/// e_i / (atol + rtol * max(|y0_i|, |y1_i|)).
class AdaptiveIntegrator {
public:
    AdaptiveIntegrator(RungeKuttaScheme scheme = RungeKuttaScheme::bogacki_shampine_3_2, double abs_tolerance = 1e-6,
                       double rel_tolerance = 1e-3)
        : scheme_(scheme), t_(&tableau(scheme)), atol_(abs_tolerance), rtol_(rel_tolerance) {
        if (!(abs_tolerance > 0.0) || !(rel_tolerance >= 0.0)) throw Error("integrator tolerances must be positive");
        const double k = static_cast<double>(t_->embedded_order + 1);
        alpha_ = 0.7 / k;
        beta_ = 0.4 / k;
        reject_exponent_ = 1.0 / k;
    }

    RungeKuttaScheme scheme() const { return scheme_; }
    double abs_tolerance() const { return atol_; }
    double rel_tolerance() const { return rtol_; }

    /// Proposed size of the next step; zero until the first step has been estimated.
    double next_dt() const { return next_dt_; }
    void set_next_dt(double dt) { next_dt_ = dt; }

    /// Advances y0 by one accepted step into y1.
    template <typename Rhs>
    StepOutcome step(Rhs&& rhs, const std::vector<double>& y0, std::vector<double>& y1) {
        const std::size_t n = y0.size();
        const int s = t_->stages;
        k_.resize(static_cast<std::size_t>(s));
        for (auto& k : k_) k.resize(n);
        stage_.resize(n);
        y1.resize(n);

        StepOutcome out;
        rhs(y0, k_[0]);
        ++out.evaluations;
        if (!(next_dt_ > 0.0)) {
            next_dt_ = initial_step(rhs, y0, k_[0]);
            ++out.evaluations;
        }

        double dt = next_dt_;
        for (;;) {
            for (int i = 1; i < s; ++i) {
                const auto& a = t_->coupling[static_cast<std::size_t>(i)];
                for (std::size_t c = 0; c < n; ++c) {
                    double acc = 0.0;
                    for (int j = 0; j < i; ++j) acc += a[static_cast<std::size_t>(j)] * k_[static_cast<std::size_t>(j)][c];
                    stage_[c] = y0[c] + dt * acc;
                }
                rhs(stage_, k_[static_cast<std::size_t>(i)]);
                ++out.evaluations;
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < n; ++c) {
                double inc = 0.0, err = 0.0;
                for (int j = 0; j < s; ++j) {
                    inc += t_->weights[static_cast<std::size_t>(j)] * k_[static_cast<std::size_t>(j)][c];
                    err += t_->error_weights[static_cast<std::size_t>(j)] * k_[static_cast<std::size_t>(j)][c];
                }
                y1[c] = y0[c] + dt * inc;
                const double sc = atol_ + rtol_ * std::max(std::abs(y0[c]), std::abs(y1[c]));
                const double e = dt * err / sc;
                sum += e * e;
            }
            const double err = n ? std::sqrt(sum / static_cast<double>(n)) : 0.0;

            if (err <= 1.0) {
                double fac = err > 0.0 ? safety_ * std::pow(err, -alpha_) * std::pow(previous_error_, beta_) : max_factor_;
                fac = std::clamp(fac, min_factor_, out.rejected ? 1.0 : max_factor_);
                previous_error_ = std::max(err, 1e-4);
                next_dt_ = dt * fac;
                out.dt = dt;
                out.error = err;
                return out;
            }

            ++out.rejected;
            const double fac = std::isfinite(err) ? std::max(min_factor_, safety_ * std::pow(err, -reject_exponent_)) : min_factor_;
            dt *= fac;
            if (!(dt > 0.0) || out.rejected > max_rejections_)
                throw NumericalError("adaptive step rejected " + std::to_string(out.rejected) +
                                     " times; step size collapsed to " + std::to_string(dt));
        }
    }

private:
    /// Starting step from the size of y and of its first two derivatives.
    template <typename Rhs>
    double initial_step(Rhs& rhs, const std::vector<double>& y0, const std::vector<double>& f0) {
        const std::size_t n = y0.size();
        if (n == 0) return 1e-6;
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double sc = atol_ + rtol_ * std::abs(y0[c]);
            d0 += (y0[c] / sc) * (y0[c] / sc);
            d1 += (f0[c] / sc) * (f0[c] / sc);
        }
        d0 = std::sqrt(d0 / static_cast<double>(n));
        d1 = std::sqrt(d1 / static_cast<double>(n));
        const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;

        std::vector<double> y(n), f1(n);
        for (std::size_t c = 0; c < n; ++c) y[c] = y0[c] + h0 * f0[c];
        rhs(y, f1);
        double d2 = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            const double sc = atol_ + rtol_ * std::abs(y0[c]);
            const double d = (f1[c] - f0[c]) / sc;
            d2 += d * d;
        }
        d2 = std::sqrt(d2 / static_cast<double>(n)) / h0;
        const double m = std::max(d1, d2);
        const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 1.0 / (t_->order + 1));
        return std::min(100.0 * h0, h1);
    }

    RungeKuttaScheme scheme_;
    const EmbeddedTableau* t_;
    double atol_;
    double rtol_;
    double alpha_ = 0.0, beta_ = 0.0, reject_exponent_ = 0.0;
    double safety_ = 0.9;
    double min_factor_ = 0.2;
    double max_factor_ = 5.0;
    int max_rejections_ = 60;
    double previous_error_ = 1e-4;
    double next_dt_ = 0.0;
    std::vector<std::vector<double>> k_;
    std::vector<double> stage_;
};

}  // namespace bodyfit

#endif  // BODYFIT_INTEGRATOR_HPP
