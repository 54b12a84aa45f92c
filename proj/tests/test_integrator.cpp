#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bodyfit/integrator.hpp"

using namespace bodyfit;

namespace {

void harmonic(const std::vector<double>& y, std::vector<double>& dy) {
    dy.resize(2);
    dy[0] = y[1];
    dy[1] = -y[0];
}

/// Local error of one forced step of size dt for the harmonic oscillator from (1, 0).
double one_step_error(RungeKuttaScheme s, double dt) {
    AdaptiveIntegrator it(s, 1e6, 0.0);
    it.set_next_dt(dt);
    std::vector<double> y1;
    const auto out = it.step(harmonic, {1.0, 0.0}, y1);
    EXPECT_EQ(out.dt, dt);
    return std::hypot(y1[0] - std::cos(dt), y1[1] + std::sin(dt));
}

}  // namespace

TEST(Integrator, TableauxAreConsistent) {
    for (auto s : {RungeKuttaScheme::bogacki_shampine_3_2, RungeKuttaScheme::dormand_prince_5_4}) {
        const auto& t = tableau(s);
        double w = 0.0, e = 0.0;
        for (int i = 0; i < t.stages; ++i) {
            w += t.weights[static_cast<std::size_t>(i)];
            e += t.error_weights[static_cast<std::size_t>(i)];
            double row = 0.0;
            for (double a : t.coupling[static_cast<std::size_t>(i)]) row += a;
            EXPECT_NEAR(row, t.nodes[static_cast<std::size_t>(i)], 1e-15);
        }
        EXPECT_NEAR(w, 1.0, 1e-15);
        EXPECT_NEAR(e, 0.0, 1e-15);
    }
}

TEST(Integrator, LocalErrorOrder) {
    for (auto [s, order] : {std::pair{RungeKuttaScheme::bogacki_shampine_3_2, 3},
                            std::pair{RungeKuttaScheme::dormand_prince_5_4, 5}}) {
        const double e1 = one_step_error(s, 0.1), e2 = one_step_error(s, 0.05);
        const double observed = std::log2(e1 / e2);
        EXPECT_NEAR(observed, order + 1, 0.3) << scheme_name(s);
    }
}

TEST(Integrator, AdaptiveSolutionMeetsTolerance) {
    for (auto s : {RungeKuttaScheme::bogacki_shampine_3_2, RungeKuttaScheme::dormand_prince_5_4}) {
        AdaptiveIntegrator it(s, 1e-9, 1e-9);
        std::vector<double> y{1.0, 0.0}, next;
        double t = 0.0;
        int steps = 0;
        while (t < 2.0 * std::numbers::pi) {
            const auto out = it.step(harmonic, y, next);
            EXPECT_LE(out.error, 1.0);
            t += out.dt;
            y.swap(next);
            ++steps;
        }
        EXPECT_NEAR(y[0], std::cos(t), 1e-5) << scheme_name(s);
        EXPECT_NEAR(y[1], -std::sin(t), 1e-5) << scheme_name(s);
        EXPECT_GT(steps, 5);
    }
}

TEST(Integrator, ExponentialDecay) {
    AdaptiveIntegrator it(RungeKuttaScheme::bogacki_shampine_3_2, 1e-10, 1e-8);
    auto rhs = [](const std::vector<double>& y, std::vector<double>& dy) {
        dy.resize(1);
        dy[0] = -3.0 * y[0];
    };
    std::vector<double> y{2.0}, next;
    double t = 0.0;
    while (t < 1.0) {
        const auto out = it.step(rhs, y, next);
        t += out.dt;
        y.swap(next);
    }
    EXPECT_NEAR(y[0], 2.0 * std::exp(-3.0 * t), 1e-6);
}

TEST(Integrator, OversizedStepIsRejectedAndShrunk) {
    AdaptiveIntegrator it(RungeKuttaScheme::bogacki_shampine_3_2, 1e-10, 0.0);
    it.set_next_dt(1.0);
    std::vector<double> y1;
    const auto out = it.step(harmonic, {1.0, 0.0}, y1);
    EXPECT_GT(out.rejected, 0);
    EXPECT_LT(out.dt, 1.0);
    EXPECT_LE(out.error, 1.0);
    // No growth directly after a rejection.
    EXPECT_LE(it.next_dt(), out.dt);
    EXPECT_EQ(out.evaluations, 1 + 3 * (out.rejected + 1));
}

TEST(Integrator, InitialStepIsEstimatedOnce) {
    AdaptiveIntegrator it;
    EXPECT_EQ(it.next_dt(), 0.0);
    std::vector<double> y1;
    const auto first = it.step(harmonic, {1.0, 0.0}, y1);
    EXPECT_GT(first.dt, 0.0);
    EXPECT_GT(it.next_dt(), 0.0);
    std::vector<double> y2;
    const auto second = it.step(harmonic, y1, y2);
    EXPECT_EQ(second.evaluations, 1 + 3 * (second.rejected + 1));
}

TEST(Integrator, NonFiniteRightHandSideThrows) {
    AdaptiveIntegrator it(RungeKuttaScheme::bogacki_shampine_3_2, 1e-6, 1e-3);
    it.set_next_dt(0.1);
    auto bad = [](const std::vector<double>& y, std::vector<double>& dy) { dy.assign(y.size(), std::nan("")); };
    std::vector<double> y1;
    EXPECT_THROW(it.step(bad, {1.0}, y1), NumericalError);
}

TEST(Integrator, SchemeNamesRoundTrip) {
    EXPECT_EQ(parse_scheme("bs32"), RungeKuttaScheme::bogacki_shampine_3_2);
    EXPECT_EQ(parse_scheme(scheme_name(RungeKuttaScheme::dormand_prince_5_4)), RungeKuttaScheme::dormand_prince_5_4);
    EXPECT_THROW(parse_scheme("euler"), Error);
    EXPECT_THROW(AdaptiveIntegrator(RungeKuttaScheme::bogacki_shampine_3_2, 0.0, 1e-3), Error);
}
