#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "spectral/outlier_theory.hpp"

using namespace spectral;

namespace {

const SpectralMeasure kDelta0 = SpectralMeasure::delta(0.0);

const LimitLaw& semicircle_law() {
    static const LimitLaw law = make_limit_law(kDelta0, 1.0);
    return law;
}

const LimitLaw& uniform_law() {
    static const LimitLaw law = make_limit_law(SpectralMeasure::uniform(-1.0, 1.0), 1.0);
    return law;
}

EnsembleSpec uniform_spikes(std::size_t r) {
    EnsembleSpec s;
    s.n = 4 * r;
    s.sigma = 1.0;
    s.spike_law = SpectralMeasure::uniform(2.0, 3.0);
    s.rank_rule = RankRule::constant(r);
    return s;
}

} // namespace

TEST(Phi, Examples) {
    EXPECT_DOUBLE_EQ(phi_eval(kDelta0, 1.0, 2.0), 2.5);
    EXPECT_DOUBLE_EQ(phi_eval(kDelta0, 1.0, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(phi_eval(kDelta0, 2.0, 4.0), 5.0);
    EXPECT_DOUBLE_EQ(phi_prime(kDelta0, 1.0, 2.0), 0.75);
    EXPECT_DOUBLE_EQ(phi_prime(kDelta0, 1.0, 1.0), 0.0);
    EXPECT_THROW(phi_eval(kDelta0, 1.0, 0.0), DomainError);
    EXPECT_THROW(phi_prime(SpectralMeasure::uniform(-1, 1), 1.0, 0.5), DomainError);
}

TEST(Phi, ReciprocalOfOmegaPrime) {
    const auto& law = semicircle_law();
    const double w = omega_eval(law, 2.5);
    EXPECT_NEAR(phi_prime(kDelta0, 1.0, w) * omega_prime(law, 2.5), 1.0, 1e-4);
}

TEST(Phi, InversePairIdentity) {
    for (const LimitLaw* law : {&semicircle_law(), &uniform_law()}) {
        const double lo = law->lower_edge(), hi = law->upper_edge();
        for (int k = 0; k < 50; ++k) {
            const double off = 0.1 + 4.0 * (k / 2) / 24.0;
            const double x = k % 2 == 0 ? hi + off : lo - off;
            const double w = omega_eval(*law, x);
            EXPECT_NEAR(phi_eval(law->nu0, law->sigma, w), x, 1e-6) << x;
            EXPECT_NEAR(phi_prime(law->nu0, law->sigma, w) * omega_prime(*law, x), 1.0, 1e-4) << x;
        }
    }
}

TEST(Phi, IncreasingAboveThreshold) {
    const auto nu0 = SpectralMeasure::uniform(-1.0, 1.0);
    double prev = -1e300;
    for (int k = 0; k <= 200; ++k) {
        const double x = 1.8 + 4.0 * k / 200.0;
        ASSERT_GT(phi_prime(nu0, 1.0, x), 0.0);
        const double p = phi_eval(nu0, 1.0, x);
        EXPECT_GT(p, prev);
        prev = p;
    }
}

TEST(PredictPositions, UniformSpikes) {
    const auto spec = uniform_spikes(4);
    const auto pred = predict_outlier_positions(signal_spectrum(spec), spec, semicircle_law());
    const std::vector<double> thetas{2.875, 2.625, 2.375, 2.125};
    ASSERT_EQ(pred.mapped_positions.size(), 4u);
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(pred.mapped_positions[j], oracle::bbp(thetas[j], 1.0), 1e-12);
        EXPECT_FALSE(pred.absorbed[j]);
        EXPECT_GT(pred.mapped_positions[j], semicircle_law().upper_edge());
    }
    EXPECT_NEAR(pred.mapped_positions[0], 3.2228, 1e-4);
    EXPECT_NEAR(pred.mapped_positions[3], 2.5956, 1e-4);
    EXPECT_TRUE(std::is_sorted(pred.mapped_positions.rbegin(), pred.mapped_positions.rend()));
    EXPECT_DOUBLE_EQ(pred.bbp_edge, 2.0);
    ASSERT_TRUE(pred.mu1.has_value());
    EXPECT_TRUE(pred.within_hypotheses);
}

TEST(PredictPositions, SubcriticalSpikeIsAbsorbed) {
    EnsembleSpec spec;
    spec.n = 8;
    spec.spike_law = SpectralMeasure::delta(0.5);
    spec.rank_rule = RankRule::constant(1);
    const auto pred = predict_outlier_positions(signal_spectrum(spec), spec, semicircle_law());
    ASSERT_EQ(pred.absorbed.size(), 1u);
    EXPECT_TRUE(pred.absorbed[0]);
    EXPECT_NEAR(pred.mapped_positions[0], 2.0, 1e-3);
    EXPECT_FALSE(pred.mu1.has_value());
}

TEST(PredictPositions, NoSpikes) {
    EnsembleSpec spec;
    spec.n = 8;
    const auto pred = predict_outlier_positions(signal_spectrum(spec), spec, semicircle_law());
    EXPECT_TRUE(pred.mapped_positions.empty());
    EXPECT_FALSE(pred.mu1.has_value());
}

TEST(PredictPositions, MultiIntervalSpikeLawIsLabelled) {
    auto spec = uniform_spikes(4);
    spec.spike_law = add(scaled(SpectralMeasure::uniform(2.0, 2.5), 0.5), scaled(SpectralMeasure::uniform(3.0, 3.5), 0.5));
    const auto pred = predict_outlier_positions(signal_spectrum(spec), spec, semicircle_law());
    EXPECT_FALSE(pred.within_hypotheses);
    EXPECT_EQ(to_json(pred)["hypotheses"], "outside stated hypotheses");
}

TEST(OutlierMeasure, UniformSpikeLaw) {
    const auto& law = semicircle_law();
    const auto nu1 = subtract(SpectralMeasure::uniform(2.0, 3.0), kDelta0);
    const auto mu1 = predict_outlier_measure(nu1, law);
    EXPECT_NEAR(mu1.off_bulk.hull().lo, 2.5, 1e-12);
    EXPECT_NEAR(mu1.off_bulk.hull().hi, 10.0 / 3.0, 1e-12);
    EXPECT_NEAR(mu1.off_bulk.total_mass(), 1.0, 1e-9);
    EXPECT_NEAR(mu1.mass_on({phi_eval(kDelta0, 1.0, 2.5), phi_eval(kDelta0, 1.0, 3.0)}), 0.5, 1e-9);
    EXPECT_DOUBLE_EQ(mu1.bulk_lump, -1.0);
    EXPECT_NEAR(mu1.mass_on({-5.0, 5.0}), 0.0, 1e-9);
    EXPECT_THROW(mu1.mass_on({0.0, 3.0}), DomainError);
}

TEST(OutlierMeasure, DensityRoutesAgree) {
    const auto& law = semicircle_law();
    const auto nu1 = subtract(SpectralMeasure::uniform(2.0, 3.0), kDelta0);
    const auto mu1 = predict_outlier_measure(nu1, law);
    for (int k = 0; k < 50; ++k) {
        const double x = 2.51 + (10.0 / 3.0 - 2.52) * k / 49.0;
        EXPECT_NEAR(mu1.off_bulk.density_at(x), outlier_density_via_omega(nu1, law, x), 1e-4) << x;
    }
}

TEST(OutlierMeasure, CompositionWithOmega) {
    const auto& law = semicircle_law();
    const auto nu1 = subtract(SpectralMeasure::uniform(2.0, 3.0), kDelta0);
    const auto mu1 = predict_outlier_measure(nu1, law);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(2.05, 3.8);
    for (int k = 0; k < 20; ++k) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        const double lhs = mu1.mass_on({a, b});
        const double rhs = signed_mass_on(nu1, {omega_eval(law, a), omega_eval(law, b)});
        EXPECT_NEAR(lhs, rhs, 1e-6) << a << " " << b;
    }
}

TEST(OutlierMeasure, AtomicSpikes) {
    const auto nu1 = subtract(SpectralMeasure::atomic({{2.0, 0.5}, {4.0, 0.5}}), kDelta0);
    const auto mu1 = predict_outlier_measure(nu1, semicircle_law());
    ASSERT_EQ(mu1.off_bulk.atoms().size(), 2u);
    EXPECT_DOUBLE_EQ(mu1.off_bulk.atoms()[0].location, 2.5);
    EXPECT_DOUBLE_EQ(mu1.off_bulk.atoms()[1].location, 4.25);
}

TEST(OutlierMeasure, Errors) {
    const auto overlap = subtract(SpectralMeasure::uniform(-1.0, 3.0), kDelta0);
    EXPECT_THROW(predict_outlier_measure(overlap, semicircle_law()), DomainError);
    const auto subcritical = subtract(SpectralMeasure::uniform(0.5, 3.0), kDelta0);
    EXPECT_THROW(predict_outlier_measure(subcritical, semicircle_law()), DomainError);
}

TEST(Bbp, Examples) {
    EXPECT_DOUBLE_EQ(bbp_largest(0.5, 1.0, kDelta0), 2.0);
    EXPECT_DOUBLE_EQ(bbp_largest(2.0, 1.0, kDelta0), 2.5);
    EXPECT_DOUBLE_EQ(bbp_largest(1.0, 1.0, kDelta0), 2.0);
    const auto& law = uniform_law();
    EXPECT_DOUBLE_EQ(bbp_largest(0.5, law), law.upper_edge());
    EXPECT_NEAR(bbp_largest(4.0, law), phi_eval(law.nu0, 1.0, 4.0), 1e-15);
    EXPECT_NEAR(bbp_largest(2.0, 1.0, kDelta0), bbp_largest(2.0, semicircle_law()), 1e-12);
}

TEST(OutlierJson, Fields) {
    const auto spec = uniform_spikes(4);
    const auto j = to_json(predict_outlier_positions(signal_spectrum(spec), spec, semicircle_law()));
    for (const char* key : {"mapped_positions", "bbp_edge", "mu1"}) EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["mu1"]["bulk_lump"], -1.0);
}
