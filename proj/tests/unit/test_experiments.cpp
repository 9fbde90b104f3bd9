#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spectral/experiments.hpp"

using namespace spectral;

namespace {

ExperimentPlan outlier_plan() {
    ExperimentPlan p;
    p.model.sigma = 1.0;
    p.model.spike_law = SpectralMeasure::uniform(2.0, 3.0);
    p.model.rank_rule = RankRule::power(0.4);
    p.n_grid = {100, 200};
    p.trials_per_n = 3;
    p.master_seed = 42;
    p.spike_intervals = {{2.25, 2.75}};
    p.intervals = {{3.6, 10.0}};
    return p;
}

ExperimentPlan rate_plan() {
    ExperimentPlan p;
    p.model.sigma = 1.0;
    p.n_grid = {16, 32, 64};
    p.trials_per_n = 100;
    p.master_seed = 7;
    p.probe_points = {{1.0, 1.0}};
    return p;
}

} // namespace

TEST(MeanStieltjes, Examples) {
    const Spectrum two{{1.0, -1.0}};
    const cplx g = estimate_mean_stieltjes(two, cplx(0.0, 1.0));
    EXPECT_NEAR(g.real(), 0.0, 1e-15);
    EXPECT_NEAR(g.imag(), 0.5, 1e-15);
    EXPECT_GT(estimate_mean_stieltjes(Spectrum{{-3.0, 0.1, 7.0}}, cplx(2.0, 1e-3)).imag(), 0.0);
    EXPECT_THROW(estimate_mean_stieltjes(two, cplx(0.5, 0.0)), ValidationError);
}

TEST(MeanStieltjes, WignerSampleNearClosedForm) {
    const std::size_t n = 4000;
    const auto w = assemble_deformed(sample_goe(n, 1.0, 77), SymmetricMatrix(n));
    const cplx g = estimate_mean_stieltjes(eigenvalues_symmetric(w), cplx(3.0, 1e-9));
    EXPECT_NEAR(g.real(), -0.381966, 0.02);
}

TEST(FitLine, ExactLine) {
    const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
    const auto f = fit_line(x, y);
    EXPECT_NEAR(f.slope, 2.0, 1e-14);
    EXPECT_NEAR(f.intercept, 1.0, 1e-14);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-14);
    EXPECT_NEAR(f.band_lo, 2.0, 1e-12);
    EXPECT_THROW(fit_line(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
}

TEST(Experiments, OutlierReportsShareTrials) {
    const auto plan = outlier_plan();
    const auto [mapping, counting] = run_outlier_experiments(plan);
    ASSERT_EQ(mapping.records.size(), 6u);
    EXPECT_EQ(mapping.mapping.size(), 2u);
    EXPECT_EQ(mapping.mapping[1].r, 8u);
    EXPECT_EQ(mapping.mapping_rows.size(), 3u * 6u + 3u * 8u);
    EXPECT_EQ(counting.counting.size(), 4u);
    for (const auto& rec : mapping.records) {
        EXPECT_EQ(rec.seed, derive_seed(42, {rec.n, rec.trial}));
        EXPECT_LE(rec.trace_rel_err, 1e-6);
        EXPECT_EQ(rec.digest.size(), 16u);
    }
    EXPECT_EQ(mapping.csv(), run_mapping_experiment(plan).csv());
    EXPECT_EQ(counting.csv(), run_counting_experiment(plan).csv());
    EXPECT_EQ(mapping.csv().substr(0, mapping.csv().find('\n')), "N,trial,seed,j,lambda_S,phi_pred,lambda_W,abs_err");
    EXPECT_EQ(counting.csv().substr(0, counting.csv().find('\n')), "N,trial,seed,delta_lo,delta_hi,empirical,predicted");
    EXPECT_NEAR(counting.counting[1].predicted, 0.5, 1e-9);
    EXPECT_DOUBLE_EQ(counting.counting[0].predicted, 0.0);
}

TEST(Experiments, DeterministicAcrossThreadCounts) {
    auto plan = outlier_plan();
    plan.threads = 1;
    const auto a = run_mapping_experiment(plan);
    plan.threads = 4;
    const auto b = run_mapping_experiment(plan);
    EXPECT_EQ(a.csv(), b.csv());
    EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
    plan.master_seed = 43;
    EXPECT_NE(a.csv(), run_mapping_experiment(plan).csv());
}

TEST(Experiments, ZeroSpikeControl) {
    ExperimentPlan p;
    p.model.sigma = 1.0;
    p.n_grid = {1000};
    p.trials_per_n = 3;
    const auto rep = run_mapping_experiment(p);
    EXPECT_TRUE(rep.mapping_rows.empty());
    EXPECT_NEAR(rep.mapping[0].median_lambda1, 2.0, 0.1);
    EXPECT_TRUE(std::isnan(rep.mapping[0].median_max_err));
    EXPECT_TRUE(rep.to_json()["per_n"][0]["median_max_err"].is_null());
}

TEST(Experiments, CountingRejectsBulkIntervals) {
    auto p = outlier_plan();
    p.intervals = {{1.5, 2.6}};
    EXPECT_THROW(run_counting_experiment(p), ValidationError);
    p.intervals.clear();
    p.spike_intervals.clear();
    EXPECT_THROW(run_counting_experiment(p), ValidationError);
}

TEST(Experiments, RatePreconditions) {
    auto p = rate_plan();
    p.n_grid = {64};
    EXPECT_THROW(run_rate_experiment(p), ValidationError);
    p = rate_plan();
    p.trials_per_n = 99;
    EXPECT_THROW(run_rate_experiment(p), ValidationError);
    p = rate_plan();
    p.probe_points = {{1.0, 0.05}};
    EXPECT_THROW(run_rate_experiment(p), ValidationError);
}

TEST(Experiments, RateReport) {
    const auto rep = run_rate_experiment(rate_plan());
    ASSERT_EQ(rep.rate.size(), 3u);
    ASSERT_EQ(rep.residual_fits.size(), 1u);
    EXPECT_LT(rep.variance_fits[0].slope, -0.7);
    EXPECT_EQ(rep.csv().substr(0, rep.csv().find('\n')), "N,z_re,z_im,residual,n_trials");
    EXPECT_EQ(rep.to_json()["fits"].size(), 1u);
    for (const auto& a : rep.rate) EXPECT_LT(a.residual, 0.05);
}

TEST(Experiments, PlanValidation) {
    auto p = outlier_plan();
    p.n_grid = {200, 100};
    EXPECT_THROW(p.validate(), ValidationError);
    p = outlier_plan();
    p.trials_per_n = 0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = outlier_plan();
    p.model.rank_rule = RankRule::constant(10);
    p.n_grid = {20};
    EXPECT_THROW(p.validate(), ValidationError);
}
