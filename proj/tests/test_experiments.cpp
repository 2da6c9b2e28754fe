#include "gapfield/error.hpp"
#include "gapfield/experiments.hpp"
#include "gapfield/reduced.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

using namespace gapfield;

namespace {

SweepSpec neumann_spec(int n, std::vector<double> eps, double phi0 = 1.0) {
    SweepSpec s;
    s.geometry.n = n;
    s.boundary.kind = BoundaryKind::Neumann;
    s.boundary.phi0 = phi0;
    s.epsilons = std::move(eps);
    return s;
}

const std::vector<double> kFive = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
const std::vector<double> kFour = {1e-2, 1e-3, 1e-4, 1e-5};

SweepRecord record(double eps, double grad) {
    SweepRecord r;
    r.epsilon = eps;
    r.max_grad = grad;
    r.max_dn_u = 1.0;
    r.osc_gap = 1.0;
    r.osc_ubar_core = 1.0;
    r.energy = 1.0;
    r.envelope_stat = 1.0;
    return r;
}

}  // namespace

TEST(Fit, ExactPowerLaw) {
    const std::vector<double> v = {10.0, 10.0 * std::sqrt(10.0), 100.0, 100.0 * std::sqrt(10.0)};
    const FitResult f = fit_power_law(kFour, v);
    EXPECT_NEAR(f.exponent, 0.5, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    EXPECT_NEAR(f.intercept, std::log(10.0) + 0.5 * std::log(1e-2), 1e-12);
    EXPECT_NEAR(f.stderr_, 0.0, 1e-12);
    EXPECT_EQ(f.points, 4);
    EXPECT_EQ(f.kind, FitKind::PowerLaw);
}

TEST(Fit, ConstantMetricHasZeroExponent) {
    const FitResult f = fit_power_law(kFour, {2.0, 2.0, 2.0, 2.0});
    EXPECT_NEAR(f.exponent, 0.0, 1e-15);
    EXPECT_EQ(f.r2, 1.0);
}

TEST(Fit, Errors) {
    EXPECT_THROW(fit_power_law({1e-2, 1e-3, 1e-4}, {1.0, 2.0, 3.0}), InputError);
    EXPECT_THROW(fit_power_law(kFour, {1.0, 0.0, 2.0, 3.0}), InputError);
    EXPECT_THROW(fit_power_law(kFour, {1.0, -1.0, 2.0, 3.0}), InputError);
    EXPECT_THROW(fit_power_law(kFour, {1.0, 2.0}), InputError);
    EXPECT_THROW(fit_log_law(kFour, {1.0, 2.0, 3.0}), InputError);
}

TEST(Fit, ExactLogLaw) {
    std::vector<double> v;
    for (double e : kFour) v.push_back(3.0 * std::log(1.0 / e) + 1.0);
    const FitResult f = fit_log_law(kFour, v);
    EXPECT_NEAR(f.exponent, 3.0, 1e-12);
    EXPECT_NEAR(f.intercept, 1.0, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    EXPECT_EQ(f.kind, FitKind::LogLaw);
}

TEST(Fit, OracleOscillationSlope) {
    std::vector<double> eps, osc;
    for (double e : {1e-9, 1e-10, 1e-11, 1e-12, 1e-13}) {
        eps.push_back(e);
        osc.push_back(radial_oracle(e, 2, 4.0, 0.5).oscillation());
    }
    const FitResult f = fit_log_law(eps, osc);
    EXPECT_NEAR(f.exponent, 1.0, 1e-7);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
}

TEST(Fit, RecordsSkipFlaggedAndFailed) {
    std::vector<SweepRecord> recs;
    for (double e : kFour) recs.push_back(record(e, 1.0 / std::sqrt(e)));
    SweepRecord bad = record(5e-4, 1e6);
    bad.flagged = true;
    recs.push_back(bad);
    SweepRecord failed = record(2e-4, std::nan(""));
    failed.error = "no convergence";
    failed.flagged = true;
    recs.push_back(failed);
    EXPECT_EQ(usable(recs).size(), 4u);
    const FitResult f = fit_power_law(recs, Metric::MaxGrad);
    EXPECT_EQ(f.points, 4);
    EXPECT_NEAR(f.exponent, 0.5, 1e-12);
}

TEST(Metrics, NamesRoundTrip) {
    for (Metric m : {Metric::MaxGrad, Metric::MaxDnU, Metric::OscGap, Metric::OscUbarCore, Metric::Energy,
                     Metric::EnvelopeStat})
        EXPECT_EQ(parse_metric(to_string(m)), m);
    EXPECT_EQ(to_string(Metric::MaxGrad), "max_grad");
    EXPECT_THROW(parse_metric("gradient"), InputError);
}

TEST(Certificates, SyntheticBlowup) {
    std::vector<SweepRecord> recs;
    for (double e : kFour) recs.push_back(record(e, 0.3 / std::sqrt(e)));
    const Certificate b = blowup_certificate(recs);
    EXPECT_TRUE(b.passed);
    EXPECT_NEAR(b.estimate, 0.5, 1e-12);
    EXPECT_GT(b.margin, 0.0);
    EXPECT_FALSE(bounded_certificate(recs).passed);
    EXPECT_FALSE(nonblowup_certificate(recs).passed);
    EXPECT_TRUE(envelope_certificate(recs).passed);
    EXPECT_TRUE(lower_bound_certificate(recs, 1.0).passed);
    EXPECT_FALSE(lower_bound_certificate(recs, 200.0).passed);
    EXPECT_THROW(lower_bound_certificate(recs, 0.0), UnsupportedInput);
}

TEST(Certificates, VariationRatio) {
    std::vector<SweepRecord> recs;
    for (double e : kFour) recs.push_back(record(e, 0.0));
    EXPECT_EQ(variation_ratio(recs, Metric::MaxGrad), 1.0);
    recs[2].max_grad = 1.0;
    EXPECT_TRUE(std::isinf(variation_ratio(recs, Metric::MaxGrad)));
    for (std::size_t k = 0; k < recs.size(); ++k) recs[k].max_grad = 1.0 + k;
    EXPECT_DOUBLE_EQ(variation_ratio(recs, Metric::MaxGrad), 4.0);
}

TEST(Sweep, ZeroDataGivesZeroGradient) {
    const std::vector<SweepRecord> recs = sweep(neumann_spec(3, kFive, 0.0));
    ASSERT_EQ(recs.size(), 5u);
    for (const auto& r : recs) {
        EXPECT_FALSE(r.failed());
        EXPECT_LE(r.max_grad, 1e-8);
    }
    EXPECT_THROW(lower_bound_certificate(recs, 0.0), UnsupportedInput);
    EXPECT_TRUE(envelope_certificate(recs).passed);
}

TEST(Sweep, GradientIncreasesAsGapCloses) {
    const std::vector<SweepRecord> recs = sweep(neumann_spec(3, kFive));
    ASSERT_EQ(recs.size(), 5u);
    for (std::size_t k = 0; k < recs.size(); ++k) {
        EXPECT_EQ(recs[k].epsilon, kFive[k]);
        EXPECT_FALSE(recs[k].flagged);
        EXPECT_TRUE(std::isfinite(recs[k].energy));
        if (k > 0) EXPECT_GT(recs[k].max_grad, recs[k - 1].max_grad);
    }
    const FitResult f = fit_power_law(recs, Metric::MaxGrad);
    EXPECT_GE(f.exponent, 0.4);
    EXPECT_LE(f.exponent, 0.6);
}

TEST(Sweep, DirichletStaysBounded) {
    SweepSpec s = neumann_spec(2, kFive);
    s.boundary.kind = BoundaryKind::Dirichlet;
    const std::vector<SweepRecord> recs = sweep(s);
    EXPECT_LE(variation_ratio(recs, Metric::MaxGrad), 2.0);
    EXPECT_LT(fit_power_law(recs, Metric::MaxGrad).exponent, 0.2);
    EXPECT_TRUE(bounded_certificate(recs).passed);
    EXPECT_FALSE(blowup_certificate(recs).passed);
}

TEST(Sweep, EnvelopeNegativeControlUnderResolved) {
    // Four cells across the gap should break the envelope uniformity.
    SweepSpec s = neumann_spec(2, kFive);
    s.policy.n_gap = 4;
    EXPECT_FALSE(envelope_certificate(sweep(s)).passed);
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
    SweepSpec a = neumann_spec(2, kFive);
    a.threads = 1;
    SweepSpec b = a;
    b.threads = 5;
    const auto ra = sweep(a), rb = sweep(b);
    ASSERT_EQ(ra.size(), rb.size());
    for (std::size_t k = 0; k < ra.size(); ++k) {
        EXPECT_EQ(ra[k].epsilon, rb[k].epsilon);
        EXPECT_EQ(ra[k].max_grad, rb[k].max_grad);
        EXPECT_EQ(ra[k].osc_gap, rb[k].osc_gap);
        EXPECT_EQ(ra[k].osc_ubar_core, rb[k].osc_ubar_core);
        EXPECT_EQ(ra[k].energy, rb[k].energy);
        EXPECT_EQ(ra[k].envelope_stat, rb[k].envelope_stat);
    }
    const FitResult fa = fit_power_law(ra, Metric::MaxGrad), fb = fit_power_law(rb, Metric::MaxGrad);
    EXPECT_EQ(fa.exponent, fb.exponent);
    EXPECT_EQ(fa.r2, fb.r2);
}

TEST(Sweep, ScaleEquivariance) {
    const auto r1 = sweep(neumann_spec(2, kFive, 1.0));
    const auto r2 = sweep(neumann_spec(2, kFive, 2.5));
    for (std::size_t k = 0; k < r1.size(); ++k) {
        EXPECT_NEAR(r2[k].max_grad, 2.5 * r1[k].max_grad, 1e-8 * r2[k].max_grad);
        EXPECT_NEAR(r2[k].osc_gap, 2.5 * r1[k].osc_gap, 1e-8 * r2[k].osc_gap);
        EXPECT_NEAR(r2[k].osc_ubar_core, 2.5 * r1[k].osc_ubar_core, 1e-8 * r2[k].osc_ubar_core);
        EXPECT_NEAR(r2[k].energy, 6.25 * r1[k].energy, 1e-8 * r2[k].energy);
    }
    EXPECT_NEAR(fit_power_law(r1, Metric::MaxGrad).exponent, fit_power_law(r2, Metric::MaxGrad).exponent, 1e-8);
}

TEST(Sweep, Preconditions) {
    EXPECT_THROW(sweep(neumann_spec(2, {1e-2, 1e-3, 1e-4})), InputError);
    EXPECT_THROW(sweep(neumann_spec(2, {1e-4, 1e-3, 1e-2, 1e-1})), InputError);
    EXPECT_THROW(sweep(neumann_spec(2, {1.0, 1e-2, 1e-3, 1e-4})), InputError);
    EXPECT_THROW(sweep(neumann_spec(2, {1e-2, 1e-3, 1e-3, 1e-4})), InputError);
}

TEST(Sweep, AllSolvesFailing) {
    SweepSpec s = neumann_spec(2, kFour);
    s.policy.max_unknowns = 10;
    try {
        sweep(s);
        FAIL() << "expected SolverError";
    } catch (const SolverError& e) {
        EXPECT_NE(std::string(e.what()).find("every solve"), std::string::npos);
    }
}

TEST(Threads, EnvironmentCap) {
    ::setenv("GAPFIELD_THREADS", "2", 1);
    EXPECT_EQ(worker_count(8, 10), 2);
    EXPECT_EQ(worker_count(1, 10), 1);
    const int hw = std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
    EXPECT_EQ(worker_count(0, 10), std::min(2, hw));
    ::setenv("GAPFIELD_THREADS", "0", 1);
    EXPECT_EQ(worker_count(3, 10), 3);
    ::unsetenv("GAPFIELD_THREADS");
    EXPECT_EQ(worker_count(8, 3), 3);
    EXPECT_EQ(worker_count(4, 0), 1);
    EXPECT_GE(worker_count(0, 100), 1);
}
