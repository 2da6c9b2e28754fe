#pragma once

#include "gapfield/geometry.hpp"
#include "gapfield/grid.hpp"
#include "gapfield/solver.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gapfield {

struct BoundarySpec {
    BoundaryKind kind = BoundaryKind::Neumann;
    DataProfile profile = DataProfile::Bump;
    double phi0 = 1.0;
    double alpha = 0.8;

    bool operator==(const BoundarySpec&) const = default;
    BoundaryData realize(const GapGeometry& geom) const;
    double phi_at_origin() const { return profile == DataProfile::Power ? 0.0 : phi0; }
};

struct SweepSpec {
    GapGeometry geometry;  // epsilon is replaced by each sweep value
    BoundarySpec boundary;
    std::vector<double> epsilons;
    ResolutionPolicy policy;
    SolveOptions solve;
    double rtilde_fraction = 0.5;       // Rtilde = fraction * R
    double richardson_tolerance = 0.1;  // coarse/fine discrepancy that flags a record
    std::uint64_t seed = 0;
    int threads = 0;                    // 0: GAPFIELD_THREADS or hardware concurrency
};

struct SweepRecord {
    double epsilon = 0.0;
    double max_grad = 0.0;
    double argmax_r = 0.0;
    double argmax_z = 0.0;
    double max_dn_u = 0.0;
    double osc_gap = 0.0;        // osc u over Omega_Rtilde
    double osc_ubar_core = 0.0;  // osc of the gap average over B'_{sqrt(eps)/4}
    double energy = 0.0;
    double envelope_stat = 0.0;  // max |grad u| sqrt(eta) over gap nodes with |x'| <= Rtilde
    bool flagged = false;

    // Not serialized to CSV.
    double coarse_max_grad = 0.0;
    std::size_t nodes = 0;
    int iterations = 0;
    double residual = 0.0;
    std::string error;  // nonempty when the solve failed

    bool failed() const { return !error.empty(); }
};

/// One Neumann or Dirichlet solve per epsilon, run concurrently. Records come
/// back sorted by epsilon, descending. Individual failures are recorded; an
/// error is thrown only when every solve fails.
std::vector<SweepRecord> sweep(const SweepSpec& spec);

/// Metrics of a single solve (no Richardson companion).
SweepRecord measure(const DiscreteField& field, const GapGeometry& geom, double rtilde);

/// Worker count: the GAPFIELD_THREADS cap applied to the request.
int worker_count(int requested, std::size_t tasks);

enum class Metric { MaxGrad, MaxDnU, OscGap, OscUbarCore, Energy, EnvelopeStat };

Metric parse_metric(const std::string& name);
std::string to_string(Metric m);
double metric_value(const SweepRecord& r, Metric m);

enum class FitKind { PowerLaw, LogLaw };

struct FitResult {
    FitKind kind = FitKind::PowerLaw;
    Metric metric = Metric::MaxGrad;
    double exponent = 0.0;   // p in metric ~ eps^-p, or the slope in ln(1/eps)
    double intercept = 0.0;
    double stderr_ = 0.0;    // standard error of exponent
    double r2 = 0.0;
    int points = 0;
    std::vector<double> x, y;  // fitted abscissae and ordinates
};

/// Least squares of ln(metric) against ln(eps) over unflagged records.
FitResult fit_power_law(const std::vector<SweepRecord>& records, Metric metric);
FitResult fit_power_law(const std::vector<double>& eps, const std::vector<double>& values);
/// Least squares of metric against ln(1/eps) over unflagged records.
FitResult fit_log_law(const std::vector<SweepRecord>& records, Metric metric);
FitResult fit_log_law(const std::vector<double>& eps, const std::vector<double>& values);

struct Thresholds {
    double blowup_min = 0.4;
    double blowup_max = 0.6;
    double r2_min = 0.98;
    double stability_factor = 2.0;
    double bounded_p_max = 0.2;
    double nonblowup_p_max = 0.4;
    double lower_c0 = 0.01;
    double lower_c1 = 0.01;

    bool operator==(const Thresholds&) const = default;
};

struct Certificate {
    std::string name;
    bool passed = false;
    double margin = 0.0;    // how far inside (> 0) or outside (< 0) the criterion
    double estimate = 0.0;  // fitted exponent, constant or ratio the verdict rests on
    std::string detail;
};

/// Lower bound: min osc_ubar_core / |phi0| >= c0 and min max_grad sqrt(eps) / |phi0| >= c1.
/// Throws UnsupportedInput when phi0 = 0.
Certificate lower_bound_certificate(const std::vector<SweepRecord>& records, double phi0,
                                    const Thresholds& t = {});
/// envelope_stat and max_dn_u each vary by at most the stability factor.
Certificate envelope_certificate(const std::vector<SweepRecord>& records, const Thresholds& t = {});
/// Power law of max_grad with p in [blowup_min, blowup_max] and R^2 >= r2_min.
Certificate blowup_certificate(const std::vector<SweepRecord>& records, const Thresholds& t = {});
/// osc_gap affine in ln(1/eps) with R^2 >= r2_min and positive slope.
Certificate loglaw_certificate(const std::vector<SweepRecord>& records, const Thresholds& t = {});
/// max_grad varies by at most the stability factor and p < bounded_p_max.
Certificate bounded_certificate(const std::vector<SweepRecord>& records, const Thresholds& t = {});
/// p <= nonblowup_p_max and the osc_gap log slope within two standard errors of 0.
Certificate nonblowup_certificate(const std::vector<SweepRecord>& records, const Thresholds& t = {});

/// max / min of a metric over unflagged records (1 when all vanish).
double variation_ratio(const std::vector<SweepRecord>& records, Metric metric);

/// Records that enter fits: unflagged and finite.
std::vector<SweepRecord> usable(const std::vector<SweepRecord>& records);

}  // namespace gapfield
