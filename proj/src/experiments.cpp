#include "gapfield/experiments.hpp"

#include "gapfield/error.hpp"
#include "gapfield/reduced.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

namespace gapfield {

namespace {

ResolutionPolicy coarsened(const ResolutionPolicy& p) {
    ResolutionPolicy c = p;
    c.n_gap = std::max(2, p.n_gap / 2);
    c.lateral_fraction = p.lateral_fraction * 2.0;
    c.max_spacing = p.max_spacing * 2.0;
    c.fixed_lateral_spacing = p.fixed_lateral_spacing * 2.0;
    return c;
}

DiscreteField solve_one(const GapGeometry& geom, const BoundaryData& bc,
                        const ResolutionPolicy& policy, const SolveOptions& options) {
    const CurvilinearGrid grid = build_grid(geom, policy);
    return bc.kind == BoundaryKind::Neumann ? solve_neumann(geom, bc, grid, options)
                                            : solve_dirichlet(geom, bc, grid, options);
}

void record_failure(SweepRecord& rec, double eps, const std::string& what) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec = SweepRecord{};
    rec.epsilon = eps;
    for (double* v : {&rec.max_grad, &rec.argmax_r, &rec.argmax_z, &rec.max_dn_u, &rec.osc_gap,
                      &rec.osc_ubar_core, &rec.energy, &rec.envelope_stat})
        *v = nan;
    rec.flagged = true;
    rec.error = what;
}

SweepRecord run_one(const SweepSpec& spec, double eps) {
    GapGeometry geom = spec.geometry;
    geom.epsilon = eps;
    const BoundaryData bc = spec.boundary.realize(geom);
    const double rtilde = spec.rtilde_fraction * geom.R;
    SolveOptions options = spec.solve;
    if (options.gauge_radius < 0.0) options.gauge_radius = 0.5 * rtilde;
    SweepRecord rec;
    try {
        const DiscreteField fine = solve_one(geom, bc, spec.policy, options);
        rec = measure(fine, geom, rtilde);
        const DiscreteField coarse = solve_one(geom, bc, coarsened(spec.policy), options);
        rec.coarse_max_grad = max_gradient(coarse).value;
        const double scale = std::max(std::abs(rec.max_grad), std::abs(rec.coarse_max_grad));
        const double gap = std::abs(rec.max_grad - rec.coarse_max_grad);
        rec.flagged = scale > 0.0 && gap > spec.richardson_tolerance * std::abs(rec.max_grad);
    } catch (const std::runtime_error& e) {
        record_failure(rec, eps, e.what());
    } catch (const DomainError& e) {
        record_failure(rec, eps, e.what());
    }
    return rec;
}

void least_squares(const std::vector<double>& x, const std::vector<double>& y, FitResult& out) {
    const std::size_t n = x.size();
    if (n < 4) throw InputError("a fit needs at least 4 usable points");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
        syy += (y[k] - my) * (y[k] - my);
    }
    if (!(sxx > 0.0)) throw InputError("fit abscissae are all equal");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ssr = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = y[k] - (intercept + slope * x[k]);
        ssr += e * e;
    }
    out.exponent = slope;
    out.intercept = intercept;
    out.stderr_ = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    out.r2 = syy > 0.0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
    out.points = static_cast<int>(n);
    out.x = x;
    out.y = y;
}

void split(const std::vector<SweepRecord>& records, Metric metric, std::vector<double>& eps,
           std::vector<double>& values) {
    for (const SweepRecord& r : usable(records)) {
        eps.push_back(r.epsilon);
        values.push_back(metric_value(r, metric));
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

BoundaryData BoundarySpec::realize(const GapGeometry& geom) const {
    return profile == DataProfile::Power ? BoundaryData::power(kind, geom, phi0, alpha)
                                         : BoundaryData::bump(kind, geom, phi0);
}

SweepRecord measure(const DiscreteField& field, const GapGeometry& geom, double rtilde) {
    SweepRecord rec;
    rec.epsilon = geom.epsilon;
    const GradientMax gm = max_gradient(field);
    rec.max_grad = gm.value;
    rec.argmax_r = gm.r;
    rec.argmax_z = gm.z;
    rec.max_dn_u = gm.max_dn;
    rec.osc_gap = oscillation(field, Region::gap_patch(rtilde));
    const ReducedField ubar = average_field(field, geom);
    rec.osc_ubar_core = ubar.oscillation(0.0, 0.25 * std::sqrt(geom.epsilon));
    rec.energy = energy(field).energy;

    const CurvilinearGrid& g = *field.grid;
    const NodalGradient grad = nodal_gradient(field);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const int i = g.line_of(static_cast<int>(k));
        if (!g.gap_line[i] || std::abs(g.lateral[i]) > rtilde) continue;
        const double t = g.lateral[i];
        const double stat = std::hypot(grad.dr[k], grad.dz[k]) * std::sqrt(geom.epsilon + t * t);
        rec.envelope_stat = std::max(rec.envelope_stat, stat);
    }
    rec.nodes = g.size();
    rec.iterations = field.stats.iterations;
    rec.residual = field.residual;
    return rec;
}

int worker_count(int requested, std::size_t tasks) {
    int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GAPFIELD_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    n = std::max(1, n);
    return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(1, tasks)));
}

std::vector<SweepRecord> sweep(const SweepSpec& spec) {
    if (spec.epsilons.size() < 4) throw InputError("a sweep needs at least 4 epsilon values");
    for (std::size_t k = 1; k < spec.epsilons.size(); ++k)
        if (!(spec.epsilons[k] < spec.epsilons[k - 1]))
            throw InputError("epsilons must be descending");
    for (double e : spec.epsilons)
        if (!(e > 0.0) || !(e < spec.geometry.R * spec.geometry.R))
            throw InputError("each epsilon must lie in (0, R^2)");

    std::vector<SweepRecord> records(spec.epsilons.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(records.size());
    auto work = [&]() {
        for (std::size_t k = next++; k < records.size(); k = next++) {
            try {
                records[k] = run_one(spec, spec.epsilons[k]);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int workers = worker_count(spec.threads, records.size());
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::sort(records.begin(), records.end(),
              [](const SweepRecord& a, const SweepRecord& b) { return a.epsilon > b.epsilon; });
    if (std::all_of(records.begin(), records.end(), [](const SweepRecord& r) { return r.failed(); }))
        throw SolverError("every solve of the sweep failed: " + records.front().error, {});
    return records;
}

Metric parse_metric(const std::string& name) {
    if (name == "max_grad") return Metric::MaxGrad;
    if (name == "max_dn_u") return Metric::MaxDnU;
    if (name == "osc_gap") return Metric::OscGap;
    if (name == "osc_ubar_core") return Metric::OscUbarCore;
    if (name == "energy") return Metric::Energy;
    if (name == "envelope_stat") return Metric::EnvelopeStat;
    throw InputError("unknown metric '" + name + "'");
}

std::string to_string(Metric m) {
    switch (m) {
        case Metric::MaxGrad: return "max_grad";
        case Metric::MaxDnU: return "max_dn_u";
        case Metric::OscGap: return "osc_gap";
        case Metric::OscUbarCore: return "osc_ubar_core";
        case Metric::Energy: return "energy";
        case Metric::EnvelopeStat: return "envelope_stat";
    }
    return "max_grad";
}

double metric_value(const SweepRecord& r, Metric m) {
    switch (m) {
        case Metric::MaxGrad: return r.max_grad;
        case Metric::MaxDnU: return r.max_dn_u;
        case Metric::OscGap: return r.osc_gap;
        case Metric::OscUbarCore: return r.osc_ubar_core;
        case Metric::Energy: return r.energy;
        case Metric::EnvelopeStat: return r.envelope_stat;
    }
    return r.max_grad;
}

std::vector<SweepRecord> usable(const std::vector<SweepRecord>& records) {
    std::vector<SweepRecord> out;
    for (const SweepRecord& r : records)
        if (!r.flagged && !r.failed() && std::isfinite(r.max_grad)) out.push_back(r);
    return out;
}

FitResult fit_power_law(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size()) throw InputError("fit inputs differ in length");
    std::vector<double> x, y;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(values[k] > 0.0)) throw InputError("power-law fit needs a positive metric");
        if (!(eps[k] > 0.0)) throw InputError("epsilon must be positive");
        x.push_back(std::log(eps[k]));
        y.push_back(std::log(values[k]));
    }
    FitResult out;
    out.kind = FitKind::PowerLaw;
    least_squares(x, y, out);
    out.exponent = -out.exponent;
    return out;
}

FitResult fit_log_law(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size()) throw InputError("fit inputs differ in length");
    std::vector<double> x, y;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(values[k] > 0.0)) throw InputError("log-law fit needs a positive metric");
        if (!(eps[k] > 0.0)) throw InputError("epsilon must be positive");
        x.push_back(std::log(1.0 / eps[k]));
        y.push_back(values[k]);
    }
    FitResult out;
    out.kind = FitKind::LogLaw;
    least_squares(x, y, out);
    return out;
}

FitResult fit_power_law(const std::vector<SweepRecord>& records, Metric metric) {
    std::vector<double> e, v;
    split(records, metric, e, v);
    FitResult out = fit_power_law(e, v);
    out.metric = metric;
    return out;
}

FitResult fit_log_law(const std::vector<SweepRecord>& records, Metric metric) {
    std::vector<double> e, v;
    split(records, metric, e, v);
    FitResult out = fit_log_law(e, v);
    out.metric = metric;
    return out;
}

double variation_ratio(const std::vector<SweepRecord>& records, Metric metric) {
    const std::vector<SweepRecord> use = usable(records);
    if (use.empty()) throw InputError("no usable records");
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const SweepRecord& r : use) {
        const double v = std::abs(metric_value(r, metric));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == 0.0) return 1.0;
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

Certificate lower_bound_certificate(const std::vector<SweepRecord>& records, double phi0,
                                    const Thresholds& t) {
    if (phi0 == 0.0)
        throw UnsupportedInput("lower-bound certificate is inapplicable when phi(0') = 0");
    const std::vector<SweepRecord> use = usable(records);
    if (use.empty()) throw InputError("no usable records");
    double osc_min = std::numeric_limits<double>::infinity();
    double grad_min = osc_min;
    for (const SweepRecord& r : use) {
        osc_min = std::min(osc_min, r.osc_ubar_core / std::abs(phi0));
        grad_min = std::min(grad_min, r.max_grad * std::sqrt(r.epsilon) / std::abs(phi0));
    }
    Certificate c;
    c.name = "lower-bound";
    c.margin = std::min(osc_min / t.lower_c0, grad_min / t.lower_c1) - 1.0;
    c.passed = osc_min >= t.lower_c0 && grad_min >= t.lower_c1;
    c.estimate = osc_min;
    c.detail = "min osc(ubar)/|phi0| = " + fmt(osc_min) + " (floor " + fmt(t.lower_c0) +
               "), min max|grad u| sqrt(eps)/|phi0| = " + fmt(grad_min) + " (floor " +
               fmt(t.lower_c1) + ")";
    return c;
}

Certificate envelope_certificate(const std::vector<SweepRecord>& records, const Thresholds& t) {
    const double env = variation_ratio(records, Metric::EnvelopeStat);
    const double dn = variation_ratio(records, Metric::MaxDnU);
    double chat = 0.0;
    for (const SweepRecord& r : usable(records)) chat = std::max(chat, r.envelope_stat);
    Certificate c;
    c.name = "envelope";
    c.passed = env <= t.stability_factor && dn <= t.stability_factor;
    c.margin = t.stability_factor / std::max(env, dn) - 1.0;
    c.estimate = chat;
    c.detail = "envelope variation " + fmt(env) + ", max|d_n u| variation " + fmt(dn) +
               " (limit " + fmt(t.stability_factor) + "), C-hat = " + fmt(chat);
    return c;
}

Certificate blowup_certificate(const std::vector<SweepRecord>& records, const Thresholds& t) {
    const FitResult f = fit_power_law(records, Metric::MaxGrad);
    Certificate c;
    c.name = "blowup";
    c.estimate = f.exponent;
    c.passed = f.exponent >= t.blowup_min && f.exponent <= t.blowup_max && f.r2 >= t.r2_min;
    c.margin = std::min({f.exponent - t.blowup_min, t.blowup_max - f.exponent, f.r2 - t.r2_min});
    c.detail = "p = " + fmt(f.exponent) + " +- " + fmt(f.stderr_) + ", R^2 = " + fmt(f.r2) +
               " (need p in [" + fmt(t.blowup_min) + ", " + fmt(t.blowup_max) + "], R^2 >= " +
               fmt(t.r2_min) + ")";
    return c;
}

Certificate loglaw_certificate(const std::vector<SweepRecord>& records, const Thresholds& t) {
    const FitResult f = fit_log_law(records, Metric::OscGap);
    Certificate c;
    c.name = "loglaw";
    c.estimate = f.exponent;
    c.passed = f.r2 >= t.r2_min && f.exponent > 0.0;
    c.margin = f.r2 - t.r2_min;
    c.detail = "osc slope " + fmt(f.exponent) + " +- " + fmt(f.stderr_) + " per ln(1/eps), R^2 = " +
               fmt(f.r2);
    return c;
}

Certificate bounded_certificate(const std::vector<SweepRecord>& records, const Thresholds& t) {
    const double ratio = variation_ratio(records, Metric::MaxGrad);
    const FitResult f = fit_power_law(records, Metric::MaxGrad);
    Certificate c;
    c.name = "bounded";
    c.estimate = f.exponent;
    c.passed = ratio <= t.stability_factor && f.exponent < t.bounded_p_max;
    c.margin = std::min(t.stability_factor / ratio - 1.0, t.bounded_p_max - f.exponent);
    c.detail = "max|grad u| variation " + fmt(ratio) + ", p = " + fmt(f.exponent) + " (need <= " +
               fmt(t.stability_factor) + " and p < " + fmt(t.bounded_p_max) + ")";
    return c;
}

Certificate nonblowup_certificate(const std::vector<SweepRecord>& records, const Thresholds& t) {
    const FitResult p = fit_power_law(records, Metric::MaxGrad);
    const FitResult osc = fit_log_law(records, Metric::OscGap);
    Certificate c;
    c.name = "nonblowup";
    c.estimate = p.exponent;
    const bool flat = std::abs(osc.exponent) <= 2.0 * osc.stderr_;
    c.passed = p.exponent <= t.nonblowup_p_max && flat;
    c.margin = std::min(t.nonblowup_p_max - p.exponent, 2.0 * osc.stderr_ - std::abs(osc.exponent));
    c.detail = "p = " + fmt(p.exponent) + " (need <= " + fmt(t.nonblowup_p_max) +
               "), osc slope " + fmt(osc.exponent) + " vs 2 stderr " + fmt(2.0 * osc.stderr_);
    return c;
}

}  // namespace gapfield
