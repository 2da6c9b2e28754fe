#include "gapfield/cli_io.hpp"

#include "gapfield/grid.hpp"
#include "gapfield/linalg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace gapfield {

namespace {

const char* const kCsvHeader =
    "epsilon,max_grad,argmax_r,argmax_z,max_dn_u,osc_gap,osc_ubar_core,energy,envelope_stat,flagged";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

long long parse_integer(const std::string& s) {
    long long v = 0;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || p != end) throw InputError("'" + s + "' is not an integer");
    return v;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    for (const std::string& item : split(s, ',')) out.push_back(parse_double(item));
    return out;
}

std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += ", ";
        out += format_double(v[k]);
    }
    return out;
}

std::string kind_name(BoundaryKind k) { return k == BoundaryKind::Neumann ? "neumann" : "dirichlet"; }
std::string profile_name(DataProfile p) { return p == DataProfile::Power ? "power" : "bump"; }

struct Key {
    std::string name;
    std::function<void(ExperimentPlan&, const std::string&)> set;
    std::function<std::string(const ExperimentPlan&)> get;
};

template <class Ref>
Key real_key(const std::string& name, Ref ref) {
    return {name, [ref](ExperimentPlan& p, const std::string& v) { ref(p) = parse_double(v); },
            [ref](const ExperimentPlan& p) { return format_double(ref(const_cast<ExperimentPlan&>(p))); }};
}

template <class Ref>
Key int_key(const std::string& name, Ref ref) {
    return {name,
            [ref](ExperimentPlan& p, const std::string& v) {
                using T = std::remove_reference_t<decltype(ref(p))>;
                const long long x = parse_integer(v);
                if (x < 0 && std::is_unsigned_v<T>) throw InputError("must be non-negative");
                ref(p) = static_cast<T>(x);
            },
            [ref](const ExperimentPlan& p) { return std::to_string(ref(const_cast<ExperimentPlan&>(p))); }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back(int_key("geometry.n", [](ExperimentPlan& p) -> int& { return p.sweep.geometry.n; }));
        k.push_back({"geometry.epsilons",
                     [](ExperimentPlan& p, const std::string& v) { p.sweep.epsilons = parse_list(v); },
                     [](const ExperimentPlan& p) { return format_list(p.sweep.epsilons); }});
        k.push_back(real_key("geometry.R", [](ExperimentPlan& p) -> double& { return p.sweep.geometry.R; }));
        k.push_back(real_key("geometry.kappa", [](ExperimentPlan& p) -> double& { return p.sweep.geometry.kappa; }));
        k.push_back({"geometry.f",
                     [](ExperimentPlan& p, const std::string& v) { p.sweep.geometry.f = RadialProfile(parse_list(v)); },
                     [](const ExperimentPlan& p) { return format_list(p.sweep.geometry.f.coefficients()); }});
        k.push_back({"geometry.g",
                     [](ExperimentPlan& p, const std::string& v) { p.sweep.geometry.g = RadialProfile(parse_list(v)); },
                     [](const ExperimentPlan& p) { return format_list(p.sweep.geometry.g.coefficients()); }});
        k.push_back(real_key("geometry.outer_radius",
                             [](ExperimentPlan& p) -> double& { return p.sweep.geometry.outer.outer_radius; }));
        k.push_back(real_key("geometry.inclusion_radius",
                             [](ExperimentPlan& p) -> double& { return p.sweep.geometry.outer.inclusion_radius; }));

        k.push_back({"boundary.kind",
                     [](ExperimentPlan& p, const std::string& v) {
                         const std::string s = lower(v);
                         if (s == "neumann") p.sweep.boundary.kind = BoundaryKind::Neumann;
                         else if (s == "dirichlet") p.sweep.boundary.kind = BoundaryKind::Dirichlet;
                         else throw InputError("expected neumann or dirichlet");
                     },
                     [](const ExperimentPlan& p) { return kind_name(p.sweep.boundary.kind); }});
        k.push_back({"boundary.profile",
                     [](ExperimentPlan& p, const std::string& v) {
                         const std::string s = lower(v);
                         if (s == "bump") p.sweep.boundary.profile = DataProfile::Bump;
                         else if (s == "power") p.sweep.boundary.profile = DataProfile::Power;
                         else throw InputError("expected bump or power");
                     },
                     [](const ExperimentPlan& p) { return profile_name(p.sweep.boundary.profile); }});
        k.push_back(real_key("boundary.phi0", [](ExperimentPlan& p) -> double& { return p.sweep.boundary.phi0; }));
        k.push_back(real_key("boundary.alpha", [](ExperimentPlan& p) -> double& { return p.sweep.boundary.alpha; }));

        k.push_back(int_key("resolution.n_gap", [](ExperimentPlan& p) -> int& { return p.sweep.policy.n_gap; }));
        k.push_back(real_key("resolution.lateral_fraction",
                             [](ExperimentPlan& p) -> double& { return p.sweep.policy.lateral_fraction; }));
        k.push_back(real_key("resolution.growth", [](ExperimentPlan& p) -> double& { return p.sweep.policy.growth; }));
        k.push_back(real_key("resolution.max_spacing",
                             [](ExperimentPlan& p) -> double& { return p.sweep.policy.max_spacing; }));
        k.push_back(int_key("resolution.max_unknowns",
                            [](ExperimentPlan& p) -> std::size_t& { return p.sweep.policy.max_unknowns; }));
        k.push_back(real_key("resolution.fixed_lateral_spacing",
                             [](ExperimentPlan& p) -> double& { return p.sweep.policy.fixed_lateral_spacing; }));

        k.push_back(real_key("solver.tolerance", [](ExperimentPlan& p) -> double& { return p.sweep.solve.tolerance; }));
        k.push_back({"solver.preconditioner",
                     [](ExperimentPlan& p, const std::string& v) {
                         try {
                             p.sweep.solve.preconditioner = parse_preconditioner(lower(v));
                         } catch (const std::exception&) {
                             throw InputError("expected ic or jacobi");
                         }
                     },
                     [](const ExperimentPlan& p) { return to_string(p.sweep.solve.preconditioner); }});
        k.push_back(real_key("solver.gauge_radius",
                             [](ExperimentPlan& p) -> double& { return p.sweep.solve.gauge_radius; }));

        k.push_back({"experiment.output_dir",
                     [](ExperimentPlan& p, const std::string& v) {
                         if (v.empty()) throw InputError("must not be empty");
                         p.output_dir = v;
                     },
                     [](const ExperimentPlan& p) { return p.output_dir; }});
        k.push_back(int_key("experiment.seed", [](ExperimentPlan& p) -> std::uint64_t& { return p.sweep.seed; }));
        k.push_back(int_key("experiment.threads", [](ExperimentPlan& p) -> int& { return p.sweep.threads; }));
        k.push_back(real_key("experiment.rtilde_fraction",
                             [](ExperimentPlan& p) -> double& { return p.sweep.rtilde_fraction; }));
        k.push_back(real_key("experiment.richardson_tolerance",
                             [](ExperimentPlan& p) -> double& { return p.sweep.richardson_tolerance; }));

        auto th = [&k](const std::string& name, double Thresholds::*m) {
            k.push_back({"thresholds." + name,
                         [m](ExperimentPlan& p, const std::string& v) { p.thresholds.*m = parse_double(v); },
                         [m](const ExperimentPlan& p) { return format_double(p.thresholds.*m); }});
        };
        th("blowup_min", &Thresholds::blowup_min);
        th("blowup_max", &Thresholds::blowup_max);
        th("r2_min", &Thresholds::r2_min);
        th("stability_factor", &Thresholds::stability_factor);
        th("bounded_p_max", &Thresholds::bounded_p_max);
        th("nonblowup_p_max", &Thresholds::nonblowup_p_max);
        th("lower_c0", &Thresholds::lower_c0);
        th("lower_c1", &Thresholds::lower_c1);
        return k;
    }();
    return table;
}

std::vector<double> default_epsilons() {
    std::vector<double> e;
    for (int k = 0; k < 9; ++k) e.push_back(std::pow(10.0, -2.0 - 0.25 * k));
    return e;
}

void check_plan(const ExperimentPlan& plan, std::vector<ConfigIssue>& issues,
                const std::map<std::string, int>& lines) {
    auto line = [&](const std::string& key) {
        auto it = lines.find(key);
        return it == lines.end() ? 0 : it->second;
    };
    auto fail = [&](const std::string& key, const std::string& why) {
        issues.push_back({key, line(key), why});
    };
    const SweepSpec& s = plan.sweep;
    const GapGeometry& g = s.geometry;
    if (g.n < 2) fail("geometry.n", "dimension must be at least 2");
    if (!(g.R > 0.0)) fail("geometry.R", "must be positive");
    if (s.epsilons.size() < 4) fail("geometry.epsilons", "need at least 4 values");
    for (std::size_t k = 1; k < s.epsilons.size(); ++k)
        if (!(s.epsilons[k] < s.epsilons[k - 1])) {
            fail("geometry.epsilons", "epsilons must be descending");
            break;
        }
    for (double e : s.epsilons)
        if (!(e > 0.0) || !(e < g.R * g.R)) {
            fail("geometry.epsilons", "each epsilon must lie in (0, R^2)");
            break;
        }
    if (g.n >= 2) {
        const double lo = 1.0 - 2.0 / g.n;
        if (!(s.boundary.alpha > lo && s.boundary.alpha < 1.0))
            fail("boundary.alpha", "alpha must lie in (1-2/n, 1) = (" + format_double(lo) + ", 1)");
    }
    if (!std::isfinite(s.boundary.phi0)) fail("boundary.phi0", "must be finite");
    if (s.policy.n_gap < 2) fail("resolution.n_gap", "must be at least 2");
    if (!(s.policy.lateral_fraction > 0.0)) fail("resolution.lateral_fraction", "must be positive");
    if (!(s.policy.growth >= 1.0)) fail("resolution.growth", "must be at least 1");
    if (!(s.policy.max_spacing > 0.0)) fail("resolution.max_spacing", "must be positive");
    if (s.policy.max_unknowns == 0) fail("resolution.max_unknowns", "must be positive");
    if (s.policy.fixed_lateral_spacing < 0.0) fail("resolution.fixed_lateral_spacing", "must be non-negative");
    if (!(s.solve.tolerance > 0.0 && s.solve.tolerance < 1.0)) fail("solver.tolerance", "must lie in (0, 1)");
    if (!(s.rtilde_fraction > 0.0 && s.rtilde_fraction <= 2.0))
        fail("experiment.rtilde_fraction", "must lie in (0, 2]");
    if (!(s.richardson_tolerance > 0.0)) fail("experiment.richardson_tolerance", "must be positive");
    if (s.threads < 0) fail("experiment.threads", "must be non-negative");

    const Thresholds& t = plan.thresholds;
    for (const Key& k : keys())
        if (k.name.rfind("thresholds.", 0) == 0 && !(parse_double(k.get(plan)) > 0.0))
            fail(k.name, "thresholds must be positive");
    if (!(t.blowup_min < t.blowup_max)) fail("thresholds.blowup_max", "must exceed thresholds.blowup_min");

    if (g.n >= 2 && g.R > 0.0 && !s.epsilons.empty()) {
        std::set<std::string> seen;
        for (double e : s.epsilons) {
            if (!(e > 0.0)) continue;
            GapGeometry at = g;
            at.epsilon = e;
            for (const std::string& why : validate(at).failures())
                if (seen.insert(why).second) issues.push_back({"geometry", 0, why});
        }
    }
}

std::string issues_text(const std::vector<ConfigIssue>& issues) {
    std::string out = "invalid configuration";
    for (const ConfigIssue& i : issues) {
        out += "\n  ";
        if (i.line > 0) out += "line " + std::to_string(i.line) + ": ";
        out += i.key + ": " + i.reason;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

nlohmann::ordered_json number(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

std::string law_name(FitKind k) { return k == FitKind::PowerLaw ? "power" : "log"; }

}  // namespace

bool ExperimentPlan::operator==(const ExperimentPlan& o) const {
    const SweepSpec& a = sweep;
    const SweepSpec& b = o.sweep;
    return a.geometry == b.geometry && a.boundary == b.boundary && a.epsilons == b.epsilons &&
           a.policy == b.policy && a.solve.tolerance == b.solve.tolerance &&
           a.solve.preconditioner == b.solve.preconditioner &&
           a.solve.gauge_radius == b.solve.gauge_radius && a.rtilde_fraction == b.rtilde_fraction &&
           a.richardson_tolerance == b.richardson_tolerance && a.seed == b.seed &&
           a.threads == b.threads && thresholds == o.thresholds && output_dir == o.output_dir;
}

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : InputError(issues_text(issues)), issues_(std::move(issues)) {}

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

double parse_double(const std::string& text) {
    const std::string s = trim(text);
    double v = 0.0;
    const char* begin = s.data();
    if (!s.empty() && s[0] == '+') ++begin;
    const char* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(begin, end, v);
    if (s.empty() || ec != std::errc() || p != end) throw InputError("'" + s + "' is not a number");
    return v;
}

ExperimentPlan parse_config(const std::string& text) {
    ExperimentPlan plan;
    plan.sweep.epsilons = default_epsilons();
    std::vector<ConfigIssue> issues;
    std::map<std::string, int> lines;
    std::map<std::string, const Key*> table;
    for (const Key& k : keys()) table[k.name] = &k;

    std::istringstream in(text);
    std::string raw, section;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                issues.push_back({line, number, "malformed section header"});
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            issues.push_back({line, number, "expected key = value"});
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            issues.push_back({"", number, "missing key before '='"});
            continue;
        }
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
        const auto it = table.find(key);
        if (it == table.end()) {
            issues.push_back({key, number, "unknown key"});
            continue;
        }
        if (lines.count(key)) {
            issues.push_back({key, number, "duplicate key (first set on line " + std::to_string(lines[key]) + ")"});
            continue;
        }
        lines[key] = number;
        try {
            it->second->set(plan, value);
        } catch (const std::exception& e) {
            issues.push_back({key, number, e.what()});
        }
    }
    for (const char* required : {"geometry.n", "boundary.kind"})
        if (!lines.count(required)) issues.push_back({required, 0, "missing required key"});
    check_plan(plan, issues, lines);
    if (!issues.empty()) throw ConfigError(std::move(issues));
    return plan;
}

ExperimentPlan load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string emit_config(const ExperimentPlan& plan) {
    std::string out, section;
    for (const Key& k : keys()) {
        const auto dot = k.name.find('.');
        const std::string sec = k.name.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) out += "\n";
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += k.name.substr(dot + 1) + " = " + k.get(plan) + "\n";
    }
    return out;
}

std::string records_to_csv(const std::vector<SweepRecord>& records) {
    if (records.empty()) throw InputError("no records to write");
    std::vector<SweepRecord> sorted = records;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SweepRecord& a, const SweepRecord& b) { return a.epsilon > b.epsilon; });
    std::string out = std::string(kCsvHeader) + "\n";
    for (const SweepRecord& r : sorted) {
        for (double v : {r.epsilon, r.max_grad, r.argmax_r, r.argmax_z, r.max_dn_u, r.osc_gap,
                         r.osc_ubar_core, r.energy, r.envelope_stat})
            out += format_double(v) + ",";
        out += r.flagged ? "1\n" : "0\n";
    }
    return out;
}

std::vector<SweepRecord> records_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InputError("records file is empty");
    if (trim(line) != kCsvHeader) throw InputError("unexpected records header: " + trim(line));
    std::vector<SweepRecord> out;
    int number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (trim(line).empty()) continue;
        const std::vector<std::string> f = split(trim(line), ',');
        if (f.size() != 10)
            throw InputError("line " + std::to_string(number) + ": expected 10 fields, got " +
                             std::to_string(f.size()));
        SweepRecord r;
        try {
            double* slots[] = {&r.epsilon, &r.max_grad, &r.argmax_r, &r.argmax_z, &r.max_dn_u,
                               &r.osc_gap, &r.osc_ubar_core, &r.energy, &r.envelope_stat};
            for (int k = 0; k < 9; ++k) *slots[k] = parse_double(f[k]);
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(number) + ": " + e.what());
        }
        if (f[9] != "0" && f[9] != "1")
            throw InputError("line " + std::to_string(number) + ": flagged must be 0 or 1");
        r.flagged = f[9] == "1";
        out.push_back(r);
    }
    if (out.empty()) throw InputError("records file has no rows");
    return out;
}

void write_records(const std::vector<SweepRecord>& records, const std::string& path) {
    write_file(path, records_to_csv(records));
}

std::vector<SweepRecord> read_records(const std::string& path) { return records_from_csv(read_file(path)); }

std::string records_to_json(const std::vector<SweepRecord>& records, const ExperimentPlan* plan,
                            const std::vector<FitResult>& fits,
                            const std::vector<Certificate>& certificates) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["format"] = "gapfield-records";
    doc["version"] = 1;
    if (plan) {
        ordered_json cfg;
        for (const Key& k : keys()) cfg[k.name] = k.get(*plan);
        doc["plan"] = cfg;
    }
    ordered_json rows = ordered_json::array();
    for (const SweepRecord& r : records) {
        ordered_json row;
        row["epsilon"] = number(r.epsilon);
        row["max_grad"] = number(r.max_grad);
        row["argmax_r"] = number(r.argmax_r);
        row["argmax_z"] = number(r.argmax_z);
        row["max_dn_u"] = number(r.max_dn_u);
        row["osc_gap"] = number(r.osc_gap);
        row["osc_ubar_core"] = number(r.osc_ubar_core);
        row["energy"] = number(r.energy);
        row["envelope_stat"] = number(r.envelope_stat);
        row["flagged"] = r.flagged;
        row["coarse_max_grad"] = number(r.coarse_max_grad);
        row["nodes"] = r.nodes;
        row["iterations"] = r.iterations;
        row["residual"] = number(r.residual);
        if (r.failed()) row["error"] = r.error;
        rows.push_back(row);
    }
    doc["records"] = rows;
    ordered_json fj = ordered_json::array();
    for (const FitResult& f : fits) {
        ordered_json j;
        j["metric"] = to_string(f.metric);
        j["law"] = law_name(f.kind);
        j["exponent"] = number(f.exponent);
        j["intercept"] = number(f.intercept);
        j["stderr"] = number(f.stderr_);
        j["r2"] = number(f.r2);
        j["points"] = f.points;
        fj.push_back(j);
    }
    doc["fits"] = fj;
    ordered_json cj = ordered_json::array();
    for (const Certificate& c : certificates) {
        ordered_json j;
        j["name"] = c.name;
        j["passed"] = c.passed;
        j["margin"] = number(c.margin);
        j["estimate"] = number(c.estimate);
        j["detail"] = c.detail;
        cj.push_back(j);
    }
    doc["certificates"] = cj;
    return doc.dump(2) + "\n";
}

std::vector<std::string> emit_plot_data(const std::vector<FitResult>& fits, const std::string& dir) {
    std::vector<std::string> paths;
    for (const FitResult& f : fits) {
        const bool power = f.kind == FitKind::PowerLaw;
        const std::string stem = dir + "/" + to_string(f.metric) + "_" + law_name(f.kind);
        // Power fits are stored as y = intercept + slope ln(eps) with slope = -p.
        const double slope = power ? -f.exponent : f.exponent;
        std::string head = "# " + to_string(f.metric) + (power ? " power law, metric ~ eps^-p\n" : " log law\n");
        head += power ? "# exponent p = " : "# slope = ";
        head += format_double(f.exponent) + "\n# intercept = " + format_double(f.intercept) +
                "\n# stderr = " + format_double(f.stderr_) + "\n# R2 = " + format_double(f.r2) + "\n";
        const std::string xname = power ? "ln_eps" : "ln_inv_eps";
        const std::string yname = power ? "ln_" + to_string(f.metric) : to_string(f.metric);
        std::string data = head + "# " + xname + " " + yname + "\n";
        std::string resid = head + "# " + xname + " residual\n";
        for (std::size_t k = 0; k < f.x.size(); ++k) {
            data += format_double(f.x[k]) + " " + format_double(f.y[k]) + "\n";
            const double e = f.y[k] - (f.intercept + slope * f.x[k]);
            resid += format_double(f.x[k]) + " " + format_double(e) + "\n";
        }
        write_file(stem + ".dat", data);
        write_file(stem + "_residual.dat", resid);
        paths.push_back(stem + ".dat");
        paths.push_back(stem + "_residual.dat");
    }
    return paths;
}

namespace {

const std::vector<std::string> kCertificates = {"blowup", "loglaw", "bounded", "nonblowup", "envelope",
                                                "lower-bound"};

Certificate evaluate(const std::string& name, const std::vector<SweepRecord>& records, double phi0,
                     const Thresholds& t) {
    if (name == "blowup") return blowup_certificate(records, t);
    if (name == "loglaw") return loglaw_certificate(records, t);
    if (name == "bounded") return bounded_certificate(records, t);
    if (name == "nonblowup") return nonblowup_certificate(records, t);
    if (name == "envelope") return envelope_certificate(records, t);
    if (name == "lower-bound") return lower_bound_certificate(records, phi0, t);
    throw InputError("unknown certificate '" + name + "'");
}

void print_certificate(const Certificate& c) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
}

std::vector<FitResult> standard_fits(const std::vector<SweepRecord>& records) {
    std::vector<FitResult> fits;
    try {
        fits.push_back(fit_power_law(records, Metric::MaxGrad));
    } catch (const InputError& e) {
        std::cerr << "power-law fit skipped: " << e.what() << "\n";
    }
    try {
        fits.push_back(fit_log_law(records, Metric::OscGap));
    } catch (const InputError& e) {
        std::cerr << "log-law fit skipped: " << e.what() << "\n";
    }
    return fits;
}

std::vector<Certificate> all_certificates(const std::vector<SweepRecord>& records, double phi0,
                                          const Thresholds& t) {
    std::vector<Certificate> out;
    for (const std::string& name : kCertificates) {
        try {
            out.push_back(evaluate(name, records, phi0, t));
        } catch (const std::invalid_argument& e) {
            std::cerr << name << ": not evaluated (" << e.what() << ")\n";
        }
    }
    return out;
}

void print_fit(const FitResult& f) {
    std::cout << to_string(f.metric) << " " << law_name(f.kind) << " fit: "
              << (f.kind == FitKind::PowerLaw ? "p = " : "slope = ") << format_double(f.exponent)
              << " +- " << format_double(f.stderr_) << ", intercept " << format_double(f.intercept)
              << ", R^2 = " << format_double(f.r2) << ", " << f.points << " points\n";
}

int cmd_validate(const std::string& config) {
    const ExperimentPlan plan = load_config(config);
    GapGeometry g = plan.sweep.geometry;
    g.epsilon = plan.sweep.epsilons.front();
    std::cout << "configuration valid: n = " << g.n << ", " << plan.sweep.epsilons.size()
              << " epsilons from " << format_double(plan.sweep.epsilons.front()) << " to "
              << format_double(plan.sweep.epsilons.back()) << "\n";
    for (const ValidationCheck& c : validate(g).checks)
        std::cout << "  " << (c.passed ? "ok   " : "FAIL ") << c.name << "\n";
    std::cout << "  grid nodes at smallest epsilon: ";
    g.epsilon = plan.sweep.epsilons.back();
    std::cout << grid_node_count(g, plan.sweep.policy) << "\n";
    return 0;
}

int cmd_solve(const std::string& config, double epsilon, const std::string& dump) {
    const ExperimentPlan plan = load_config(config);
    GapGeometry g = plan.sweep.geometry;
    g.epsilon = epsilon > 0.0 ? epsilon : plan.sweep.epsilons.front();
    const BoundaryData bc = plan.sweep.boundary.realize(g);
    SolveOptions options = plan.sweep.solve;
    const double rtilde = plan.sweep.rtilde_fraction * g.R;
    if (options.gauge_radius < 0.0) options.gauge_radius = 0.5 * rtilde;
    const CurvilinearGrid grid = build_grid(g, plan.sweep.policy);
    const DiscreteField field = bc.kind == BoundaryKind::Neumann ? solve_neumann(g, bc, grid, options)
                                                                 : solve_dirichlet(g, bc, grid, options);
    const SweepRecord r = measure(field, g, rtilde);
    std::cout << "epsilon        " << format_double(r.epsilon) << "\n"
              << "nodes          " << r.nodes << "\n"
              << "iterations     " << r.iterations << "\n"
              << "residual       " << format_double(r.residual) << "\n"
              << "max_grad       " << format_double(r.max_grad) << " at (" << format_double(r.argmax_r)
              << ", " << format_double(r.argmax_z) << ")\n"
              << "max_dn_u       " << format_double(r.max_dn_u) << "\n"
              << "osc_gap        " << format_double(r.osc_gap) << "\n"
              << "osc_ubar_core  " << format_double(r.osc_ubar_core) << "\n"
              << "energy         " << format_double(r.energy) << "\n"
              << "envelope_stat  " << format_double(r.envelope_stat) << "\n";
    if (!dump.empty()) {
        write_field_dump(field, dump);
        std::cout << "field written to " << dump << "\n";
    }
    return 0;
}

int cmd_sweep(const std::string& config, const std::string& out_override) {
    const ExperimentPlan plan = load_config(config);
    const std::string dir = out_override.empty() ? plan.output_dir : out_override;
    const std::vector<SweepRecord> records = sweep(plan.sweep);
    for (const SweepRecord& r : records) {
        if (r.failed()) std::cerr << "solve at epsilon " << format_double(r.epsilon) << " failed: " << r.error << "\n";
        else
            std::cout << "eps " << format_double(r.epsilon) << "  max_grad " << format_double(r.max_grad)
                      << "  osc_gap " << format_double(r.osc_gap) << (r.flagged ? "  [flagged]" : "") << "\n";
    }
    const std::vector<FitResult> fits = standard_fits(records);
    for (const FitResult& f : fits) print_fit(f);
    std::vector<Certificate> certs;
    for (const std::string& name : kCertificates) {
        try {
            certs.push_back(evaluate(name, records, plan.sweep.boundary.phi_at_origin(), plan.thresholds));
        } catch (const std::invalid_argument&) {
        }
    }
    write_records(records, dir + "/records.csv");
    write_file(dir + "/records.json", records_to_json(records, &plan, fits, certs));
    std::cout << "wrote " << dir << "/records.csv and " << dir << "/records.json\n";
    return 0;
}

Thresholds thresholds_from(const std::string& config) {
    return config.empty() ? Thresholds{} : load_config(config).thresholds;
}

int cmd_fit(const std::string& path, const std::string& metric, const std::string& law,
            const std::string& plot) {
    const std::vector<SweepRecord> records = read_records(path);
    const Metric m = parse_metric(metric);
    FitResult f;
    if (law == "power") f = fit_power_law(records, m);
    else if (law == "log") f = fit_log_law(records, m);
    else throw InputError("law must be power or log");
    print_fit(f);
    if (!plot.empty())
        for (const std::string& p : emit_plot_data({f}, plot)) std::cout << "wrote " << p << "\n";
    return 0;
}

int cmd_certify(const std::string& path, const std::vector<std::string>& asserted,
                std::optional<double> phi0, const std::string& config) {
    const std::vector<SweepRecord> records = read_records(path);
    const Thresholds t = thresholds_from(config);
    if (asserted.empty()) {
        for (const Certificate& c : all_certificates(records, phi0.value_or(1.0), t)) print_certificate(c);
        return 0;
    }
    bool ok = true;
    for (const std::string& name : asserted) {
        if (name == "lower-bound" && !phi0)
            throw InputError("the lower-bound certificate needs --phi0");
        const Certificate c = evaluate(name, records, phi0.value_or(1.0), t);
        print_certificate(c);
        if (!c.passed) {
            ok = false;
            std::cerr << "asserted certificate '" << name << "' failed: " << c.detail << "\n";
        }
    }
    return ok ? 0 : 1;
}

int cmd_report(const std::string& path, const std::string& dir, std::optional<double> phi0,
               const std::string& config) {
    const std::vector<SweepRecord> records = read_records(path);
    const Thresholds t = thresholds_from(config);
    const std::vector<FitResult> fits = standard_fits(records);
    for (const FitResult& f : fits) print_fit(f);
    std::vector<Certificate> certs;
    for (const std::string& name : kCertificates) {
        if (name == "lower-bound" && !phi0) continue;
        try {
            certs.push_back(evaluate(name, records, phi0.value_or(1.0), t));
            print_certificate(certs.back());
        } catch (const std::invalid_argument& e) {
            std::cout << "n/a  " << name << ": " << e.what() << "\n";
        }
    }
    for (const std::string& p : emit_plot_data(fits, dir)) std::cout << "wrote " << p << "\n";
    write_file(dir + "/report.json", records_to_json(records, nullptr, fits, certs));
    std::cout << "wrote " << dir << "/report.json\n";
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"gapfield: gradient blow-up experiments for insulated inclusions near a boundary"};
    app.require_subcommand(1);

    std::string config, records, out, dump, metric = "max_grad", law = "power", plot;
    double epsilon = 0.0;
    double phi0_value = 0.0;
    std::vector<std::string> asserted;

    auto* validate_cmd = app.add_subcommand("validate", "check a configuration and its geometry");
    validate_cmd->add_option("--config", config, "configuration file")->required();

    auto* solve_cmd = app.add_subcommand("solve", "solve one configuration at one epsilon");
    solve_cmd->add_option("--config", config, "configuration file")->required();
    solve_cmd->add_option("--epsilon", epsilon, "gap (default: first of the sweep)");
    solve_cmd->add_option("--dump", dump, "write the field to this binary file");

    auto* sweep_cmd = app.add_subcommand("sweep", "run the epsilon sweep and write records");
    sweep_cmd->add_option("--config", config, "configuration file")->required();
    sweep_cmd->add_option("--out", out, "output directory (overrides experiment.output_dir)");

    auto* fit_cmd = app.add_subcommand("fit", "fit a scaling law to a records file");
    fit_cmd->add_option("--records", records, "records CSV")->required();
    fit_cmd->add_option("--metric", metric, "metric column");
    fit_cmd->add_option("--law", law, "power or log");
    fit_cmd->add_option("--plot", plot, "directory for plot tables");

    auto* certify_cmd = app.add_subcommand("certify", "evaluate certificates on a records file");
    certify_cmd->add_option("--records", records, "records CSV")->required();
    certify_cmd->add_option("--assert", asserted, "certificate that must pass (repeatable)");
    auto* certify_phi0 = certify_cmd->add_option("--phi0", phi0_value, "datum value at the contact point");
    certify_cmd->add_option("--config", config, "configuration supplying thresholds");

    auto* report_cmd = app.add_subcommand("report", "fits, certificates and plot tables");
    report_cmd->add_option("--records", records, "records CSV")->required();
    report_cmd->add_option("--out", out, "output directory")->default_str("report");
    auto* report_phi0 = report_cmd->add_option("--phi0", phi0_value, "datum value at the contact point");
    report_cmd->add_option("--config", config, "configuration supplying thresholds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*validate_cmd) return cmd_validate(config);
        if (*solve_cmd) return cmd_solve(config, epsilon, dump);
        if (*sweep_cmd) return cmd_sweep(config, out);
        if (*fit_cmd) return cmd_fit(records, metric, law, plot);
        if (*certify_cmd)
            return cmd_certify(records, asserted, *certify_phi0 ? std::optional(phi0_value) : std::nullopt, config);
        if (*report_cmd)
            return cmd_report(records, out.empty() ? "report" : out,
                              *report_phi0 ? std::optional(phi0_value) : std::nullopt, config);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedInput& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 3;
    } catch (const ResourceError& e) {
        std::cerr << "solver failure: " << e.what() << " (" << e.required() << " unknowns)\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace gapfield
