#pragma once

#include "gapfield/error.hpp"
#include "gapfield/experiments.hpp"

#include <string>
#include <vector>

namespace gapfield {

struct ExperimentPlan {
    SweepSpec sweep;
    Thresholds thresholds;
    std::string output_dir = "out";

    bool operator==(const ExperimentPlan& o) const;
};

struct ConfigIssue {
    std::string key;
    int line = 0;  // 0 when the issue is not tied to one line
    std::string reason;
};

class ConfigError : public InputError {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues);
    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ConfigIssue> issues_;
};

/// Flat key = value text. Keys are dotted (geometry.kappa) or relative to the
/// last [section] header; '#' starts a comment; lists are comma separated.
/// Required: geometry.n and boundary.kind. Throws ConfigError listing every
/// problem found.
ExperimentPlan parse_config(const std::string& text);
ExperimentPlan load_config(const std::string& path);

/// Canonical text: every key, fixed order, shortest round-trip numbers.
std::string emit_config(const ExperimentPlan& plan);

/// The ten-column records CSV. Throws InputError on empty input.
std::string records_to_csv(const std::vector<SweepRecord>& records);
std::vector<SweepRecord> records_from_csv(const std::string& text);
void write_records(const std::vector<SweepRecord>& records, const std::string& path);
std::vector<SweepRecord> read_records(const std::string& path);

/// JSON mirror of the records with plan, fits and certificate verdicts.
std::string records_to_json(const std::vector<SweepRecord>& records, const ExperimentPlan* plan,
                            const std::vector<FitResult>& fits,
                            const std::vector<Certificate>& certificates);

/// Per fit, <dir>/<metric>_<law>.dat with columns (x, y) and
/// <dir>/<metric>_<law>_residual.dat with columns (x, y - fit), each under a
/// comment header with the fitted parameters. Returns the paths written.
std::vector<std::string> emit_plot_data(const std::vector<FitResult>& fits, const std::string& dir);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);
double parse_double(const std::string& s);

/// Command-line driver. Exit codes: 0 success, 1 certificate failure,
/// 2 input error, 3 solver failure.
int run(int argc, char** argv);

}  // namespace gapfield
