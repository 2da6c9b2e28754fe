#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace gapfield {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Preconditioner { IncompleteCholesky, Jacobi };

Preconditioner parse_preconditioner(const std::string& name);
std::string to_string(Preconditioner p);

struct PcgOptions {
    double tolerance = 1e-10;  // on ||b - A x|| / ||b||
    int max_iterations = 50000;
    Preconditioner preconditioner = Preconditioner::IncompleteCholesky;
    // Keep residual and search directions orthogonal to the constants.
    bool project_constants = false;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> history;
};

/// Preconditioned conjugate gradients for symmetric positive (semi)definite
/// A. Throws SolverError with the residual history if the tolerance is not
/// reached.
Eigen::VectorXd pcg(const SparseMatrix& a, const Eigen::VectorXd& b, const PcgOptions& options,
                    SolveStats& stats);

/// Removes the mean of v.
void project_out_constants(Eigen::VectorXd& v);

}  // namespace gapfield
