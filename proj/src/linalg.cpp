#include "gapfield/linalg.hpp"

#include "gapfield/error.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <memory>
#include <sstream>

namespace gapfield {

Preconditioner parse_preconditioner(const std::string& name) {
    if (name == "ic" || name == "incomplete-cholesky") return Preconditioner::IncompleteCholesky;
    if (name == "jacobi") return Preconditioner::Jacobi;
    throw InputError("unknown preconditioner '" + name + "' (expected ic or jacobi)");
}

std::string to_string(Preconditioner p) {
    return p == Preconditioner::Jacobi ? "jacobi" : "ic";
}

void project_out_constants(Eigen::VectorXd& v) {
    if (v.size() == 0) return;
    v.array() -= v.mean();
}

namespace {

class Apply {
public:
    Apply(const SparseMatrix& a, Preconditioner kind) : kind_(kind) {
        if (kind == Preconditioner::Jacobi) {
            inv_diag_ = a.diagonal();
            for (Eigen::Index k = 0; k < inv_diag_.size(); ++k)
                inv_diag_[k] = inv_diag_[k] > 0.0 ? 1.0 / inv_diag_[k] : 1.0;
            return;
        }
        const Eigen::SparseMatrix<double> col = a;
        ic_ = std::make_unique<Eigen::IncompleteCholesky<double, Eigen::Lower,
                                                         Eigen::NaturalOrdering<int>>>();
        ic_->compute(col);
        if (ic_->info() != Eigen::Success)
            throw SolverError("incomplete Cholesky factorization failed", {});
    }

    Eigen::VectorXd operator()(const Eigen::VectorXd& r) const {
        if (kind_ == Preconditioner::Jacobi) return inv_diag_.cwiseProduct(r);
        return ic_->solve(r);
    }

private:
    Preconditioner kind_;
    Eigen::VectorXd inv_diag_;
    std::unique_ptr<Eigen::IncompleteCholesky<double, Eigen::Lower, Eigen::NaturalOrdering<int>>> ic_;
};

}  // namespace

Eigen::VectorXd pcg(const SparseMatrix& a, const Eigen::VectorXd& b, const PcgOptions& options,
                    SolveStats& stats) {
    stats = SolveStats{};
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
    const double bnorm = b.norm();
    if (bnorm == 0.0) return x;

    const Apply precondition(a, options.preconditioner);
    Eigen::VectorXd r = b;
    if (options.project_constants) project_out_constants(r);
    Eigen::VectorXd z = precondition(r);
    if (options.project_constants) project_out_constants(z);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    Eigen::VectorXd ap(b.size());

    for (int it = 1; it <= options.max_iterations; ++it) {
        ap.noalias() = a * p;
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) break;
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * ap;
        if (options.project_constants) project_out_constants(r);
        const double rel = r.norm() / bnorm;
        stats.history.push_back(rel);
        stats.iterations = it;
        stats.residual = rel;
        if (rel <= options.tolerance) {
            // Replace the recursive residual by the true one.
            Eigen::VectorXd true_r = b - a * x;
            if (options.project_constants) project_out_constants(true_r);
            stats.residual = true_r.norm() / bnorm;
            if (stats.residual <= 10.0 * options.tolerance) {
                if (options.project_constants) project_out_constants(x);
                return x;
            }
            r = true_r;
        }
        z = precondition(r);
        if (options.project_constants) project_out_constants(z);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    std::ostringstream os;
    os << "conjugate gradients stopped after " << stats.iterations
       << " iterations at relative residual " << stats.residual;
    throw SolverError(os.str(), stats.history);
}

}  // namespace gapfield
