// SPDX-License-Identifier: Apache-2.0
//
// Conic program builder, epigraph encodings of the nonlinear terms used by the
// resource-allocation and trajectory subproblems, and a primal barrier
// interior-point solver for the supported cones.
#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "covmec/channel.hpp"

namespace covmec {

/// Handle to a scalar decision variable of a ConicProgram.
struct Var {
    int index = -1;
};

/// Affine expression constant + sum coef * x[var].
struct LinExpr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;

    LinExpr() = default;
    LinExpr(double c) : constant(c) {}  // NOLINT(google-explicit-constructor)
    LinExpr(Var v) : terms{{v.index, 1.0}} {}  // NOLINT(google-explicit-constructor)

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(double s);

    double evaluate(const Eigen::VectorXd& x) const;
    /// Merge duplicate variables and drop zero coefficients.
    void compress();
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a);
LinExpr operator*(double s, LinExpr a);
LinExpr operator*(LinExpr a, double s);

enum class ConeKind {
    zero,    // every row == 0
    nonneg,  // every row >= 0
    soc,     // rows (t, x): t >= ||x||
    rsoc,    // rows (u, v, x): 2 u v >= ||x||^2, u, v >= 0
    exp,     // rows (x, y, z): x >= y exp(z / y), y > 0
    power,   // rows (x, y, z): x^a y^(1-a) >= |z|, x, y >= 0
    psd,     // n*n rows, row-major entries of a symmetric matrix that must be PSD
};

std::string to_string(ConeKind k);

struct ConeBlock {
    ConeKind kind = ConeKind::nonneg;
    std::vector<LinExpr> rows;
    double alpha = 0.5;  // power cone exponent
    int dim = 0;         // psd side length
    std::string tag;
};

class ConicProgram {
public:
    /// New scalar variable; finite bounds become nonnegative rows.
    Var add_variable(const std::string& name, double lo = -std::numeric_limits<double>::infinity(),
                     double hi = std::numeric_limits<double>::infinity());

    void set_objective(const LinExpr& objective);

    void add_equality(const LinExpr& e, const std::string& tag);
    void add_nonneg(const LinExpr& e, const std::string& tag);
    void add_soc(const LinExpr& t, const std::vector<LinExpr>& x, const std::string& tag);
    void add_rsoc(const LinExpr& u, const LinExpr& v, const std::vector<LinExpr>& x, const std::string& tag);
    void add_exp(const LinExpr& x, const LinExpr& y, const LinExpr& z, const std::string& tag);
    void add_power(const LinExpr& x, const LinExpr& y, const LinExpr& z, double alpha, const std::string& tag);
    /// `entries` holds n*n expressions in row-major order; must be symmetric.
    void add_psd(int n, const std::vector<LinExpr>& entries, const std::string& tag);

    int num_variables() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& variable_names() const { return names_; }
    const LinExpr& objective() const { return objective_; }
    const std::vector<ConeBlock>& blocks() const { return blocks_; }
    int count_blocks(ConeKind kind) const;
    int count_blocks_tagged(const std::string& prefix) const;

    /// Largest cone violation of x (0 for points inside every cone).
    double max_violation(const Eigen::VectorXd& x) const;

    /// Text dump, one record per block (format described in README).
    void dump(std::ostream& os) const;

private:
    void check(const LinExpr& e) const;
    std::vector<std::string> names_;
    LinExpr objective_;
    std::vector<ConeBlock> blocks_;
};

/// Violation of a single block at x: 0 inside, positive outside.
double cone_violation(const ConeBlock& b, const Eigen::VectorXd& x);

// ---- Encodings ------------------------------------------------------------

/// L >= exp(x).
void exp_epigraph(ConicProgram& p, const LinExpr& L, const LinExpr& x, const std::string& tag);
/// s >= f^3 for f >= 0 (the caller adds f >= 0 when f is not already sign-constrained).
void cubic_epigraph(ConicProgram& p, const LinExpr& f, const LinExpr& s, const std::string& tag);
/// L >= 1 / v^2 for v > 0 through an auxiliary eta with eta v >= 1 and L >= eta^2. Returns eta.
Var inverse_square_epigraph(ConicProgram& p, const LinExpr& L, const LinExpr& v, const std::string& tag);
/// sum_i x_i^2 <= L.
void quadratic_upper(ConicProgram& p, const std::vector<LinExpr>& x, const LinExpr& L, const std::string& tag);

/// Hermitian matrix whose real and imaginary parts are affine expressions.
struct HermitianExpr {
    int n = 0;
    std::vector<LinExpr> re;  // n*n row-major
    std::vector<LinExpr> im;  // n*n row-major, antisymmetric

    /// Fresh Hermitian variable: re_ij (i <= j) and im_ij (i < j) become variables.
    static HermitianExpr variable(ConicProgram& p, int n, const std::string& name);
    /// beta * I.
    static HermitianExpr scaled_identity(const LinExpr& beta, int n);

    LinExpr trace() const;
    /// Real part of tr(A X) for a Hermitian constant A (= tr(A X) exactly).
    LinExpr trace_product(const CMat& A) const;
    /// d^H X d.
    LinExpr quadratic_form(const CVec& d) const;
    /// Value at x.
    CMat evaluate(const Eigen::VectorXd& x) const;
};

/// [[Re X, -Im X], [Im X, Re X]] as 4 n^2 row-major entries.
std::vector<LinExpr> hermitian_psd_embed(const HermitianExpr& X);
/// Adds X >= 0 through the real embedding.
void add_hermitian_psd(ConicProgram& p, const HermitianExpr& X, const std::string& tag);

/// Complex vector whose real and imaginary parts are affine expressions.
struct ComplexVecExpr {
    std::vector<LinExpr> re;
    std::vector<LinExpr> im;

    int size() const { return static_cast<int>(re.size()); }
    static ComplexVecExpr variable(ConicProgram& p, int n, const std::string& name);
    /// alpha * d for a scalar expression alpha and constant vector d.
    static ComplexVecExpr scaled(const LinExpr& alpha, const CVec& d);
    /// A * this.
    ComplexVecExpr multiply(const CMat& A) const;
    /// Re and Im parts stacked: [re_0, im_0, re_1, im_1, ...].
    std::vector<LinExpr> stacked() const;
    CVec evaluate(const Eigen::VectorXd& x) const;
};

/// Re(c^H v) as an affine expression.
LinExpr real_inner(const CVec& c, const ComplexVecExpr& v);

// ---- Solver ---------------------------------------------------------------

enum class SolveStatus { optimal, infeasible, unbounded, inaccurate, iteration_limit };

std::string to_string(SolveStatus s);

struct ConicSettings {
    double feasibility_tol = 1e-8;
    double gap_tol = 1e-8;   // relative to max(1, |objective|)
    int max_iterations = 200;  // Newton steps per phase
    double barrier_growth = 20.0;
    double bound_radius = 1e7;  // ball around the start point keeping phase I bounded
    bool verbose = false;
};

struct ConicSolution {
    SolveStatus status = SolveStatus::inaccurate;
    Eigen::VectorXd x;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double max_primal_residual = std::numeric_limits<double>::infinity();
    double gap_bound = std::numeric_limits<double>::infinity();  // objective - optimum <= gap_bound
    double solve_time = 0.0;  // s
    int iterations = 0;       // Newton steps, both phases
};

/// Solves `program`. `start`, when given, seeds the feasibility phase; a
/// strictly feasible start skips it. Deterministic for identical inputs.
ConicSolution solve(const ConicProgram& program, const ConicSettings& settings = {},
                    const Eigen::VectorXd* start = nullptr);

}  // namespace covmec
