// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "covmec/conic.hpp"
#include "covmec/errors.hpp"

namespace covmec {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    constant += o.constant;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
    constant -= o.constant;
    for (const auto& [v, c] : o.terms) terms.emplace_back(v, -c);
    return *this;
}

LinExpr& LinExpr::operator*=(double s) {
    constant *= s;
    for (auto& t : terms) t.second *= s;
    return *this;
}

double LinExpr::evaluate(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& [i, c] : terms) v += c * x[i];
    return v;
}

void LinExpr::compress() {
    std::map<int, double> acc;
    for (const auto& [v, c] : terms) acc[v] += c;
    terms.clear();
    for (const auto& [v, c] : acc) {
        if (c != 0.0) terms.emplace_back(v, c);
    }
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator-(LinExpr a) { return a *= -1.0; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }
LinExpr operator*(LinExpr a, double s) { return a *= s; }

std::string to_string(ConeKind k) {
    switch (k) {
        case ConeKind::zero: return "zero";
        case ConeKind::nonneg: return "nonneg";
        case ConeKind::soc: return "soc";
        case ConeKind::rsoc: return "rsoc";
        case ConeKind::exp: return "exp";
        case ConeKind::power: return "power";
        case ConeKind::psd: return "psd";
    }
    return "unknown";
}

Var ConicProgram::add_variable(const std::string& name, double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw InputError("add_variable: invalid bounds for " + name);
    Var v{static_cast<int>(names_.size())};
    names_.push_back(name);
    if (lo == hi) {
        add_equality(LinExpr(v) - lo, name + ".fixed");
        return v;
    }
    if (std::isfinite(lo)) add_nonneg(LinExpr(v) - lo, name + ".lo");
    if (std::isfinite(hi)) add_nonneg(hi - LinExpr(v), name + ".hi");
    return v;
}

void ConicProgram::check(const LinExpr& e) const {
    if (!std::isfinite(e.constant)) throw InputError("conic program: non-finite constant");
    for (const auto& [v, c] : e.terms) {
        if (v < 0 || v >= num_variables()) throw InputError("conic program: undeclared variable");
        if (!std::isfinite(c)) throw InputError("conic program: non-finite coefficient");
    }
}

void ConicProgram::set_objective(const LinExpr& objective) {
    check(objective);
    objective_ = objective;
    objective_.compress();
}

namespace {

ConeBlock make_block(ConeKind kind, std::vector<LinExpr> rows, const std::string& tag) {
    ConeBlock b;
    b.kind = kind;
    b.rows = std::move(rows);
    for (auto& r : b.rows) r.compress();
    b.tag = tag;
    return b;
}

}  // namespace

void ConicProgram::add_equality(const LinExpr& e, const std::string& tag) {
    check(e);
    blocks_.push_back(make_block(ConeKind::zero, {e}, tag));
}

void ConicProgram::add_nonneg(const LinExpr& e, const std::string& tag) {
    check(e);
    blocks_.push_back(make_block(ConeKind::nonneg, {e}, tag));
}

void ConicProgram::add_soc(const LinExpr& t, const std::vector<LinExpr>& x, const std::string& tag) {
    std::vector<LinExpr> rows{t};
    rows.insert(rows.end(), x.begin(), x.end());
    for (const auto& r : rows) check(r);
    blocks_.push_back(make_block(ConeKind::soc, std::move(rows), tag));
}

void ConicProgram::add_rsoc(const LinExpr& u, const LinExpr& v, const std::vector<LinExpr>& x,
                            const std::string& tag) {
    std::vector<LinExpr> rows{u, v};
    rows.insert(rows.end(), x.begin(), x.end());
    for (const auto& r : rows) check(r);
    blocks_.push_back(make_block(ConeKind::rsoc, std::move(rows), tag));
}

void ConicProgram::add_exp(const LinExpr& x, const LinExpr& y, const LinExpr& z, const std::string& tag) {
    for (const auto* r : {&x, &y, &z}) check(*r);
    blocks_.push_back(make_block(ConeKind::exp, {x, y, z}, tag));
}

void ConicProgram::add_power(const LinExpr& x, const LinExpr& y, const LinExpr& z, double alpha,
                             const std::string& tag) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("power cone exponent must lie in (0, 1)");
    for (const auto* r : {&x, &y, &z}) check(*r);
    auto b = make_block(ConeKind::power, {x, y, z}, tag);
    b.alpha = alpha;
    blocks_.push_back(std::move(b));
}

void ConicProgram::add_psd(int n, const std::vector<LinExpr>& entries, const std::string& tag) {
    if (n < 1 || static_cast<int>(entries.size()) != n * n) throw InputError("add_psd: need n*n entries");
    for (const auto& r : entries) check(r);
    auto b = make_block(ConeKind::psd, entries, tag);
    b.dim = n;
    blocks_.push_back(std::move(b));
}

int ConicProgram::count_blocks(ConeKind kind) const {
    return static_cast<int>(std::count_if(blocks_.begin(), blocks_.end(), [&](const ConeBlock& b) { return b.kind == kind; }));
}

int ConicProgram::count_blocks_tagged(const std::string& prefix) const {
    return static_cast<int>(std::count_if(blocks_.begin(), blocks_.end(),
                                          [&](const ConeBlock& b) { return b.tag.rfind(prefix, 0) == 0; }));
}

double cone_violation(const ConeBlock& b, const Eigen::VectorXd& x) {
    std::vector<double> s;
    s.reserve(b.rows.size());
    for (const auto& r : b.rows) s.push_back(r.evaluate(x));
    auto tail_norm2 = [&](std::size_t from) {
        double acc = 0.0;
        for (std::size_t i = from; i < s.size(); ++i) acc += s[i] * s[i];
        return acc;
    };
    switch (b.kind) {
        case ConeKind::zero: {
            double m = 0.0;
            for (double v : s) m = std::max(m, std::abs(v));
            return m;
        }
        case ConeKind::nonneg: {
            double m = 0.0;
            for (double v : s) m = std::max(m, -v);
            return m;
        }
        case ConeKind::soc: return std::max(0.0, std::sqrt(tail_norm2(1)) - s[0]);
        case ConeKind::rsoc: {
            if (s[0] < 0.0 || s[1] < 0.0) return std::max(-s[0], -s[1]);
            return std::max(0.0, std::sqrt(tail_norm2(2)) - std::sqrt(2.0 * s[0] * s[1]));
        }
        case ConeKind::exp: {
            const double X = s[0], Y = s[1], Z = s[2];
            if (Y > 0.0) return std::max(0.0, Y * std::exp(Z / Y) - X);
            return -Y + std::max(0.0, -X) + std::max(0.0, Z);
        }
        case ConeKind::power: {
            const double X = s[0], Y = s[1], Z = s[2];
            if (X < 0.0 || Y < 0.0) return std::max(-X, -Y);
            return std::max(0.0, std::abs(Z) - std::pow(X, b.alpha) * std::pow(Y, 1.0 - b.alpha));
        }
        case ConeKind::psd: {
            const int n = b.dim;
            Eigen::MatrixXd S(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) S(i, j) = s[i * n + j];
            }
            const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
            return std::max(0.0, -es.eigenvalues().minCoeff()) + asym;
        }
    }
    return 0.0;
}

double ConicProgram::max_violation(const Eigen::VectorXd& x) const {
    double m = 0.0;
    for (const auto& b : blocks_) m = std::max(m, cone_violation(b, x));
    return m;
}

namespace {

void write_expr(std::ostream& os, const LinExpr& e) {
    os << e.constant;
    for (const auto& [v, c] : e.terms) os << ' ' << v << ':' << c;
}

}  // namespace

void ConicProgram::dump(std::ostream& os) const {
    const auto prec = os.precision(17);
    os << "covmec-conic 1\n";
    os << "vars " << num_variables() << '\n';
    for (int i = 0; i < num_variables(); ++i) os << "var " << i << ' ' << names_[i] << '\n';
    os << "objective ";
    write_expr(os, objective_);
    os << '\n';
    for (const auto& b : blocks_) {
        os << "block " << to_string(b.kind) << " rows=" << b.rows.size();
        if (b.kind == ConeKind::power) os << " alpha=" << b.alpha;
        if (b.kind == ConeKind::psd) os << " dim=" << b.dim;
        os << " tag=" << b.tag << '\n';
        for (const auto& r : b.rows) {
            os << "  ";
            write_expr(os, r);
            os << '\n';
        }
    }
    os.precision(prec);
}

// ---- Encodings ------------------------------------------------------------

void exp_epigraph(ConicProgram& p, const LinExpr& L, const LinExpr& x, const std::string& tag) {
    p.add_exp(L, LinExpr(1.0), x, tag);
}

void cubic_epigraph(ConicProgram& p, const LinExpr& f, const LinExpr& s, const std::string& tag) {
    // s^(1/3) * 1^(2/3) >= |f|
    p.add_power(s, LinExpr(1.0), f, 1.0 / 3.0, tag);
}

Var inverse_square_epigraph(ConicProgram& p, const LinExpr& L, const LinExpr& v, const std::string& tag) {
    const Var eta = p.add_variable(tag + ".eta", 0.0);
    // 2 * eta * (v / 2) >= 1  <=>  eta v >= 1
    p.add_rsoc(LinExpr(eta), 0.5 * v, {LinExpr(1.0)}, tag + ".hyp");
    // 2 * (L / 2) * 1 >= eta^2
    p.add_rsoc(0.5 * L, LinExpr(1.0), {LinExpr(eta)}, tag + ".sq");
    return eta;
}

void quadratic_upper(ConicProgram& p, const std::vector<LinExpr>& x, const LinExpr& L, const std::string& tag) {
    // 2 * L * (1/2) >= ||x||^2
    p.add_rsoc(L, LinExpr(0.5), x, tag);
}

HermitianExpr HermitianExpr::variable(ConicProgram& p, int n, const std::string& name) {
    HermitianExpr X;
    X.n = n;
    X.re.assign(n * n, LinExpr());
    X.im.assign(n * n, LinExpr());
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const Var r = p.add_variable(name + ".re[" + std::to_string(i) + "," + std::to_string(j) + "]");
            X.re[i * n + j] = LinExpr(r);
            X.re[j * n + i] = LinExpr(r);
            if (j > i) {
                const Var m = p.add_variable(name + ".im[" + std::to_string(i) + "," + std::to_string(j) + "]");
                X.im[i * n + j] = LinExpr(m);
                X.im[j * n + i] = -LinExpr(m);
            }
        }
    }
    return X;
}

HermitianExpr HermitianExpr::scaled_identity(const LinExpr& beta, int n) {
    HermitianExpr X;
    X.n = n;
    X.re.assign(n * n, LinExpr());
    X.im.assign(n * n, LinExpr());
    for (int i = 0; i < n; ++i) X.re[i * n + i] = beta;
    return X;
}

LinExpr HermitianExpr::trace() const {
    LinExpr t;
    for (int i = 0; i < n; ++i) t += re[i * n + i];
    t.compress();
    return t;
}

LinExpr HermitianExpr::trace_product(const CMat& A) const {
    // tr(A X) = sum_ij A_ji X_ij; real because both are Hermitian.
    LinExpr t;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const cplx a = A(j, i);
            if (a.real() != 0.0) t += a.real() * re[i * n + j];
            if (a.imag() != 0.0) t -= a.imag() * im[i * n + j];
        }
    }
    t.compress();
    return t;
}

LinExpr HermitianExpr::quadratic_form(const CVec& d) const {
    return trace_product(d * d.adjoint());
}

CMat HermitianExpr::evaluate(const Eigen::VectorXd& x) const {
    CMat X(n, n);
    for (int i = 0; i < n * n; ++i) X(i / n, i % n) = cplx(re[i].evaluate(x), im[i].evaluate(x));
    return X;
}

std::vector<LinExpr> hermitian_psd_embed(const HermitianExpr& X) {
    const int n = X.n;
    const int m = 2 * n;
    std::vector<LinExpr> e(m * m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            e[i * m + j] = X.re[i * n + j];
            e[(i + n) * m + (j + n)] = X.re[i * n + j];
            e[i * m + (j + n)] = -X.im[i * n + j];
            e[(i + n) * m + j] = X.im[i * n + j];
        }
    }
    return e;
}

void add_hermitian_psd(ConicProgram& p, const HermitianExpr& X, const std::string& tag) {
    p.add_psd(2 * X.n, hermitian_psd_embed(X), tag);
}

ComplexVecExpr ComplexVecExpr::variable(ConicProgram& p, int n, const std::string& name) {
    ComplexVecExpr v;
    for (int i = 0; i < n; ++i) {
        v.re.emplace_back(p.add_variable(name + ".re[" + std::to_string(i) + "]"));
        v.im.emplace_back(p.add_variable(name + ".im[" + std::to_string(i) + "]"));
    }
    return v;
}

ComplexVecExpr ComplexVecExpr::scaled(const LinExpr& alpha, const CVec& d) {
    ComplexVecExpr v;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        v.re.push_back(d[i].real() * alpha);
        v.im.push_back(d[i].imag() * alpha);
    }
    return v;
}

ComplexVecExpr ComplexVecExpr::multiply(const CMat& A) const {
    ComplexVecExpr out;
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        LinExpr re_acc, im_acc;
        for (Eigen::Index c = 0; c < A.cols(); ++c) {
            const cplx a = A(r, c);
            // (ar + j ai)(xr + j xi) = ar xr - ai xi + j (ar xi + ai xr)
            if (a.real() != 0.0) {
                re_acc += a.real() * re[c];
                im_acc += a.real() * im[c];
            }
            if (a.imag() != 0.0) {
                re_acc -= a.imag() * im[c];
                im_acc += a.imag() * re[c];
            }
        }
        re_acc.compress();
        im_acc.compress();
        out.re.push_back(std::move(re_acc));
        out.im.push_back(std::move(im_acc));
    }
    return out;
}

std::vector<LinExpr> ComplexVecExpr::stacked() const {
    std::vector<LinExpr> out;
    for (int i = 0; i < size(); ++i) {
        out.push_back(re[i]);
        out.push_back(im[i]);
    }
    return out;
}

CVec ComplexVecExpr::evaluate(const Eigen::VectorXd& x) const {
    CVec v(size());
    for (int i = 0; i < size(); ++i) v[i] = cplx(re[i].evaluate(x), im[i].evaluate(x));
    return v;
}

LinExpr real_inner(const CVec& c, const ComplexVecExpr& v) {
    // Re(conj(c) v) = cr vr + ci vi
    LinExpr t;
    for (int i = 0; i < v.size(); ++i) {
        if (c[i].real() != 0.0) t += c[i].real() * v.re[i];
        if (c[i].imag() != 0.0) t += c[i].imag() * v.im[i];
    }
    t.compress();
    return t;
}

}  // namespace covmec
