#include "prymlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prymlab {

void Tolerances::validate() const {
    if (quad_tol <= 0 || theta_tol <= 0 || lattice_tol <= 0 || fd_step <= 0)
        throw ConfigError("Tolerances must be strictly positive");
    const double eps = std::numeric_limits<double>::epsilon();
    if (fd_step * fd_step < eps * 10.0)
        throw ConfigError("fd_step too small: second differences would lose all digits");
}

LatticeBasis::LatticeBasis(int n, std::vector<CVec> generators)
    : n_(n), gens_(std::move(generators)) {
    if (static_cast<int>(gens_.size()) != 2 * n_)
        throw ConfigError("LatticeBasis needs exactly 2n generators");
    real_gens_.resize(2 * n_, 2 * n_);
    for (int k = 0; k < 2 * n_; ++k) {
        if (gens_[k].size() != n_)
            throw ConfigError("LatticeBasis generator of wrong dimension");
        real_gens_.col(k) = realify(gens_[k]);
    }
    Eigen::JacobiSVD<RMat> svd(real_gens_);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0)
        throw IllConditioned("lattice generator matrix is singular");
    cond_ = smax / smin;
}

RVec LatticeBasis::realify(const CVec& v) {
    RVec r(2 * v.size());
    for (int i = 0; i < v.size(); ++i) {
        r(i) = v(i).real();
        r(v.size() + i) = v(i).imag();
    }
    return r;
}

namespace {

// 15-point Kronrod nodes with embedded 7-point Gauss weights, on [-1,1].
constexpr int kGK = 15;
constexpr double kNodes[kGK] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kWK[kGK] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kWG[kGK] = {
    0.0, 0.129484966168870, 0.0, 0.279705391489277,
    0.0, 0.381830050505119, 0.0, 0.417959183673469,
    0.0, 0.381830050505119, 0.0, 0.279705391489277,
    0.0, 0.129484966168870, 0.0};

struct GKResult {
    cplx value;
    double err;
};

GKResult gk15(const std::function<cplx(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    KahanSum k15, g7;
    for (int i = 0; i < kGK; ++i) {
        cplx y = f(mid + half * kNodes[i]);
        k15.add(kWK[i] * y);
        if (kWG[i] != 0.0) g7.add(kWG[i] * y);
    }
    cplx vk = half * k15.value();
    cplx vg = half * g7.value();
    double diff = std::abs(vk - vg);
    // classic QUADPACK-style error inflation
    double err = diff * std::sqrt(std::min(1.0, 200.0 * diff));
    return {vk, std::max(err, diff * 1e-3)};
}

cplx integrate_rec(const std::function<cplx(double)>& f, double a, double b, double tol,
                   int depth) {
    GKResult r = gk15(f, a, b);
    if (r.err <= tol || r.err <= 1e-16 * std::abs(r.value)) return r.value;
    if (depth >= 48)
        throw NonConvergence("integrate_segment: subdivision depth exceeded; path too close to a singularity");
    const double mid = 0.5 * (a + b);
    cplx left = integrate_rec(f, a, mid, 0.5 * tol, depth + 1);
    cplx right = integrate_rec(f, mid, b, 0.5 * tol, depth + 1);
    return left + right;
}

}  // namespace

cplx integrate_segment(const std::function<cplx(double)>& f, double tol) {
    return integrate_rec(f, 0.0, 1.0, tol, 0);
}

std::vector<IVec> lattice_points_in_ellipsoid(const RMat& Q, const RVec& center, double R) {
    const int n = static_cast<int>(Q.rows());
    if (Q.cols() != n || center.size() != n)
        throw ConfigError("lattice_points_in_ellipsoid: dimension mismatch");
    Eigen::SelfAdjointEigenSolver<RMat> es(Q);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw ConfigError("lattice_points_in_ellipsoid: Q not positive definite");

    const double lmin = es.eigenvalues().minCoeff();
    const double radius = std::sqrt(R * R / lmin);
    std::vector<IVec> out;
    IVec current(n);

    // plain box scan in lexicographic order; the box is eigenvalue-bounded
    std::function<void(int)> rec = [&](int dim) {
        if (dim == n) {
            RVec d = current.cast<double>() - center;
            if (d.dot(Q * d) <= R * R) out.push_back(current);
            return;
        }
        const int lo = static_cast<int>(std::floor(center(dim) - radius));
        const int hi = static_cast<int>(std::ceil(center(dim) + radius));
        for (int v = lo; v <= hi; ++v) {
            current(dim) = v;
            rec(dim + 1);
        }
    };
    rec(0);
    return out;
}

LatticeReduction reduce_mod_lattice(const CVec& v, const LatticeBasis& L, double cond_threshold) {
    if (L.condition_number() > cond_threshold)
        throw IllConditioned("reduce_mod_lattice: generator condition number too large");
    RVec coords = L.real_generators().colPivHouseholderQr().solve(LatticeBasis::realify(v));
    const int m = static_cast<int>(coords.size());
    IVec coeffs(m);
    for (int i = 0; i < m; ++i) coeffs(i) = static_cast<int>(std::lround(coords(i)));
    CVec residual = v;
    for (int k = 0; k < m; ++k)
        if (coeffs(k) != 0) residual -= static_cast<double>(coeffs(k)) * L.generators()[k];
    return {residual, coeffs, residual.norm()};
}

cplx wirtinger_laplacian(const std::array<std::array<cplx, 3>, 3>& s, double step) {
    // d2/dz dzbar = (1/4)(d2/dx2 + d2/dy2), five-point stencil
    const cplx c = s[1][1];
    const cplx east = s[1][2], west = s[1][0], north = s[0][1], south = s[2][1];
    return (east + west + north + south - 4.0 * c) / (4.0 * step * step);
}

}  // namespace prymlab
