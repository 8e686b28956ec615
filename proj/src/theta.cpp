#include "prymlab/theta.hpp"

#include <cmath>
#include <limits>

namespace prymlab {

ThetaContext::ThetaContext(CMat Pi_in, double tol) : Pi(std::move(Pi_in)), theta_tol(tol) {
    if (Pi.rows() != Pi.cols()) throw ConfigError("ThetaContext: Pi must be square");
    if ((Pi - Pi.transpose()).cwiseAbs().maxCoeff() > 1e-7)
        throw ConfigError("ThetaContext: Pi must be symmetric");
    A_ = -0.5 * (Pi.real() + Pi.real().transpose());
    Eigen::SelfAdjointEigenSolver<RMat> es(A_);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw ConfigError("ThetaContext: Re Pi must be negative definite");
}

namespace {

struct TermSet {
    std::vector<IVec> pts;
    RVec center;
};

TermSet enumerate_terms(const CVec& z, const ThetaContext& ctx, double radius_override) {
    const int h = ctx.dim();
    const RMat& A = ctx.neg_re_pi();
    // saddle of the real exponent: A * N0 = Re z
    RVec N0 = A.llt().solve(z.real());
    double R = radius_override;
    if (R <= 0.0) {
        // excluded terms are bounded by exp(-R^2/2) each; a generous count
        // factor keeps the tail under theta_tol
        R = std::sqrt(2.0 * (std::log(1e4 / ctx.theta_tol)));
    }
    if (R > ctx.radius_cap)
        throw TruncationOverflow("theta: required truncation radius exceeds cap");
    return {lattice_points_in_ellipsoid(A, N0, R), N0};
}

}  // namespace

cplx theta(const CVec& z, const ThetaContext& ctx, double radius_override) {
    TermSet ts = enumerate_terms(z, ctx, radius_override);
    // two passes: find the max real exponent, then sum shifted terms in the
    // fixed enumeration order
    double max_re = -std::numeric_limits<double>::infinity();
    std::vector<cplx> exps;
    exps.reserve(ts.pts.size());
    for (const IVec& N : ts.pts) {
        CVec Nc = N.cast<double>().cast<cplx>();
        cplx e = 0.5 * (Nc.transpose() * ctx.Pi * Nc)(0) + Nc.dot(z);
        exps.push_back(e);
        max_re = std::max(max_re, e.real());
    }
    if (exps.empty()) return cplx{0.0, 0.0};
    KahanSum s;
    for (const cplx& e : exps) s.add(std::exp(e - max_re));
    return std::exp(cplx{max_re, 0.0}) * s.value();
}

RVec theta_characteristic(int m, int h) {
    RVec beta = RVec::Zero(h);
    for (int i = h - m; i < h; ++i) beta(i) = 0.5;
    return beta;
}

cplx theta_hat(int m, const CVec& z, const ThetaContext& ctx, bool raw_shift) {
    const int h = ctx.dim();
    if (m < 0 || m > h) throw ConfigError("theta_hat: characteristic index out of range");
    RVec beta = theta_characteristic(m, h);
    CVec shift = raw_shift ? CVec(beta.cast<cplx>()) : CVec(kTwoPiI * beta.cast<cplx>());
    return theta(z + shift, ctx);
}

CVec theta_gradient(const CVec& z, const ThetaContext& ctx) {
    TermSet ts = enumerate_terms(z, ctx, 0.0);
    double max_re = -std::numeric_limits<double>::infinity();
    std::vector<cplx> exps;
    exps.reserve(ts.pts.size());
    for (const IVec& N : ts.pts) {
        CVec Nc = N.cast<double>().cast<cplx>();
        cplx e = 0.5 * (Nc.transpose() * ctx.Pi * Nc)(0) + Nc.dot(z);
        exps.push_back(e);
        max_re = std::max(max_re, e.real());
    }
    CVec grad = CVec::Zero(ctx.dim());
    if (exps.empty()) return grad;
    std::vector<KahanSum> acc(ctx.dim());
    for (size_t k = 0; k < ts.pts.size(); ++k) {
        cplx t = std::exp(exps[k] - max_re);
        for (int i = 0; i < ctx.dim(); ++i)
            acc[i].add(static_cast<double>(ts.pts[k](i)) * t);
    }
    for (int i = 0; i < ctx.dim(); ++i)
        grad(i) = std::exp(cplx{max_re, 0.0}) * acc[i].value();
    return grad;
}

CMat log_theta_dd(const std::vector<CVec>& args, int rows, int cols, double step,
                  const ThetaContext& ctx, cplx scale) {
    if (static_cast<int>(args.size()) != rows * cols)
        throw ConfigError("log_theta_dd: grid size mismatch");
    std::vector<cplx> vals(args.size());
    double mag_scale = 0.0;
    for (size_t i = 0; i < args.size(); ++i) {
        vals[i] = scale * theta(args[i], ctx);
        mag_scale = std::max(mag_scale, std::abs(vals[i]));
    }
    for (const cplx& v : vals)
        if (std::abs(v) < 1e-10 * mag_scale)
            throw NearThetaDivisor("log_theta_dd: theta vanishes on the grid");

    // branch-consistent logarithm, row-major unwrapping
    std::vector<cplx> lv(vals.size());
    double prev_row_start = 0.0;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int i = r * cols + c;
            double ph = std::arg(vals[i]);
            double refp = (c == 0) ? (r == 0 ? ph : prev_row_start) : lv[i - 1].imag();
            double d = ph - refp;
            d -= 2.0 * kPi * std::round(d / (2.0 * kPi));
            if (std::abs(d) >= kPi)
                throw NearThetaDivisor("log_theta_dd: phase jump >= pi between neighbours");
            lv[i] = cplx{std::log(std::abs(vals[i])), refp + d};
            if (c == 0) prev_row_start = lv[i].imag();
        }
    }
    CMat out(rows - 2, cols - 2);
    for (int r = 1; r + 1 < rows; ++r)
        for (int c = 1; c + 1 < cols; ++c) {
            cplx lap = (lv[r * cols + c + 1] + lv[r * cols + c - 1] + lv[(r - 1) * cols + c] +
                        lv[(r + 1) * cols + c] - 4.0 * lv[r * cols + c]) /
                       (4.0 * step * step);
            out(r - 1, c - 1) = lap;
        }
    return out;
}

}  // namespace prymlab
