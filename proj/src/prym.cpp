#include "prymlab/prym.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prymlab {

namespace {

// analytic-continuation state for Abel-type integrals: position, tracked y
// (or yhat in the w chart), and the accumulated integral vector
struct ContState {
    bool wchart = false;
    cplx pos;
    cplx ref;
    CVec A;
};

ContState advance(const Curve& C, const std::vector<DifferentialForm>& forms, ContState s,
                  cplx target, double tol) {
    SurfacePath p;
    if (!s.wchart) {
        p.start = SurfacePoint::finite(s.pos, s.ref);
        // detour if the segment dips much closer to a branch point than its
        // endpoints sit; short steps near a branch point are left alone
        double da = C.dist_to_branch(s.pos, s.pos);
        double db = C.dist_to_branch(target, target);
        double trig = std::min(0.5 * C.clearance(), 0.3 * std::min(da, db));
        if (C.dist_to_branch(s.pos, target) < trig) {
            cplx mid = 0.5 * (s.pos + target);
            bool ok = false;
            for (double sgn : {1.0, -1.0}) {
                cplx m = mid + cplx{0.0, sgn * 4.0 * C.clearance()};
                if (C.dist_to_branch(s.pos, m) > trig &&
                    C.dist_to_branch(m, target) > trig) {
                    p.segs.push_back({false, s.pos, m});
                    p.segs.push_back({false, m, target});
                    ok = true;
                    break;
                }
            }
            if (!ok) throw SheetAmbiguity("continuation segment pinned at a branch point");
        } else {
            p.segs.push_back({false, s.pos, target});
        }
    } else {
        const int g = C.genus();
        p.start = SurfacePoint::finite(1.0 / s.pos, s.ref / std::pow(s.pos, g + 1));
        p.segs.push_back({true, s.pos, target});
    }
    PathTrace tr = C.trace(p);
    auto vals = C.integrate_forms(forms, p, tr, tol);
    ContState out = s;
    out.pos = target;
    out.ref = tr.segs.back().ref.back();
    for (size_t i = 0; i < vals.size(); ++i) out.A(static_cast<int>(i)) += vals[i];
    return out;
}

bool same_sheet(cplx y1, cplx y2) { return std::abs(y1 - y2) <= std::abs(y1 + y2); }

}  // namespace

Divisor apply_divisor(const Curve& C, InvolutionTag inv, const Divisor& d) {
    Divisor out;
    for (const auto& [p, m] : d.points) out.add(C.apply(inv, p), m);
    return out;
}

PrymSystem::PrymSystem(const Curve& C, const PeriodData& pd)
    : C_(C),
      pd_(pd),
      theta_(pd.Pi, C.tol().theta_tol),
      jac_lat_(pd.jacobian_lattice()),
      prym_lat_(pd.prym_lattice()) {
    // rebase the Abel maps at the sigma-fixed point inf+
    off_jac_ = CVec::Zero(C_.genus());
    off_prym_ = CVec::Zero(C_.h());
    off_jac_ = abel_point(SurfacePoint::infinity(+1), false);
    off_prym_ = abel_point(SurfacePoint::infinity(+1), true);

    // Delta = K + sum (Q'_j + Q''_j), K = (g-1)(inf+ + inf-)
    const int g = C_.genus();
    delta_.add(SurfacePoint::infinity(+1), g - 1);
    delta_.add(SurfacePoint::infinity(-1), g - 1);
    for (const auto& [q1, q2] : C_.involutions().ramification_pairs) {
        delta_.add(q1, 1);
        delta_.add(q2, 1);
    }
    abel_delta_ = abel(delta_);

    SurfacePoint ib = C_.apply(InvolutionTag::Iota, C_.base_point());
    c_iota_ = abel_point(C_.base_point(), true) + abel_point(ib, true);
}

namespace {

// Abel integral for a target very close to a branch point b: route to an
// entry point on a small circle around b, then finish in the double-cover
// chart x = b + t^2, where the integrand is analytic across the branch.
CVec abel_branch_chart(const Curve& C, const std::vector<DifferentialForm>& forms,
                       const SurfacePoint& p, cplx b) {
    // sqrt of g(x) = f(x)/(x - b) on the branch continuous from sqrt(g(b))
    auto g = [&](cplx x) {
        cplx out{1.0, 0.0};
        for (const cplx& bp : C.branch_points())
            if (bp != b) out *= x - bp;
        return out;
    };
    const cplx s0 = std::sqrt(g(b));
    auto sg = [&](cplx x) {
        cplx s = std::sqrt(g(x));
        return (std::abs(s - s0) <= std::abs(s + s0)) ? s : cplx(-s);
    };
    const double r = 2.0 * C.clearance();
    cplx dir = p.x - b;
    dir = (std::abs(dir) < 1e-300) ? cplx{1.0, 0.0} : dir / std::abs(dir);
    const cplx x1 = b + r * dir;
    const cplx t1 = std::sqrt(x1 - b);
    SurfacePath head = C.path_to(SurfacePoint::finite(x1, t1 * sg(x1)));
    auto vals = C.integrate_forms(forms, head, C.tol().quad_tol);
    CVec out = Eigen::Map<CVec>(vals.data(), static_cast<int>(vals.size()));
    // pick the t preimage of the target matching its sheet
    cplx tt = std::sqrt(p.x - b);
    if (std::abs(tt * sg(p.x) - p.y) > std::abs(tt * sg(p.x) + p.y)) tt = -tt;
    const cplx dt = tt - t1;
    for (int i = 0; i < static_cast<int>(forms.size()); ++i) {
        const DifferentialForm& fm = forms[static_cast<size_t>(i)];
        out(i) += integrate_segment(
            [&](double s) {
                cplx t = t1 + s * dt;
                cplx x = b + t * t;
                cplx pv{0.0, 0.0};
                for (int j = static_cast<int>(fm.p.size()) - 1; j >= 0; --j)
                    pv = pv * x + fm.p(j);
                return (2.0 * pv / sg(x) + 2.0 * fm.q0 * t) * dt;
            },
            C.tol().quad_tol);
    }
    return out;
}

}  // namespace

CVec PrymSystem::abel_point(const SurfacePoint& p, bool prym) const {
    const auto& forms = prym ? pd_.prym_forms : pd_.jac_forms;
    if (!p.at_infinity) {
        double dbest = std::numeric_limits<double>::max();
        cplx b{};
        for (const cplx& bp : C_.branch_points())
            if (std::abs(p.x - bp) < dbest) {
                dbest = std::abs(p.x - bp);
                b = bp;
            }
        if (dbest < 0.5 * C_.clearance()) {
            CVec raw = abel_branch_chart(C_, forms, p, b);
            return CVec(raw - (prym ? off_prym_ : off_jac_));
        }
    }
    SurfacePath path =
        p.at_infinity ? C_.path_near_infinity(cplx{0.0, 0.0}, p.inf_sign) : C_.path_to(p);
    auto vals = C_.integrate_forms(forms, path, C_.tol().quad_tol);
    CVec raw = Eigen::Map<CVec>(vals.data(), static_cast<int>(vals.size()));
    return CVec(raw - (prym ? off_prym_ : off_jac_));
}

CVec PrymSystem::abel(const Divisor& d) const {
    CVec out = CVec::Zero(C_.genus());
    for (const auto& [p, m] : d.points)
        if (m != 0) out += static_cast<double>(m) * abel_point(p, false);
    return out;
}

CVec PrymSystem::abel_prym(const Divisor& d) const {
    CVec out = CVec::Zero(C_.h());
    for (const auto& [p, m] : d.points)
        if (m != 0) out += static_cast<double>(m) * abel_point(p, true);
    return out;
}

CVec PrymSystem::phi(const CVec& e) const {
    const int gs = C_.g_sigma(), h = C_.h(), g = C_.genus();
    CVec out(g);
    for (int a = 0; a < gs; ++a) out(a) = e(a);
    for (int j = gs; j < h; ++j) out(j) = 2.0 * e(j);
    for (int a = 0; a < gs; ++a) out(h + a) = e(a);
    return out;
}

CVec PrymSystem::eps(const CVec& e) const {
    const int gs = C_.g_sigma(), h = C_.h();
    CVec out(h);
    for (int a = 0; a < gs; ++a) out(a) = e(a);
    for (int j = gs; j < h; ++j) out(j) = 2.0 * e(j);
    return out;
}

Divisor PrymSystem::zeros_of_F_e(const CVec& e) const {
    const int g = C_.genus(), h = C_.h();
    const double quad = C_.tol().quad_tol;
    const auto& forms = pd_.prym_forms;

    double maxb = 0.0;
    for (const cplx& b : C_.branch_points()) maxb = std::max(maxb, std::abs(b));
    const double wlim = 0.5 / maxb;
    const double L = std::max(1.5 * maxb + 1.5, 1.3 / wlim);

    // theta argument for a point continued on the tracked sheet (s=+1) or its
    // hyperelliptic partner (s=-1), using A(iota P) = c_iota - A(P) mod lattice
    auto theta_arg = [&](const CVec& A, int s) {
        return (s > 0) ? CVec(A - e) : CVec(c_iota_ - A - e);
    };

    struct Zero {
        bool at_infinity;
        int inf_sign;
        cplx x, y;
        ContState state;  // continuation snapshot at the zero (tracked sheet)
        int sheet;        // +1 tracked, -1 partner (finite zeros)
    };
    std::vector<Zero> zeros;

    auto try_register = [&](const Zero& z) {
        for (const Zero& w : zeros) {
            if (z.at_infinity != w.at_infinity) continue;
            if (z.at_infinity) {
                if (z.inf_sign == w.inf_sign) return;
                continue;
            }
            if (std::abs(z.x - w.x) < 1e-6 && same_sheet(z.y, w.y)) return;
        }
        zeros.push_back(z);
    };

    // Newton in the x chart from a continuation snapshot
    auto newton_x = [&](ContState s0, int sheet) {
        ContState s = s0;
        // the step cap near branch points slows convergence to geometric,
        // so the iteration budget is generous
        for (int it = 0; it < 150; ++it) {
            CVec arg = theta_arg(s.A, sheet);
            cplx G = theta(arg, theta_);
            CVec grad = theta_gradient(arg, theta_);
            cplx Gp{0.0, 0.0};
            for (int i = 0; i < h; ++i)
                Gp += grad(i) * static_cast<double>(sheet) *
                      C_.form_over_dx(forms[i], s.pos, s.ref);
            if (std::abs(Gp) < 1e-300) return;
            cplx dx = -G / Gp;
            double cap = std::min(1.0, 0.4 * C_.dist_to_branch(s.pos, s.pos));
            if (std::abs(dx) > cap) dx *= cap / std::abs(dx);
            if (std::abs(s.pos + dx) > 1.3 * L) return;  // escaped; w-chart seeds cover
            try {
                s = advance(C_, forms, s, s.pos + dx, quad);
            } catch (const Error&) {
                return;
            }
            if (std::abs(dx) < 1e-11) {
                CVec arg2 = theta_arg(s.A, sheet);
                if (std::abs(theta(arg2, theta_)) > 1e-6 * std::abs(theta(CVec(-e), theta_)) &&
                    std::abs(theta(arg2, theta_)) > 1e-6)
                    return;
                Zero z;
                z.at_infinity = false;
                z.inf_sign = 0;
                z.x = s.pos;
                z.y = (sheet > 0) ? s.ref : -s.ref;
                z.state = s;
                z.sheet = sheet;
                try_register(z);
                return;
            }
        }
    };

    // Newton in the w chart near one infinity
    auto newton_w = [&](ContState s0) {
        ContState s = s0;
        for (int it = 0; it < 150; ++it) {
            CVec arg(s.A - e);
            cplx G = theta(arg, theta_);
            CVec grad = theta_gradient(arg, theta_);
            cplx Gp{0.0, 0.0};
            for (int i = 0; i < h; ++i) Gp += grad(i) * C_.form_over_dw(forms[i], s.pos, s.ref);
            if (std::abs(Gp) < 1e-300) return;
            cplx dw = -G / Gp;
            if (std::abs(dw) > 0.3 * wlim) dw *= 0.3 * wlim / std::abs(dw);
            if (std::abs(s.pos + dw) > wlim) return;  // handled by the x grid
            try {
                s = advance(C_, forms, s, s.pos + dw, quad);
            } catch (const Error&) {
                return;
            }
            if (std::abs(dw) < 1e-12) {
                if (std::abs(theta(CVec(s.A - e), theta_)) > 1e-6) return;
                Zero z;
                z.state = s;
                z.sheet = +1;
                if (std::abs(s.pos) < 1e-8) {
                    z.at_infinity = true;
                    z.inf_sign = (s.ref.real() > 0) ? +1 : -1;
                    z.x = z.y = 0.0;
                } else {
                    z.at_infinity = false;
                    z.inf_sign = 0;
                    z.x = 1.0 / s.pos;
                    z.y = s.ref / std::pow(s.pos, g + 1);
                }
                try_register(z);
                return;
            }
        }
    };

    // serpentine continuation of A over an n x n grid on the tracked sheet
    auto seed_grid = [&](int n) {
        auto grid_x = [&](int r, int c) {
            int cc = (r % 2 == 0) ? c : n - 1 - c;
            return cplx{-L + (cc + 0.513) * 2.0 * L / n, -L + (r + 0.487) * 2.0 * L / n};
        };
        cplx x0 = grid_x(0, 0);
        cplx y0 = std::sqrt(C_.f(x0));
        SurfacePath p0 = C_.path_to(SurfacePoint::finite(x0, y0));
        auto v0 = C_.integrate_forms(forms, p0, quad);
        ContState st;
        st.wchart = false;
        st.pos = x0;
        st.ref = C_.continue_y(p0).y;
        st.A = Eigen::Map<CVec>(v0.data(), h) - off_prym_;

        std::vector<ContState> snaps;
        std::vector<double> mag1, mag2;
        snaps.reserve(static_cast<size_t>(n) * static_cast<size_t>(n));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                if (!(r == 0 && c == 0)) st = advance(C_, forms, st, grid_x(r, c), quad);
                snaps.push_back(st);
                mag1.push_back(std::abs(theta(theta_arg(st.A, +1), theta_)));
                mag2.push_back(std::abs(theta(theta_arg(st.A, -1), theta_)));
            }
        auto is_local_min = [&](const std::vector<double>& m, int r, int c) {
            double v = m[r * n + c];
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    int rr = r + dr, cc = c + dc;
                    if (rr < 0 || rr >= n || cc < 0 || cc >= n) continue;
                    if (m[rr * n + cc] < v) return false;
                }
            return true;
        };
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                if (is_local_min(mag1, r, c)) newton_x(snaps[r * n + c], +1);
                if (is_local_min(mag2, r, c)) newton_x(snaps[r * n + c], -1);
            }
    };

    // infinity charts: continue into both w charts and seed an m x m box
    auto seed_w = [&](int sgn, int m) {
        const double w0r = 0.8 * wlim;
        SurfacePath pw = C_.path_near_infinity(cplx{w0r, 0.0}, sgn);
        PathTrace tw = C_.trace(pw);
        auto vw = C_.integrate_forms(forms, pw, tw, quad);
        ContState sw;
        sw.wchart = true;
        sw.pos = cplx{w0r, 0.0};
        sw.ref = tw.segs.back().ref.back();
        sw.A = Eigen::Map<CVec>(vw.data(), h) - off_prym_;

        std::vector<ContState> wsnaps;
        std::vector<double> wmag;
        ContState cur = sw;
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                int cc = (r % 2 == 0) ? c : m - 1 - c;
                cplx wt{-0.7 * wlim + (cc + 0.5) * 1.4 * wlim / m,
                        -0.7 * wlim + (r + 0.5) * 1.4 * wlim / m};
                cur = advance(C_, forms, cur, wt, quad);
                wsnaps.push_back(cur);
                wmag.push_back(std::abs(theta(CVec(cur.A - e), theta_)));
            }
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                double v = wmag[r * m + c];
                bool lm = true;
                for (int dr = -1; dr <= 1 && lm; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) {
                        int rr = r + dr, cc2 = c + dc;
                        if (rr < 0 || rr >= m || cc2 < 0 || cc2 >= m) continue;
                        if (wmag[rr * m + cc2] < v) {
                            lm = false;
                            break;
                        }
                    }
                if (lm) newton_w(wsnaps[r * m + c]);
            }
    };

    // multiplicities by the argument principle on a small circle
    auto count_zeros = [&](Divisor& out) {
        out.points.clear();
        int total = 0;
        for (const Zero& z : zeros) {
        const int steps = 32;
        ContState s = z.state;
        cplx center = s.pos;
        // keep the circle clear of branch points
        double rho = 1e-3;
        if (!s.wchart) rho = std::min(rho, 0.5 * C_.dist_to_branch(center, center));
        rho = std::max(rho, 1e-7);
        auto Gval = [&](const ContState& cs) {
            if (cs.wchart) return theta(CVec(cs.A - e), theta_);
            return theta(theta_arg(cs.A, z.sheet), theta_);
        };
        ContState cs = advance(C_, forms, s, center + rho, quad);
        double prev_arg = std::arg(Gval(cs));
        double winding = 0.0;
        for (int i = 1; i <= steps; ++i) {
            double th = 2.0 * kPi * i / steps;  // i == steps closes the loop
            cs = advance(C_, forms, cs, center + rho * cplx{std::cos(th), std::sin(th)}, quad);
            double a = std::arg(Gval(cs));
            double d = a - prev_arg;
            d -= 2.0 * kPi * std::round(d / (2.0 * kPi));
            winding += d;
            prev_arg = a;
        }
        int mult = static_cast<int>(std::lround(winding / (2.0 * kPi)));
        if (mult <= 0) mult = 1;
        SurfacePoint pt = z.at_infinity ? SurfacePoint::infinity(z.inf_sign)
                                        : SurfacePoint::finite(z.x, z.y);
        out.add(pt, mult);
        total += mult;
        }
        return total;
    };

    Divisor out;
    seed_grid(40);
    for (int sgn : {+1, -1}) seed_w(sgn, 8);
    if (count_zeros(out) != 2 * h) {
        // a zero can fall between grid seeds; retry once at finer resolution
        seed_grid(79);
        for (int sgn : {+1, -1}) seed_w(sgn, 12);
        int total = count_zeros(out);
        if (total != 2 * h)
            throw ZeroCountMismatch("zeros_of_F_e: found " + std::to_string(total) +
                                    " zeros, expected " + std::to_string(2 * h));
    }
    std::sort(out.points.begin(), out.points.end(), [](const auto& a, const auto& b) {
        if (a.first.at_infinity != b.first.at_infinity) return a.first.at_infinity;
        if (a.first.at_infinity) return a.first.inf_sign > b.first.inf_sign;
        if (a.first.x.real() != b.first.x.real()) return a.first.x.real() < b.first.x.real();
        if (a.first.x.imag() != b.first.x.imag()) return a.first.x.imag() < b.first.x.imag();
        return a.first.y.real() < b.first.y.real();
    });
    return out;
}

VN1Result PrymSystem::check_vn1(const Divisor& zeta) const {
    VN1Result r;
    Divisor sz = apply_divisor(C_, InvolutionTag::Sigma, zeta);
    r.combination = abel(zeta) + abel(sz);
    auto red_paper = reduce_mod_lattice(CVec(r.combination - 2.0 * abel_delta_), jac_lat_);
    auto red_match = reduce_mod_lattice(CVec(r.combination - abel_delta_), jac_lat_);
    r.residual_paper = red_paper.norm;
    r.residual_matched = red_match.norm;
    r.offset = (red_paper.norm <= red_match.norm) ? red_paper.residual : red_match.residual;
    r.holds = std::min(r.residual_paper, r.residual_matched) < C_.tol().lattice_tol;
    return r;
}

// Interpolation matrix: rows are the points of the symmetrized divisor,
// columns the basis {1, x, ..., x^{2h}} + {x^m y | m <= 2h-g-1} of
// L(2h inf+ + 2h inf-).
CMat PrymSystem::vn2_matrix(const Divisor& sym, int* rows_out) const {
    const int g = C_.genus(), h = C_.h();
    const int npoly = 2 * h + 1;
    const int ny = std::max(0, 2 * h - g);
    const int ncols = npoly + ny;
    int nrows = 0;
    for (const auto& [p, m] : sym.points) nrows += m;
    CMat M = CMat::Zero(nrows, ncols);
    int r = 0;
    for (const auto& [p, m] : sym.points)
        for (int rep = 0; rep < m; ++rep, ++r) {
            if (p.at_infinity) {
                // leading behavior: f ~ x^{2h} (a_{2h} + s * c_top)
                M(r, npoly - 1) = 1.0;
                if (ny > 0) M(r, ncols - 1) = static_cast<double>(p.inf_sign);
                continue;
            }
            cplx xp{1.0, 0.0};
            for (int i = 0; i < npoly; ++i) {
                M(r, i) = xp;
                xp *= p.x;
            }
            cplx xy = p.y;
            for (int i = 0; i < ny; ++i) {
                M(r, npoly + i) = xy;
                xy *= p.x;
            }
        }
    if (rows_out) *rows_out = nrows;
    return M;
}

VN2Result PrymSystem::check_vn2(const Divisor& zeta) const {
    VN2Result r;
    Divisor sym = zeta;
    for (const auto& [p, m] : apply_divisor(C_, InvolutionTag::Sigma, zeta).points)
        sym.add(p, m);
    int nrows = 0;
    CMat M = vn2_matrix(sym, &nrows);
    for (int i = 0; i < nrows; ++i) M.row(i) /= M.row(i).norm();
    const int ncols = static_cast<int>(M.cols());
    Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    r.rel_sv = sv(ncols - 1) / std::max(sv(0), 1e-300);
    r.function_exists = r.rel_sv < 1e-8;
    if (!r.function_exists) {
        r.holds = false;
        return r;
    }
    int ndim = 0;
    for (int i = 0; i < ncols; ++i)
        if (sv(i) < 1e-8 * std::max(sv(0), 1e-300)) ++ndim;

    CVec v = svd.matrixV().col(ncols - 1);
    // fix the null vector's free phase by the largest polynomial coefficient
    int imax = 0;
    double amax = 0.0;
    for (int i = 0; i < 2 * C_.h() + 1; ++i)
        if (std::abs(v(i)) > amax) {
            amax = std::abs(v(i));
            imax = i;
        }
    if (amax > 0.0) v *= std::conj(v(imax)) / std::abs(v(imax));
    v /= v.norm();

    const int npoly = 2 * C_.h() + 1;
    const int ny = static_cast<int>(M.cols()) - npoly;
    auto eval = [&](const SurfacePoint& p) {
        cplx out{0.0, 0.0}, xp{1.0, 0.0};
        for (int i = 0; i < npoly; ++i) {
            out += v(i) * xp;
            xp *= p.x;
        }
        cplx xy = p.y;
        for (int i = 0; i < ny; ++i) {
            out += v(npoly + i) * xy;
            xy *= p.x;
        }
        return out;
    };
    const int k = C_.k();
    r.defect = 0.0;
    for (int j = 1; j <= k; ++j) {
        const auto& [q1, q2] = C_.involutions().ramification_pairs[static_cast<size_t>(j)];
        cplx f1 = eval(q1), f2 = eval(q2);
        r.value_q1.push_back(f1);
        r.value_q2.push_back(f2);
        if (j == 1) r.signed_defect = f1 - f2;
        double rel = std::abs(f1 - f2) / std::max({std::abs(f1), std::abs(f2), 1.0});
        r.defect = std::max(r.defect, rel);
    }
    // a null space of dimension > k always contains a matching element
    r.holds = (ndim > k) || r.defect < 1e-6;
    return r;
}

Divisor PrymSystem::lw_family_divisor(const CVec& p) const {
    if (C_.spec().family != Family::B)
        throw ConfigError("lw_family_divisor: defined for the four-branch-pair family only");
    if (p.size() != 4) throw ConfigError("lw_family_divisor: expected (q0, q2, q4, c)");
    const cplx q0 = p(0), q2 = p(1), q4 = p(2), c = p(3);
    auto q = [&](cplx x) { return q0 + q2 * x * x + q4 * x * x * x * x; };
    Divisor out;
    if (std::abs(c) < 1e-13) {
        // zero divisor of the even quartic: both sheets over each root pair
        cplx d = std::sqrt(q2 * q2 - 4.0 * q4 * q0);
        for (cplx s2 : {(-q2 + d) / (2.0 * q4), (-q2 - d) / (2.0 * q4)}) {
            cplx x = std::sqrt(s2);
            cplx y = std::sqrt(C_.f(x));
            out.add(SurfacePoint::finite(x, y), 1);
            out.add(SurfacePoint::finite(x, -y), 1);
        }
        return out;
    }
    // resultant q(x)^2 - c^2 f(x): its roots are the x-projections of
    // the zeros of q + c*y on both sheets
    const int deg = 8;
    CVec fc = CVec::Zero(deg + 1);  // f(x) coefficients, ascending
    {
        std::vector<cplx> fv{1.0};
        for (const cplx& b : C_.spec().branch_params) {
            std::vector<cplx> nv(fv.size() + 2, cplx{0.0, 0.0});
            for (size_t i = 0; i < fv.size(); ++i) {
                nv[i] -= b * b * fv[i];
                nv[i + 2] += fv[i];
            }
            fv = nv;
        }
        for (int i = 0; i <= deg; ++i) fc(i) = fv[static_cast<size_t>(i)];
    }
    CVec rc = -c * c * fc;
    rc(0) += q0 * q0;
    rc(2) += 2.0 * q0 * q2;
    rc(4) += q2 * q2 + 2.0 * q0 * q4;
    rc(6) += 2.0 * q2 * q4;
    rc(8) += q4 * q4;
    if (std::abs(rc(deg)) < 1e-12 * rc.cwiseAbs().maxCoeff())
        throw ExpansionFailed("lw_family_divisor: degenerate leading coefficient");
    CMat comp = CMat::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -rc(i) / rc(deg);
    Eigen::ComplexEigenSolver<CMat> es(comp);
    std::vector<cplx> roots(es.eigenvalues().data(), es.eigenvalues().data() + deg);
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    // one representative per sigma-orbit {x, -x}
    std::vector<bool> used(roots.size(), false);
    for (size_t i = 0; i < roots.size(); ++i) {
        if (used[i]) continue;
        used[i] = true;
        size_t jbest = 0;
        double dbest = std::numeric_limits<double>::max();
        for (size_t j = 0; j < roots.size(); ++j) {
            if (used[j]) continue;
            double d = std::abs(roots[j] + roots[i]);
            if (d < dbest) {
                dbest = d;
                jbest = j;
            }
        }
        used[jbest] = true;
        cplx x = roots[i];
        out.add(SurfacePoint::finite(x, -q(x) / c), 1);
    }
    return out;
}

cplx PrymSystem::vn_family_defect(const CVec& p) const {
    return check_vn2(lw_family_divisor(p)).signed_defect;
}

double PrymSystem::verify_cor2(const CVec& e, const Divisor& zeta) const {
    // with the Abel-Prym map based at Q'_0 and a-periods normalized to
    // 2 pi i over curve cycles, the zero divisor of F_e satisfies
    // Ab_prym(zeta) = 2e mod lattice (every coordinate doubles: the curve's
    // a-cycles double-cover the Prym a-cycles)
    CVec a = abel_prym(zeta);
    return reduce_mod_lattice(CVec(a - 2.0 * e), prym_lat_).norm;
}

CVec PrymSystem::alt_map(const Divisor& zeta) const {
    Divisor sz = apply_divisor(C_, InvolutionTag::Sigma, zeta);
    CVec v = abel(zeta) - abel(sz);
    return reduce_mod_lattice(v, jac_lat_).residual;
}

int PrymSystem::vn_rank_check(const CVec& p0, double fd_step) const {
    const int k = C_.k();
    if (k == 0) return 0;
    // Jacobian of the defect over the non-normalized family parameters
    const int np = static_cast<int>(p0.size()) - 1;
    CMat Jac(k, np);
    for (int i = 0; i < np; ++i) {
        CVec pp = p0, pm = p0;
        pp(i + 1) += fd_step;
        pm(i + 1) -= fd_step;
        Jac.col(i) = CVec::Constant(
            k, (vn_family_defect(pp) - vn_family_defect(pm)) / (2.0 * fd_step));
    }
    Eigen::JacobiSVD<CMat> svd(Jac);
    double smax = svd.singularValues().maxCoeff();
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-6 * std::max(1.0, smax)) ++rank;
    if (rank < k) throw RankDeficient("vn defect map rank below k");
    return rank;
}

CVec PrymSystem::find_vn_point(const CVec& p_start, const CVec& dir) const {
    const int k = C_.k();
    if (k == 0) return p_start;
    auto D = [&](cplx t) { return vn_family_defect(CVec(p_start + t * dir)); };
    // coarse scan for a sign change of Re D along real t
    const int ns = 80;
    double lo = 0.0, hi = 0.0;
    bool found = false;
    double prev = D(cplx{-2.0, 0.0}).real();
    for (int i = 1; i <= ns; ++i) {
        double t = -2.0 + 4.0 * i / ns;
        double cur = D(cplx{t, 0.0}).real();
        if (std::isfinite(prev) && std::isfinite(cur) && prev * cur < 0.0) {
            lo = -2.0 + 4.0 * (i - 1) / ns;
            hi = t;
            found = true;
            break;
        }
        prev = cur;
    }
    cplx t_best;
    if (found) {
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            double v = D(cplx{mid, 0.0}).real();
            if (D(cplx{lo, 0.0}).real() * v <= 0.0)
                hi = mid;
            else
                lo = mid;
        }
        t_best = cplx{0.5 * (lo + hi), 0.0};
    } else {
        // start a complex secant from the scan minimum
        double best = std::numeric_limits<double>::max();
        double targ = 0.0;
        for (int i = 0; i <= ns; ++i) {
            double t = -2.0 + 4.0 * i / ns;
            double v = std::abs(D(cplx{t, 0.0}));
            if (v < best) {
                best = v;
                targ = t;
            }
        }
        t_best = cplx{targ, 0.0};
    }
    // complex secant polish (D is holomorphic in t)
    cplx t0 = t_best, t1 = t_best + cplx{1e-4, 1e-4};
    cplx d0 = D(t0), d1 = D(t1);
    for (int it = 0; it < 80; ++it) {
        if (std::abs(d1) < 1e-12) break;
        cplx denom = d1 - d0;
        if (std::abs(denom) < 1e-300) break;
        cplx t2 = t1 - d1 * (t1 - t0) / denom;
        t0 = t1;
        d0 = d1;
        t1 = t2;
        d1 = D(t1);
    }
    if (std::abs(d1) > 1e-8)
        throw NonConvergence("find_vn_point: defect did not converge to zero");
    return CVec(p_start + t1 * dir);
}

}  // namespace prymlab
