#include "prymlab/baker_akhiezer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prymlab {

namespace {

cplx zat(const GridSpec& g, int r, int c) {
    return g.center + g.step * cplx{c - 0.5 * (g.n - 1), 0.5 * (g.n - 1) - r};
}

// flat point list of a divisor, multiplicities expanded
std::vector<SurfacePoint> flatten(const Divisor& d) {
    std::vector<SurfacePoint> out;
    for (const auto& [p, m] : d.points)
        for (int i = 0; i < m; ++i) out.push_back(p);
    return out;
}

// dbar f = 1/2 (df/dx + i df/dy) by central differences on the grid
// orientation of zat (imaginary part decreasing with the row index)
cplx dbar_fd(const CMat& f, int r, int c, double step) {
    cplx dx = (f(r, c + 1) - f(r, c - 1)) / (2.0 * step);
    cplx dy = (f(r - 1, c) - f(r + 1, c)) / (2.0 * step);
    return 0.5 * (dx + cplx{0.0, 1.0} * dy);
}

}  // namespace

BASystem::BASystem(const PrymSystem& ps, const Divisor& zeta)
    : ps_(ps), C_(ps.curve()) {
    const int g = C_.genus(), h = C_.h(), k = C_.k();
    if (zeta.degree() != 2 * h)
        throw ConfigError("BASystem: pole divisor must have degree 2h");
    cfg_.zeta = zeta;

    // Abel offset of inf+, same convention as the Prym system
    {
        SurfacePath p0 = C_.path_near_infinity(cplx{0.0, 0.0}, +1);
        auto v = C_.integrate_forms(ps_.periods().prym_forms, p0, C_.tol().quad_tol);
        off_prym_ = Eigen::Map<CVec>(v.data(), h);
    }

    // e_j = Ab_prym(zeta_j), zeta_j = P_1 + ... + P_{g-1} + P_{g+j}
    auto pts = flatten(zeta);
    for (int j = 0; j <= k; ++j) {
        CVec ej = CVec::Zero(h);
        for (int i = 0; i < g - 1; ++i) ej += ps_.abel_point(pts[static_cast<size_t>(i)], true);
        ej += ps_.abel_point(pts[static_cast<size_t>(g - 1 + j)], true);
        cfg_.e.push_back(ej);
    }
    cfg_.e_two = ps_.abel_prym(zeta);

    // canonical theta parameter: the half-lattice translate of e_two/2 whose
    // divisor function comes closest to vanishing on all points of zeta
    {
        const ThetaContext& ctx = ps_.theta_ctx();
        const LatticeBasis& lat = ps_.prym_lattice();
        std::vector<CVec> apts;
        for (const auto& p : pts) apts.push_back(ps_.abel_point(p, true));
        CVec base = 0.5 * cfg_.e_two;
        double best = std::numeric_limits<double>::max();
        for (int mask = 0; mask < (1 << (2 * h)); ++mask) {
            CVec cand = base;
            for (int gi = 0; gi < 2 * h; ++gi)
                if (mask & (1 << gi)) cand += 0.5 * lat.generators()[static_cast<size_t>(gi)];
            double worst = 0.0;
            for (const CVec& a : apts)
                worst = std::max(worst, std::abs(theta(CVec(a - cand), ctx)));
            if (worst < best) {
                best = worst;
                cfg_.e_canonical = cand;
            }
        }
        cfg_.canonical_defect = best;
    }

    cfg_.omega1 = build_second_kind(C_, ps_.periods(), 1);
    cfg_.omega2 = build_second_kind(C_, ps_.periods(), 2);

    derive_U();
    build_circle();

    // regularized exponent constants at Q'_0 from the circle data:
    // I1 - 1/w and I2 are analytic in w there; the 16-point DFT gives the
    // constant terms to machine precision
    cplx r1{0.0, 0.0}, r2{0.0, 0.0};
    for (size_t l = 0; l < circle_.size(); ++l) {
        r1 += circle_[l].I1 - 1.0 / circle_w_[l];
        r2 += circle_[l].I2;
    }
    cfg_.r1 = r1 / static_cast<double>(circle_.size());
    cfg_.r2 = r2 / static_cast<double>(circle_.size());
}

void BASystem::derive_U() {
    const int h = C_.h();
    const auto& pd = ps_.periods();
    const auto& cb = pd.cycles;
    CMat lp_prym = loop_period_matrix(C_, pd.prym_forms, cb);
    CMat lp_om = loop_period_matrix(C_, {cfg_.omega1, cfg_.omega2}, cb);
    const LatticeBasis& lat = ps_.prym_lattice();

    std::vector<IVec> classes = cb.a_cycles;
    classes.insert(classes.end(), cb.b_cycles.begin(), cb.b_cycles.end());

    std::vector<RVec> rows;
    std::vector<cplx> rhs1, rhs2;
    for (const IVec& cls : classes) {
        CVec lam = combine_periods(lp_prym, cls);
        CVec om = combine_periods(lp_om, cls);
        // decompose the Prym period over the lattice generators; the
        // coefficients must be integers (quadrature noise aside)
        RVec coef = lat.real_generators().colPivHouseholderQr().solve(
            LatticeBasis::realify(lam));
        RVec rounded = coef.array().round();
        if ((coef - rounded).cwiseAbs().maxCoeff() > 1e-6)
            throw CancellationUnsolvable(
                "derive_U: cycle period is not a lattice vector");
        rows.push_back(rounded.tail(h));  // Pi-column coefficients N
        rhs1.push_back(om(0));
        rhs2.push_back(om(1));
    }
    const int nr = static_cast<int>(rows.size());
    CMat M(nr, h);
    CVec b1(nr), b2(nr);
    for (int i = 0; i < nr; ++i) {
        for (int j = 0; j < h; ++j) M(i, j) = rows[static_cast<size_t>(i)](j);
        b1(i) = rhs1[static_cast<size_t>(i)];
        b2(i) = rhs2[static_cast<size_t>(i)];
    }
    // exp(z(w1 - N^T U1) + zbar(w2 - N^T U2)) must be 1 for every cycle
    cfg_.U1 = M.colPivHouseholderQr().solve(b1);
    cfg_.U2 = M.colPivHouseholderQr().solve(b2);
    double res = std::max((M * cfg_.U1 - b1).cwiseAbs().maxCoeff(),
                          (M * cfg_.U2 - b2).cwiseAbs().maxCoeff());
    double scale = std::max({b1.cwiseAbs().maxCoeff(), b2.cwiseAbs().maxCoeff(), 1.0});
    cfg_.cancel_residual = res / scale;
    if (cfg_.cancel_residual > 1e-8)
        throw CancellationUnsolvable("derive_U: cancellation system inconsistent");
}

void BASystem::build_circle() {
    const int h = C_.h();
    std::vector<DifferentialForm> forms = ps_.periods().prym_forms;
    forms.push_back(cfg_.omega1);
    forms.push_back(cfg_.omega2);
    const int nl = 16;
    const double r = circle_r_;
    for (int l = 0; l < nl; ++l) {
        double th = 2.0 * kPi * l / nl;
        cplx wl = r * cplx{std::cos(th), std::sin(th)};
        SurfacePath path = C_.path_near_infinity(cplx{r, 0.0}, +1);
        // walk the circle in short chords; w = 0 is not a branch point
        const int steps_per = 2;
        for (int s = 1; s <= steps_per * l; ++s) {
            double a0 = th * (s - 1) / (steps_per * l);
            double a1 = th * s / (steps_per * l);
            path.wline(r * cplx{std::cos(a0), std::sin(a0)},
                       r * cplx{std::cos(a1), std::sin(a1)});
        }
        auto v = C_.integrate_forms(forms, path, C_.tol().quad_tol);
        PointData pdp;
        pdp.A = Eigen::Map<CVec>(v.data(), h) - off_prym_;
        pdp.I1 = v[static_cast<size_t>(h)];
        pdp.I2 = v[static_cast<size_t>(h) + 1];
        circle_.push_back(pdp);
        circle_w_.push_back(wl);
    }
}

PointData BASystem::eval_path(const SurfacePath& path) const {
    std::vector<DifferentialForm> forms = ps_.periods().prym_forms;
    forms.push_back(cfg_.omega1);
    forms.push_back(cfg_.omega2);
    auto v = C_.integrate_forms(forms, path, C_.tol().quad_tol);
    PointData out;
    const int h = C_.h();
    out.A = Eigen::Map<CVec>(const_cast<cplx*>(v.data()), h) - off_prym_;
    out.I1 = v[static_cast<size_t>(h)];
    out.I2 = v[static_cast<size_t>(h) + 1];
    return out;
}

PointData BASystem::eval_point(const SurfacePoint& p) const {
    if (p.at_infinity)
        throw ConfigError("eval_point: psi has essential singularities at infinity");
    return eval_path(C_.path_to(p));
}

cplx BASystem::theta_quotient(const CVec& A, const CVec& uzv, const CVec& e, int m) const {
    const ThetaContext& ctx = ps_.theta_ctx();
    cplx num = theta_hat(m, CVec(A + uzv - e), ctx) * theta(e, ctx);
    cplx d1 = theta(CVec(A - e), ctx);
    cplx d2 = theta_hat(m, CVec(uzv - e), ctx);
    if (std::abs(d1) < 1e-12 || std::abs(d2) < 1e-12)
        throw NearThetaDivisor("theta_quotient: denominator on the theta divisor");
    return num / (d1 * d2);
}

cplx BASystem::expo(const PointData& pd, cplx z) const {
    return std::exp(z * (pd.I1 - cfg_.r1) + std::conj(z) * (pd.I2 - cfg_.r2));
}

cplx BASystem::psi_j(const PointData& pd, cplx z, int j) const {
    if (j < 0 || j > C_.k()) throw ConfigError("psi_j: j out of range");
    return theta_quotient(pd.A, uz(z), cfg_.e[static_cast<size_t>(j)], 0) * expo(pd, z);
}

cplx BASystem::psi_j(const SurfacePoint& p, cplx z, int j) const {
    return psi_j(eval_point(p), z, j);
}

cplx BASystem::psi_char(const PointData& pd, cplx z, int m) const {
    if (m < 0 || m > C_.k()) throw ConfigError("psi_char: m out of range");
    return theta_quotient(pd.A, uz(z), cfg_.e_canonical, m) * expo(pd, z);
}

cplx BASystem::psi_char(const SurfacePoint& p, cplx z, int m) const {
    return psi_char(eval_point(p), z, m);
}

CVec BASystem::solve_c(cplx z) const {
    const int k = C_.k();
    if (k == 0) return CVec::Ones(1);
    // cache the branch-pair point data across calls
    if (pair_data_.empty()) {
        for (int j = 1; j <= k; ++j) {
            const auto& [q1, q2] =
                C_.involutions().ramification_pairs[static_cast<size_t>(j)];
            pair_data_.emplace_back(eval_point(q1), eval_point(q2));
        }
    }
    CMat M = CMat::Zero(k + 1, k + 1);
    CVec rhs = CVec::Zero(k + 1);
    for (int j = 0; j <= k; ++j) M(0, j) = 1.0;
    rhs(0) = 1.0;
    for (int s = 1; s <= k; ++s) {
        const auto& [p1, p2] = pair_data_[static_cast<size_t>(s - 1)];
        for (int m = 0; m <= k; ++m)
            M(s, m) = psi_char(p1, z, m) - psi_char(p2, z, m);
    }
    Eigen::JacobiSVD<CMat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smin = svd.singularValues().minCoeff();
    double smax = svd.singularValues().maxCoeff();
    if (smin < smax / 1e12)
        throw SingularAtZ("solve_c: matching system singular at this z");
    return svd.solve(rhs);
}

cplx BASystem::psi_combined(const SurfacePoint& p, cplx z) const {
    CVec c = solve_c(z);
    PointData pd = eval_point(p);
    cplx out{0.0, 0.0};
    for (int m = 0; m <= C_.k(); ++m) out += c(m) * psi_char(pd, z, m);
    return out;
}

cplx BASystem::psi_hat_rep(const PointData& pd, cplx z, int m, int j) const {
    const int k = C_.k();
    if (m < 1 || m > k) throw ConfigError("psi_hat_rep: requires 1 <= m <= k");
    if (j < 0 || j > k) throw ConfigError("psi_hat_rep: j out of range");
    return theta_quotient(pd.A, uz(z), cfg_.e[static_cast<size_t>(j)], m) * expo(pd, z);
}

cplx BASystem::psi_hat_rep(const SurfacePoint& p, cplx z, int m, int j) const {
    return psi_hat_rep(eval_point(p), z, m, j);
}

cplx BASystem::psi_two_involution(const PointData& pd, cplx z, int m) const {
    if (m < 0 || m > C_.k()) throw ConfigError("psi_two_involution: m out of range");
    // theta(x - e_canonical) = theta_hat_m(x - e_canonical - 2 pi i beta_m),
    // so the normalized BA function is the theta_hat_m quotient anchored at
    // the characteristic-shifted parameter, for every m <= k
    const ThetaContext& ctx = ps_.theta_ctx();
    const CVec em =
        cfg_.e_canonical + CVec(kTwoPiI * theta_characteristic(m, C_.h()).cast<cplx>());
    CVec uzv = uz(z);
    cplx num = theta_hat(m, CVec(pd.A + uzv - em), ctx) * theta(cfg_.e_canonical, ctx);
    cplx d1 = theta(CVec(pd.A - cfg_.e_canonical), ctx);
    cplx d2 = theta_hat(m, CVec(uzv - em), ctx);
    if (std::abs(d1) < 1e-12 || std::abs(d2) < 1e-12)
        throw NearThetaDivisor("psi_two_involution: denominator on the theta divisor");
    return num / (d1 * d2) * expo(pd, z);
}

cplx BASystem::psi_two_involution(const SurfacePoint& p, cplx z, int m) const {
    return psi_two_involution(eval_point(p), z, m);
}

std::vector<SurfacePoint> BASystem::default_probes() const {
    double maxb = 0.0;
    for (const cplx& b : C_.branch_points()) maxb = std::max(maxb, std::abs(b));
    std::vector<cplx> xs = {0.9 * maxb * cplx{0.52, 0.83}, 0.9 * maxb * cplx{-0.74, 0.41},
                            0.9 * maxb * cplx{0.33, -0.67}};
    std::vector<SurfacePoint> out;
    for (cplx x : xs) out.push_back(SurfacePoint::finite(x, std::sqrt(C_.f(x))));
    return out;
}

PotentialResult BASystem::potential_theta(const GridSpec& grid) const {
    const int n = grid.n;
    const ThetaContext& ctx = ps_.theta_ctx();
    const CVec beta_shift = kTwoPiI * theta_characteristic(C_.k(), C_.h()).cast<cplx>();
    std::vector<CVec> candidates = {CVec(-cfg_.e_canonical),
                                    CVec(-cfg_.e_canonical + beta_shift)};

    // psi at the internal probe for fitting C and ranking the Z choices
    SurfacePoint probe = default_probes().front();
    PointData pd = eval_point(probe);
    CMat psi_grid(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) psi_grid(r, c) = psi_char(pd, zat(grid, r, c), 0);

    PotentialResult best;
    double best_res = std::numeric_limits<double>::max();
    for (int choice = 0; choice < 2; ++choice) {
        std::vector<CVec> args;
        args.reserve(static_cast<size_t>(n) * static_cast<size_t>(n));
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                args.push_back(CVec(uz(zat(grid, r, c)) + candidates[static_cast<size_t>(choice)]));
        CMat u0 = 2.0 * log_theta_dd(args, n, n, grid.step, ctx);

        // fit C at the grid center: lap psi + (u0 + C) psi = 0
        int rc = n / 2, cc = n / 2;
        std::array<std::array<cplx, 3>, 3> st;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc)
                st[static_cast<size_t>(dr + 1)][static_cast<size_t>(dc + 1)] =
                    psi_grid(rc + dr, cc + dc);
        cplx lap = wirtinger_laplacian(st, grid.step);
        cplx C = -(lap / psi_grid(rc, cc) + u0(rc - 1, cc - 1));
        CMat u = (u0.array() + C).matrix();

        // rank by the residual over the interior
        double rmax = 0.0, pmax = 0.0;
        for (int r = 1; r < n - 1; ++r)
            for (int c = 1; c < n - 1; ++c) {
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        st[static_cast<size_t>(dr + 1)][static_cast<size_t>(dc + 1)] =
                            psi_grid(r + dr, c + dc);
                cplx res = wirtinger_laplacian(st, grid.step) + u(r - 1, c - 1) * psi_grid(r, c);
                rmax = std::max(rmax, std::abs(res));
                pmax = std::max(pmax, std::abs(psi_grid(r, c)));
            }
        double rel = rmax / std::max(pmax, 1e-300);
        if (rel < best_res) {
            best_res = rel;
            best.u = u;
            best.C = C;
            best.Z = candidates[static_cast<size_t>(choice)];
            best.z_choice = choice;
        }
    }
    return best;
}

XiResult BASystem::potential_xi(const GridSpec& grid) const {
    const int n = grid.n;
    const int nl = static_cast<int>(circle_.size());
    XiResult out;
    out.xi1 = CMat(n, n);
    CMat xi0(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            cplx z = zat(grid, r, c);
            CVec uzv = uz(z);
            KahanSum s0, s1;
            for (int l = 0; l < nl; ++l) {
                const PointData& pl = circle_[static_cast<size_t>(l)];
                // psi divided by exp(z/w): the regular factor of the expansion
                cplx F = theta_quotient(pl.A, uzv, cfg_.e_canonical, 0) *
                         std::exp(z * (pl.I1 - cfg_.r1 - 1.0 / circle_w_[static_cast<size_t>(l)]) +
                                  std::conj(z) * (pl.I2 - cfg_.r2));
                cplx ph = std::polar(1.0, -2.0 * kPi * l / nl);
                s0.add(F);
                s1.add(F * ph);
            }
            xi0(r, c) = s0.value() / static_cast<double>(nl);
            out.xi1(r, c) = s1.value() / static_cast<double>(nl) / circle_r_;
            out.leading_error = std::max(out.leading_error, std::abs(xi0(r, c) - 1.0));
        }
    if (out.leading_error > 1e-6)
        throw ExpansionFailed("potential_xi: leading coefficient deviates from 1");
    out.u_log = CMat(n - 2, n - 2);
    out.u_plain = CMat(n - 2, n - 2);
    for (int r = 1; r < n - 1; ++r)
        for (int c = 1; c < n - 1; ++c) {
            cplx d = dbar_fd(out.xi1, r, c, grid.step);
            out.u_plain(r - 1, c - 1) = -d;
            out.u_log(r - 1, c - 1) = -d / out.xi1(r, c);
        }
    return out;
}

ResidualReport BASystem::residual_impl(const std::function<cplx(cplx)>& psi_of_z,
                                       const CMat& u, const GridSpec& grid) const {
    const int n = grid.n;
    CMat psi_grid(n, n);
    Eigen::MatrixXi ok = Eigen::MatrixXi::Ones(n, n);
    ResidualReport rep;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            try {
                psi_grid(r, c) = psi_of_z(zat(grid, r, c));
            } catch (const Error&) {
                ok(r, c) = 0;
                ++rep.excluded;
            }
        }
    double rmax = 0.0, pmax = 0.0;
    for (int r = 1; r < n - 1; ++r)
        for (int c = 1; c < n - 1; ++c) {
            bool usable = true;
            std::array<std::array<cplx, 3>, 3> st;
            for (int dr = -1; dr <= 1 && usable; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (!ok(r + dr, c + dc)) {
                        usable = false;
                        break;
                    }
                    st[static_cast<size_t>(dr + 1)][static_cast<size_t>(dc + 1)] =
                        psi_grid(r + dr, c + dc);
                }
            if (!usable) continue;
            cplx res = wirtinger_laplacian(st, grid.step) + u(r - 1, c - 1) * psi_grid(r, c);
            rmax = std::max(rmax, std::abs(res));
            pmax = std::max(pmax, std::abs(psi_grid(r, c)));
            ++rep.interior;
        }
    rep.rel_residual = rmax / std::max(pmax, 1e-300);
    return rep;
}

ResidualReport BASystem::schrodinger_residual(int rep_id, const GridSpec& grid,
                                              const std::vector<SurfacePoint>& probes) const {
    PotentialResult pot = potential_theta(grid);
    ResidualReport worst;
    for (const SurfacePoint& p : probes) {
        PointData pd = eval_point(p);
        auto psi_of_z = [&](cplx z) -> cplx {
            switch (rep_id) {
                case 0: {
                    CVec c = solve_c(z);
                    cplx out{0.0, 0.0};
                    for (int m = 0; m <= C_.k(); ++m) out += c(m) * psi_char(pd, z, m);
                    return out;
                }
                case 1:
                    return psi_two_involution(pd, z, C_.k());
                default:
                    return psi_char(pd, z, 0);
            }
        };
        ResidualReport r = residual_impl(psi_of_z, pot.u, grid);
        worst.per_probe.push_back(r.rel_residual);
        worst.excluded += r.excluded;
        worst.interior += r.interior;
        worst.rel_residual = std::max(worst.rel_residual, r.rel_residual);
    }
    return worst;
}

ResidualReport BASystem::conjecture_check(const CVec& A, const CVec& U1, const CVec& U2,
                                          cplx p1, cplx p2, cplx C, const CVec& Z,
                                          const GridSpec& grid) const {
    const int n = grid.n;
    const int m = C_.k();  // theta_hat_1 for family B, plain theta for family A
    const ThetaContext& ctx = ps_.theta_ctx();
    // u carries psi's characteristic: 2 d dbar ln theta_hat_m(.+Z) + C
    const CVec beta_shift = kTwoPiI * theta_characteristic(m, C_.h()).cast<cplx>();
    std::vector<CVec> args;
    args.reserve(static_cast<size_t>(n) * static_cast<size_t>(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            cplx z = zat(grid, r, c);
            args.push_back(CVec(U1 * z + U2 * std::conj(z) + Z + beta_shift));
        }
    CMat u0 = 2.0 * log_theta_dd(args, n, n, grid.step, ctx);
    auto psi_of_z = [&](cplx z) -> cplx {
        CVec w = U1 * z + U2 * std::conj(z) + Z;
        cplx den = theta_hat(m, w, ctx);
        if (std::abs(den) < 1e-12)
            throw NearThetaDivisor("conjecture_check: theta_hat on divisor");
        return theta_hat(m, CVec(A + w), ctx) / den * std::exp(p1 * z + p2 * std::conj(z));
    };
    if (std::isnan(C.real())) {
        int rc = n / 2, cc = n / 2;
        std::array<std::array<cplx, 3>, 3> st;
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc)
                st[static_cast<size_t>(dr + 1)][static_cast<size_t>(dc + 1)] =
                    psi_of_z(zat(grid, rc + dr, cc + dc));
        C = -(wirtinger_laplacian(st, grid.step) / st[1][1] + u0(rc - 1, cc - 1));
    }
    CMat u = (u0.array() + C).matrix();
    ResidualReport rep = residual_impl(psi_of_z, u, grid);
    rep.fitted_C = C;
    return rep;
}

}  // namespace prymlab
