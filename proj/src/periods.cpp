#include "prymlab/periods.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prymlab {

namespace {

std::vector<DifferentialForm> raw_basis(const Curve& C) {
    std::vector<DifferentialForm> fs;
    for (int m = 1; m <= C.genus(); ++m) {
        CVec p = CVec::Zero(m);
        p(m - 1) = 1.0;
        fs.push_back(DifferentialForm::holomorphic(p));
    }
    return fs;
}

// intersection number of two closed loops from tracked polylines
int polyline_intersection(const std::vector<std::pair<cplx, cplx>>& P,
                          const std::vector<std::pair<cplx, cplx>>& Q) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < P.size(); ++i) {
        const cplx a = P[i].first, b = P[i + 1].first;
        const cplx ab = b - a;
        for (size_t j = 0; j + 1 < Q.size(); ++j) {
            const cplx c = Q[j].first, d = Q[j + 1].first;
            const cplx cd = d - c;
            const double det = ab.real() * cd.imag() - ab.imag() * cd.real();
            const double scale = std::abs(ab) * std::abs(cd);
            if (std::abs(det) < 1e-12 * scale) continue;
            const cplx ac = c - a;
            const double t = (ac.real() * cd.imag() - ac.imag() * cd.real()) / det;
            const double s = (ac.real() * ab.imag() - ac.imag() * ab.real()) / det;
            if (t < 0.0 || t >= 1.0 || s < 0.0 || s >= 1.0) continue;
            cplx yP = P[i].second + t * (P[i + 1].second - P[i].second);
            cplx yQ = Q[j].second + s * (Q[j + 1].second - Q[j].second);
            if (std::abs(yP - yQ) > std::abs(yP + yQ)) continue;  // other sheet
            total += (det > 0) ? -1.0 : 1.0;
        }
    }
    return static_cast<int>(std::lround(total));
}

// deterministic candidate list: nonzero integer vectors, entries in [-2,2],
// L1 norm <= bound, first nonzero entry positive, ordered by (L1, lex)
std::vector<IVec> candidate_cycles(int dim, int l1_bound) {
    std::vector<IVec> out;
    IVec cur(dim);
    std::function<void(int, int)> rec = [&](int d, int budget) {
        if (d == dim) {
            if (cur.isZero()) return;
            int fn = 0;
            while (cur(fn) == 0) ++fn;
            if (cur(fn) < 0) return;
            out.push_back(cur);
            return;
        }
        for (int v = -2; v <= 2; ++v) {
            if (std::abs(v) > budget) continue;
            cur(d) = v;
            rec(d + 1, budget - std::abs(v));
        }
        cur(d) = 0;
    };
    rec(0, l1_bound);
    std::stable_sort(out.begin(), out.end(), [](const IVec& a, const IVec& b) {
        int la = a.cwiseAbs().sum(), lb = b.cwiseAbs().sum();
        if (la != lb) return la < lb;
        for (int i = 0; i < a.size(); ++i)
            if (a(i) != b(i)) return a(i) < b(i);
        return false;
    });
    return out;
}

}  // namespace

long CycleBasis::pairing(const IVec& u, const IVec& v) const {
    long acc = 0;
    for (int i = 0; i < u.size(); ++i)
        for (int j = 0; j < v.size(); ++j)
            acc += static_cast<long>(u(i)) * intersection(i, j) * v(j);
    return acc;
}

CMat loop_period_matrix(const Curve& C, const std::vector<DifferentialForm>& forms,
                        const CycleBasis& cb) {
    CMat P(forms.size(), cb.loops.size());
    for (size_t l = 0; l < cb.loops.size(); ++l) {
        auto vals = C.integrate_forms(forms, cb.loops[l], C.tol().quad_tol);
        for (size_t f = 0; f < forms.size(); ++f) P(f, l) = vals[f];
    }
    return P;
}

CVec combine_periods(const CMat& loop_periods, const IVec& cycle) {
    CVec out = CVec::Zero(loop_periods.rows());
    for (int l = 0; l < cycle.size(); ++l)
        if (cycle(l) != 0) out += static_cast<double>(cycle(l)) * loop_periods.col(l);
    return out;
}

CycleBasis build_cycles(const Curve& C) {
    const int g = C.genus();
    CycleBasis cb;
    cb.g = g;
    cb.g_sigma = C.g_sigma();
    cb.h = C.h();

    const auto forms = raw_basis(C);
    const int nb = static_cast<int>(C.branch_points().size());  // 2g+2

    // all adjacent-pair loops, then keep a full-rank subset of 2g
    std::vector<SurfacePath> all_loops;
    std::vector<CVec> all_periods;
    for (int i = 0; i + 1 < nb; ++i) {
        SurfacePath lp = C.loop_around({i, i + 1});
        auto v = C.integrate_forms(forms, lp, C.tol().quad_tol);
        all_loops.push_back(std::move(lp));
        all_periods.push_back(Eigen::Map<CVec>(v.data(), g));
    }
    std::vector<int> chosen;
    RMat acc(2 * g, 0);
    for (int i = 0; i < static_cast<int>(all_loops.size()) &&
                    static_cast<int>(chosen.size()) < 2 * g;
         ++i) {
        RMat trial(2 * g, acc.cols() + 1);
        trial << acc, LatticeBasis::realify(all_periods[i]);
        Eigen::FullPivLU<RMat> lu(trial);
        lu.setThreshold(1e-9);
        if (lu.rank() == trial.cols()) {
            acc = trial;
            chosen.push_back(i);
        }
    }
    if (static_cast<int>(chosen.size()) != 2 * g)
        throw BasisSearchFailed("elementary loops do not span the homology");
    for (int i : chosen) cb.loops.push_back(all_loops[i]);

    cb.loop_periods_raw.resize(g, 2 * g);
    for (int l = 0; l < 2 * g; ++l) cb.loop_periods_raw.col(l) = all_periods[chosen[l]];

    RMat Preal(2 * g, 2 * g);
    for (int l = 0; l < 2 * g; ++l)
        Preal.col(l) = LatticeBasis::realify(cb.loop_periods_raw.col(l));
    Eigen::FullPivLU<RMat> plu(Preal);
    if (!plu.isInvertible())
        throw BasisSearchFailed("loop period matrix is singular");

    // intersection numbers from tracked polylines
    std::vector<std::vector<std::pair<cplx, cplx>>> polys;
    for (const auto& lp : cb.loops) polys.push_back(C.sample_points(lp, 8));
    cb.intersection.resize(2 * g, 2 * g);
    for (int i = 0; i < 2 * g; ++i)
        for (int j = 0; j < 2 * g; ++j)
            cb.intersection(i, j) = (i == j) ? 0 : polyline_intersection(polys[i], polys[j]);
    for (int i = 0; i < 2 * g; ++i)
        for (int j = 0; j < i; ++j)
            if (cb.intersection(i, j) != -cb.intersection(j, i))
                throw BasisSearchFailed("intersection matrix is not antisymmetric");

    // sigma action by integer fit of period vectors
    cb.sigma_action.resize(2 * g, 2 * g);
    for (int l = 0; l < 2 * g; ++l) {
        SurfacePath sl = C.transform_path(cb.loops[l], InvolutionTag::Sigma);
        auto v = C.integrate_forms(forms, sl, C.tol().quad_tol);
        CVec pv = Eigen::Map<CVec>(v.data(), g);
        RVec s = plu.solve(LatticeBasis::realify(pv));
        for (int j = 0; j < 2 * g; ++j) {
            long r = std::lround(s(j));
            if (std::abs(s(j) - r) > C.tol().lattice_tol * 10.0)
                throw BasisSearchFailed("sigma image of a loop is not an integer cycle");
            cb.sigma_action(j, l) = static_cast<int>(r);
        }
    }
    // sigma is an involution preserving the intersection form
    Eigen::MatrixXi S = cb.sigma_action;
    if ((S * S) != Eigen::MatrixXi::Identity(2 * g, 2 * g))
        throw BasisSearchFailed("numerical sigma action is not an involution");
    if ((S.transpose() * cb.intersection * S) != cb.intersection)
        throw BasisSearchFailed("sigma action does not preserve the intersection form");

    // search for the sigma-adapted symplectic basis
    auto cands = candidate_cycles(2 * g, 4);
    auto pair = [&](const IVec& u, const IVec& v) { return cb.pairing(u, v); };
    auto sig = [&](const IVec& u) { return IVec(S * u); };

    bool found = false;
    if (C.h() == C.g_sigma()) {  // family A layout: a1,a2=a_{alpha+h}
        for (const IVec& a1 : cands) {
            IVec a2 = -sig(a1);
            if (pair(a1, a2) != 0) continue;
            for (const IVec& b1 : cands) {
                IVec b2 = -sig(b1);
                if (pair(a1, b1) != 1) continue;
                if (pair(a1, b2) != 0) continue;
                if (pair(a2, b1) != 0) continue;
                if (pair(a2, b2) != 1) continue;
                if (pair(b1, b2) != 0) continue;
                cb.a_cycles = {a1, a2};
                cb.b_cycles = {b1, b2};
                found = true;
                break;
            }
            if (found) break;
        }
    } else {  // family B layout: a1, a2 (j-type, sigma-anti-invariant), a3
        std::vector<IVec> anti;
        for (const IVec& c : cands)
            if (sig(c) == -c) anti.push_back(c);
        for (const IVec& a1 : cands) {
            IVec a3 = -sig(a1);
            if (pair(a1, a3) != 0) continue;
            for (const IVec& b1 : cands) {
                IVec b3 = -sig(b1);
                if (pair(a1, b1) != 1) continue;
                if (pair(a1, b3) != 0) continue;
                if (pair(a3, b1) != 0) continue;
                if (pair(a3, b3) != 1) continue;
                if (pair(b1, b3) != 0) continue;
                for (const IVec& a2 : anti) {
                    if (pair(a2, a1) != 0 || pair(a2, a3) != 0) continue;
                    if (pair(a2, b1) != 0 || pair(a2, b3) != 0) continue;
                    for (const IVec& b2 : anti) {
                        if (pair(a2, b2) != 1) continue;
                        if (pair(b2, a1) != 0 || pair(b2, a3) != 0) continue;
                        if (pair(b2, b1) != 0 || pair(b2, b3) != 0) continue;
                        cb.a_cycles = {a1, a2, a3};
                        cb.b_cycles = {b1, b2, b3};
                        found = true;
                        break;
                    }
                    if (found) break;
                }
                if (found) break;
            }
            if (found) break;
        }
    }
    if (!found)
        throw BasisSearchFailed("no sigma-adapted symplectic basis within the search bound");
    return cb;
}

SurfacePath materialize_cycle(const Curve& C, const CycleBasis& cb, const IVec& cycle) {
    SurfacePath path;
    path.start = C.base_point();
    for (int l = 0; l < cycle.size(); ++l) {
        const int c = cycle(l);
        const SurfacePath& loop = cb.loops[l];
        for (int rep = 0; rep < std::abs(c); ++rep) {
            SurfacePoint cur = C.continue_y(path);
            SurfacePath conn = C.connect(cur, loop.start.x);
            SurfacePoint arr = C.continue_y(conn);
            // Arriving on the hyperelliptic partner sheet flips the class of
            // the traversal (iota acts as -1 on homology): compensate by
            // traversing the loop in the opposite direction.
            const bool same_sheet =
                std::abs(arr.y - loop.start.y) <= std::abs(arr.y + loop.start.y);
            const bool forward = (c > 0) == same_sheet;
            for (const auto& s : conn.segs) path.segs.push_back(s);
            if (forward) {
                for (const auto& s : loop.segs) path.segs.push_back(s);
            } else {
                for (auto it = loop.segs.rbegin(); it != loop.segs.rend(); ++it)
                    path.segs.push_back({it->wchart, it->b, it->a});
            }
            for (auto it = conn.segs.rbegin(); it != conn.segs.rend(); ++it)
                path.segs.push_back({it->wchart, it->b, it->a});
        }
    }
    return path;
}

PeriodData normalize_differentials(const Curve& C, const CycleBasis& cb) {
    const int g = cb.g, h = cb.h, gs = cb.g_sigma;
    PeriodData pd;
    pd.cycles = cb;

    // raw a/b-period matrices (cycle x raw-form)
    CMat Pa(g, g), Pb(g, g);
    for (int K = 0; K < g; ++K) {
        Pa.row(K) = combine_periods(cb.loop_periods_raw, cb.a_cycles[K]).transpose();
        Pb.row(K) = combine_periods(cb.loop_periods_raw, cb.b_cycles[K]).transpose();
    }

    Eigen::FullPivLU<CMat> lu(Pa);
    if (!lu.isInvertible()) throw SingularSystem("a-period matrix is singular");
    CMat Cj = lu.solve(kTwoPiI * CMat::Identity(g, g));  // Pa * Cj = 2pi i E
    pd.jac_change = Cj;
    pd.B = (Pb * Cj).transpose();

    // normalized Jacobian forms
    const auto raws = raw_basis(C);
    for (int J = 0; J < g; ++J) {
        DifferentialForm w = DifferentialForm::holomorphic(CVec::Zero(1));
        for (int m = 0; m < g; ++m) w = lin_comb(1.0, w, Cj(m, J), raws[m]);
        pd.jac_forms.push_back(w);
    }

    // Prym side: raw odd monomials are those with sigma pullback sign -1
    std::vector<int> odd_idx;
    for (int m = 1; m <= g; ++m)
        if (C.sigma_pullback_sign(m) == -1) odd_idx.push_back(m - 1);
    if (static_cast<int>(odd_idx.size()) != h)
        throw SingularSystem("unexpected Prym-odd dimension");

    CMat PaP(h, h), PbP(h, h);
    for (int K = 0; K < h; ++K)
        for (int m = 0; m < h; ++m) {
            PaP(K, m) = combine_periods(cb.loop_periods_raw, cb.a_cycles[K])(odd_idx[m]);
            PbP(K, m) = combine_periods(cb.loop_periods_raw, cb.b_cycles[K])(odd_idx[m]);
        }
    Eigen::FullPivLU<CMat> luP(PaP);
    if (!luP.isInvertible()) throw SingularSystem("Prym a-period matrix is singular");
    CMat Cp = luP.solve(kTwoPiI * CMat::Identity(h, h));
    pd.prym_change = Cp;

    CMat rowsP = PbP * Cp;  // (b-cycle K) x (normalized form)
    for (int K = gs; K < h; ++K) rowsP.row(K) *= 0.5;  // Fay half on j-columns
    pd.Pi = rowsP.transpose();

    for (int J = 0; J < h; ++J) {
        DifferentialForm w = DifferentialForm::holomorphic(CVec::Zero(1));
        for (int m = 0; m < h; ++m) w = lin_comb(1.0, w, Cp(m, J), raws[odd_idx[m]]);
        pd.prym_forms.push_back(w);
    }

    // orientation: the paper's conventions require Re B (and Re Pi) negative
    // definite; a globally flipped intersection sign shows up here, so flip
    // the b-cycles once if needed.
    auto re_posdef = [](const CMat& M) {
        RMat S = 0.5 * (M.real() + M.real().transpose());
        Eigen::SelfAdjointEigenSolver<RMat> es(S);
        return es.eigenvalues().minCoeff() > 0.0;
    };
    if (re_posdef(pd.B)) {
        for (auto& b : pd.cycles.b_cycles) b = -b;
        pd.B = -pd.B;
        pd.Pi = -pd.Pi;
    }
    auto re_negdef = [&](const CMat& M) {
        RMat S = 0.5 * (M.real() + M.real().transpose());
        Eigen::SelfAdjointEigenSolver<RMat> es(S);
        return es.eigenvalues().maxCoeff() < 0.0;
    };
    if (!re_negdef(pd.B) || !re_negdef(pd.Pi))
        throw BasisSearchFailed("period matrices are not negative definite");
    if ((pd.B - pd.B.transpose()).cwiseAbs().maxCoeff() > 1e-8 ||
        (pd.Pi - pd.Pi.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw BasisSearchFailed("period matrix symmetry violated");
    return pd;
}

LatticeBasis PeriodData::jacobian_lattice() const {
    const int g = static_cast<int>(B.rows());
    std::vector<CVec> gens;
    for (int i = 0; i < g; ++i) gens.push_back(kTwoPiI * CVec::Unit(g, i));
    for (int i = 0; i < g; ++i) gens.push_back(B.col(i));
    return LatticeBasis(g, gens);
}

LatticeBasis PeriodData::prym_lattice() const {
    const int h = static_cast<int>(Pi.rows());
    std::vector<CVec> gens;
    for (int i = 0; i < h; ++i) gens.push_back(kTwoPiI * CVec::Unit(h, i));
    for (int i = 0; i < h; ++i) gens.push_back(Pi.col(i));
    return LatticeBasis(h, gens);
}

DifferentialForm build_second_kind(const Curve& C, const PeriodData& pd, int which) {
    const int g = C.genus();
    CVec p = CVec::Zero(g + 2);
    p(g + 1) = 0.5;
    cplx q0 = (which == 1) ? cplx{0.5, 0.0} : cplx{-0.5, 0.0};
    DifferentialForm raw = DifferentialForm::second_kind(p, q0);

    // zero the a-periods with a holomorphic correction
    const CycleBasis& cb = pd.cycles;
    CMat lp = loop_period_matrix(C, {raw}, cb);  // 1 x 2g
    CVec a_raw(cb.g);
    for (int K = 0; K < cb.g; ++K) a_raw(K) = combine_periods(lp, cb.a_cycles[K])(0);

    CMat Pa(cb.g, cb.g);
    for (int K = 0; K < cb.g; ++K)
        Pa.row(K) = combine_periods(cb.loop_periods_raw, cb.a_cycles[K]).transpose();
    Eigen::FullPivLU<CMat> lu(Pa);
    if (!lu.isInvertible()) throw SingularSystem("a-period matrix is singular");
    CVec lambda = lu.solve(a_raw);

    DifferentialForm out = raw;
    const auto raws = raw_basis(C);
    for (int m = 0; m < cb.g; ++m) out = lin_comb(1.0, out, -lambda(m), raws[m]);
    return out;
}

}  // namespace prymlab
