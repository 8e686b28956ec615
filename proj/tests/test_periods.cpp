#include <doctest.h>

#include <cmath>

#include "prymlab/periods.hpp"

using namespace prymlab;

namespace {

const Curve& curveA() {
    static Curve C([] {
        CurveSpec s;
        s.family = Family::A;
        s.branch_params = {cplx{1.0, 0.0}, cplx{2.0, 0.0}, cplx{3.0, 0.0}};
        return s;
    }());
    return C;
}

const Curve& curveB() {
    static Curve C([] {
        CurveSpec s;
        s.family = Family::B;
        s.branch_params = {cplx{1.0, 0.0}, cplx{2.0, 0.0}, cplx{3.0, 0.0}, cplx{4.0, 0.0}};
        return s;
    }());
    return C;
}

const CycleBasis& cyclesA() {
    static CycleBasis cb = build_cycles(curveA());
    return cb;
}

const CycleBasis& cyclesB() {
    static CycleBasis cb = build_cycles(curveB());
    return cb;
}

const PeriodData& periodsA() {
    static PeriodData pd = normalize_differentials(curveA(), cyclesA());
    return pd;
}

const PeriodData& periodsB() {
    static PeriodData pd = normalize_differentials(curveB(), cyclesB());
    return pd;
}

IVec sigma_of(const CycleBasis& cb, const IVec& c) { return IVec(cb.sigma_action * c); }

}  // namespace

TEST_CASE("cycle basis: symplectic and sigma-adapted") {
    for (const auto* pcb : {&cyclesA(), &cyclesB()}) {
        const CycleBasis& cb = *pcb;
        const int g = cb.g;
        // symplectic pairings
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
                CHECK(cb.pairing(cb.a_cycles[i], cb.a_cycles[j]) == 0);
                CHECK(cb.pairing(cb.b_cycles[i], cb.b_cycles[j]) == 0);
                CHECK(cb.pairing(cb.a_cycles[i], cb.b_cycles[j]) == (i == j ? 1 : 0));
            }
        // sigma relations as integer identities
        const int gs = cb.g_sigma, h = cb.h;
        for (int al = 0; al < gs; ++al) {
            CHECK(IVec(cb.a_cycles[al] + sigma_of(cb, cb.a_cycles[al + h])).isZero());
            CHECK(IVec(cb.b_cycles[al] + sigma_of(cb, cb.b_cycles[al + h])).isZero());
        }
        for (int j = gs; j < h; ++j) {
            CHECK(IVec(cb.a_cycles[j] + sigma_of(cb, cb.a_cycles[j])).isZero());
            CHECK(IVec(cb.b_cycles[j] + sigma_of(cb, cb.b_cycles[j])).isZero());
        }
    }
}

TEST_CASE("sigma relations hold at period level") {
    struct Case {
        const Curve* C;
        const CycleBasis* cb;
    };
    for (Case cs : {Case{&curveA(), &cyclesA()}, Case{&curveB(), &cyclesB()}}) {
        const CycleBasis& cb = *cs.cb;
        const double tol = cs.C->tol().lattice_tol;
        const int gs = cb.g_sigma, h = cb.h;
        auto per = [&](const IVec& c) { return combine_periods(cb.loop_periods_raw, c); };
        for (int al = 0; al < gs; ++al) {
            CHECK((per(cb.a_cycles[al]) + per(sigma_of(cb, cb.a_cycles[al + h]))).norm() < tol);
            CHECK((per(cb.b_cycles[al]) + per(sigma_of(cb, cb.b_cycles[al + h]))).norm() < tol);
        }
        for (int j = gs; j < h; ++j) {
            CHECK((per(cb.a_cycles[j]) + per(sigma_of(cb, cb.a_cycles[j]))).norm() < tol);
            CHECK((per(cb.b_cycles[j]) + per(sigma_of(cb, cb.b_cycles[j]))).norm() < tol);
        }
        // sigma action itself is faithful at period level: compare against a
        // directly integrated sigma image of each loop
        const auto& C = *cs.C;
        std::vector<DifferentialForm> raws = C.holomorphic_basis();
        for (size_t l = 0; l < cb.loops.size(); ++l) {
            SurfacePath sl = C.transform_path(cb.loops[l], InvolutionTag::Sigma);
            auto v = C.integrate_forms(raws, sl, 1e-12);
            CVec direct = Eigen::Map<CVec>(v.data(), cb.g);
            IVec e = IVec::Zero(2 * cb.g);
            e(l) = 1;
            CHECK((direct - per(sigma_of(cb, e))).norm() < tol);
        }
    }
}

TEST_CASE("normalization identities") {
    struct Case {
        const Curve* C;
        const PeriodData* pd;
    };
    for (Case cs : {Case{&curveA(), &periodsA()}, Case{&curveB(), &periodsB()}}) {
        const PeriodData& pd = *cs.pd;
        const CycleBasis& cb = pd.cycles;
        const Curve& C = *cs.C;
        // Jacobian normalization over a-cycles
        CMat lpJ = loop_period_matrix(C, pd.jac_forms, cb);
        for (int K = 0; K < cb.g; ++K) {
            CVec v = combine_periods(lpJ, cb.a_cycles[K]);
            for (int I = 0; I < cb.g; ++I) {
                cplx want = (I == K) ? kTwoPiI : cplx{0.0, 0.0};
                CHECK(std::abs(v(I) - want) < 1e-8);
            }
        }
        // Prym normalization over the h Prym a-cycles
        CMat lpP = loop_period_matrix(C, pd.prym_forms, cb);
        for (int K = 0; K < cb.h; ++K) {
            CVec v = combine_periods(lpP, cb.a_cycles[K]);
            for (int I = 0; I < cb.h; ++I) {
                cplx want = (I == K) ? kTwoPiI : cplx{0.0, 0.0};
                CHECK(std::abs(v(I) - want) < 1e-8);
            }
        }
        // B from the normalized forms matches pd.B
        for (int K = 0; K < cb.g; ++K) {
            CVec v = combine_periods(lpJ, cb.b_cycles[K]);
            for (int I = 0; I < cb.g; ++I) CHECK(std::abs(v(I) - pd.B(I, K)) < 1e-8);
        }
    }
}

TEST_CASE("period matrices: symmetry and negative definiteness") {
    for (const PeriodData* ppd : {&periodsA(), &periodsB()}) {
        const PeriodData& pd = *ppd;
        CHECK((pd.B - pd.B.transpose()).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((pd.Pi - pd.Pi.transpose()).cwiseAbs().maxCoeff() < 1e-8);
        Eigen::SelfAdjointEigenSolver<RMat> eb(RMat(0.5 * (pd.B.real() + pd.B.real().transpose())));
        CHECK(eb.eigenvalues().maxCoeff() < 0.0);
        Eigen::SelfAdjointEigenSolver<RMat> ep(
            RMat(0.5 * (pd.Pi.real() + pd.Pi.real().transpose())));
        CHECK(ep.eigenvalues().maxCoeff() < 0.0);
    }
    CHECK(periodsA().Pi.rows() == 1);
    CHECK(periodsA().Pi(0, 0).real() < 0.0);
}

TEST_CASE("Prym forms: sigma-odd and tau-invariant periods") {
    struct Case {
        const Curve* C;
        const PeriodData* pd;
    };
    for (Case cs : {Case{&curveA(), &periodsA()}, Case{&curveB(), &periodsB()}}) {
        const Curve& C = *cs.C;
        const PeriodData& pd = *cs.pd;
        const CycleBasis& cb = pd.cycles;
        const double tol = C.tol().lattice_tol;
        CMat lpP = loop_period_matrix(C, pd.prym_forms, cb);
        for (size_t l = 0; l < cb.loops.size(); ++l) {
            IVec e = IVec::Zero(2 * cb.g);
            e(l) = 1;
            CVec base = combine_periods(lpP, e);
            CVec viaS = combine_periods(lpP, sigma_of(cb, e));
            CHECK((viaS + base).norm() < tol);
            // tau-invariance, integrated directly over the transformed loop
            SurfacePath tl = C.transform_path(cb.loops[l], InvolutionTag::Tau);
            auto v = C.integrate_forms(pd.prym_forms, tl, 1e-12);
            CVec direct = Eigen::Map<CVec>(v.data(), cb.h);
            CHECK((direct - base).norm() < tol);
        }
    }
}

TEST_CASE("Prym matrix consistency under path perturbation") {
    struct Case {
        const Curve* C;
        const PeriodData* pd;
    };
    for (Case cs : {Case{&curveA(), &periodsA()}, Case{&curveB(), &periodsB()}}) {
        const Curve& C = *cs.C;
        const PeriodData& pd = *cs.pd;
        const CycleBasis& cb = pd.cycles;
        // re-integrate the b-periods over independently materialized cycles
        for (int K = 0; K < cb.h; ++K) {
            SurfacePath bc = materialize_cycle(C, cb, cb.b_cycles[K]);
            auto v = C.integrate_forms(pd.prym_forms, bc, 1e-12);
            double half = (K >= cb.g_sigma) ? 0.5 : 1.0;
            for (int I = 0; I < cb.h; ++I)
                CHECK(std::abs(half * v[static_cast<size_t>(I)] - pd.Pi(I, K)) < 1e-7);
        }
        // a-cycles materialize to the right periods too
        for (int K = 0; K < cb.g; ++K) {
            SurfacePath ac = materialize_cycle(C, cb, cb.a_cycles[K]);
            auto v = C.integrate_forms(pd.jac_forms, ac, 1e-12);
            for (int I = 0; I < cb.g; ++I) {
                cplx want = (I == K) ? kTwoPiI : cplx{0.0, 0.0};
                CHECK(std::abs(v[static_cast<size_t>(I)] - want) < 1e-7);
            }
        }
    }
}

TEST_CASE("second-kind forms") {
    struct Case {
        const Curve* C;
        const PeriodData* pd;
    };
    for (Case cs : {Case{&curveA(), &periodsA()}, Case{&curveB(), &periodsB()}}) {
        const Curve& C = *cs.C;
        const PeriodData& pd = *cs.pd;
        const CycleBasis& cb = pd.cycles;
        DifferentialForm O1 = build_second_kind(C, pd, 1);
        DifferentialForm O2 = build_second_kind(C, pd, 2);

        // all a-periods vanish
        CMat lp1 = loop_period_matrix(C, {O1, O2}, cb);
        for (int K = 0; K < cb.g; ++K) {
            CVec v = combine_periods(lp1, cb.a_cycles[K]);
            CHECK(std::abs(v(0)) < C.tol().lattice_tol);
            CHECK(std::abs(v(1)) < C.tol().lattice_tol);
        }

        // principal part: Omega1 - d(w1^-1) regular at inf+ (and Omega2 at inf-)
        const int g = C.genus();
        auto reg1 = C.local_expansion(
            [&](const SurfacePoint& p) {
                cplx w = 1.0 / p.x;
                cplx yh = p.y * std::pow(w, g + 1);
                return C.form_over_dw(O1, w, yh) + 1.0 / (w * w);
            },
            true, 2);
        CHECK(std::isfinite(std::abs(reg1[0])));
        auto reg2 = C.local_expansion(
            [&](const SurfacePoint& p) {
                cplx w = 1.0 / p.x;  // w2 = -w
                cplx yh = p.y * std::pow(w, g + 1);
                cplx w2 = -w;
                return -C.form_over_dw(O2, w, yh) + 1.0 / (w2 * w2);
            },
            false, 2);
        CHECK(std::isfinite(std::abs(reg2[0])));

        // sigma-oddness via period vectors, and tau exchange Omega1 <-> Omega2
        for (size_t l = 0; l < cb.loops.size(); ++l) {
            IVec e = IVec::Zero(2 * cb.g);
            e(l) = 1;
            CVec base = combine_periods(lp1, e);
            CVec viaS = combine_periods(lp1, sigma_of(cb, e));
            CHECK(std::abs(viaS(0) + base(0)) < 1e-6);
            CHECK(std::abs(viaS(1) + base(1)) < 1e-6);
            SurfacePath tl = C.transform_path(cb.loops[l], InvolutionTag::Tau);
            auto v = C.integrate_forms({O1, O2}, tl, 1e-12);
            CHECK(std::abs(v[0] - base(1)) < 1e-6);  // oint_{tau c} O1 = oint_c O2
            CHECK(std::abs(v[1] - base(0)) < 1e-6);
        }
    }
}
