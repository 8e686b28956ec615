// End-to-end acceptance gate: one pass/fail line per criterion, exit 0 only
// if every criterion passes. Runs the same staged pipelines as the CLI and a
// few direct measurements (theta engine, finite-difference order).

#include <chrono>
#include <cstdio>
#include <random>

#include "prymlab/cli.hpp"
#include "prymlab/errors.hpp"

using namespace prymlab;

namespace {

int failures = 0;

void line(int n, bool pass, const std::string& detail) {
    std::printf("criterion %d: %s — %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
    if (!pass) ++failures;
}

bool check(const Json& report, const char* name) {
    return report["checks"].contains(name) && report["checks"][name].get<bool>();
}

double metric(const Json& report, const char* name) {
    return report["metrics"][name].get<double>();
}

RunConfig base_cfg(Family f) {
    RunConfig cfg;
    cfg.curve.family = f;
    if (f == Family::A)
        cfg.curve.branch_params = {cplx{1.0, 0.0}, cplx{2.0, 0.0}, cplx{3.0, 0.0}};
    else
        cfg.curve.branch_params = {cplx{1.0, 0.0}, cplx{2.0, 0.0}, cplx{3.0, 0.0},
                                   cplx{4.0, 0.0}};
    cfg.seed = 1;
    cfg.verify_seeds = 10;
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

char sbuf[512];

}  // namespace

int main() {
    RunConfig cfgA = base_cfg(Family::A);
    RunConfig cfgB = base_cfg(Family::B);

    // ---- criteria 1 & 2: periods and sigma/tau structure ----
    auto t0 = std::chrono::steady_clock::now();
    StageOutcome perA = cmd_periods(cfgA);
    double tA = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    StageOutcome perB = cmd_periods(cfgB);
    double tB = seconds_since(t0);
    {
        bool pass = tA < 30.0 && tB < 30.0;
        for (const auto* r : {&perA.report, &perB.report})
            pass = pass && check(*r, "a_normalization_jac") &&
                   check(*r, "a_normalization_prym") && check(*r, "b_period_consistency") &&
                   check(*r, "B_symmetric") && check(*r, "Pi_symmetric") &&
                   check(*r, "ReB_negative_definite") && check(*r, "RePi_negative_definite");
        std::snprintf(sbuf, sizeof sbuf,
                      "period normalization/symmetry/definiteness to 1e-8 "
                      "(A %.1fs, B %.1fs; worst a-period dev %.1e)",
                      tA, tB,
                      std::max(metric(perA.report, "a_normalization_jac"),
                               metric(perB.report, "a_normalization_jac")));
        line(1, pass, sbuf);
    }
    {
        bool pass = true;
        for (const auto* r : {&perA.report, &perB.report})
            pass = pass && check(*r, "sigma_cycle_relations") &&
                   check(*r, "prym_periods_sigma_odd") && check(*r, "prym_periods_tau_invariant");
        std::snprintf(sbuf, sizeof sbuf,
                      "sigma cycle relations, Prym sigma-oddness, tau-invariance to 1e-6 "
                      "(worst %.1e)",
                      std::max({metric(perA.report, "sigma_relation_residual"),
                                metric(perB.report, "sigma_relation_residual"),
                                metric(perA.report, "prym_tau_invariance_residual"),
                                metric(perB.report, "prym_tau_invariance_residual")}));
        line(2, pass, sbuf);
    }

    // ---- criterion 3: theta engine ----
    {
        t0 = std::chrono::steady_clock::now();
        double worst = 0.0;
        bool dichotomy = true;
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-0.6, 0.6);
        for (int fam = 0; fam < 2; ++fam) {
            Curve C(fam == 0 ? cfgA.curve : cfgB.curve);
            PeriodData pd = normalize_differentials(C, build_cycles(C));
            ThetaContext ctx(pd.Pi, 1e-12);
            const int h = C.h();
            for (int s = 0; s < 50; ++s) {
                CVec z(h);
                for (int i = 0; i < h; ++i) z(i) = cplx{u(rng), u(rng)};
                for (int d = 0; d < h; ++d) {
                    // 2 pi i direction: plain factor 1
                    CVec z1 = z;
                    z1(d) += kTwoPiI;
                    worst = std::max(worst, std::abs(theta(z1, ctx) / theta(z, ctx) - 1.0));
                    // Pi-column direction: factor exp(-Pi_dd/2 - z_d)
                    CVec z2 = CVec(z + pd.Pi.col(d));
                    cplx plain = std::exp(-0.5 * pd.Pi(d, d) - z(d));
                    worst = std::max(
                        worst, std::abs(theta(z2, ctx) / (plain * theta(z, ctx)) - 1.0));
                    // theta_hat_m: trivial factor in the 2 pi i direction, and
                    // an extra exp(-2 pi i beta_d) in the Pi-column direction,
                    // i.e. a sign flip exactly when the shifted characteristic
                    // entry is 1/2
                    for (int m = 0; m <= h; ++m) {
                        cplx f1 = theta_hat(m, z1, ctx) / theta_hat(m, z, ctx);
                        cplx f2 = theta_hat(m, z2, ctx) / (plain * theta_hat(m, z, ctx));
                        double beta_d = theta_characteristic(m, h)(d);
                        double sign = beta_d == 0.0 ? 1.0 : -1.0;
                        worst = std::max(worst, std::abs(f1 - 1.0));
                        worst = std::max(worst, std::abs(f2 - sign));
                        dichotomy = dichotomy && (beta_d == 0.0 || beta_d == 0.5);
                    }
                }
            }
        }
        // h = 1 reference: theta(0) with Pi = -2 pi equals sum exp(-pi n^2)
        CMat Pi1(1, 1);
        Pi1(0, 0) = -2.0 * kPi;
        ThetaContext ref(Pi1, 1e-14);
        KahanSum direct;
        for (int n = -20; n <= 20; ++n) direct.add(std::exp(-kPi * double(n) * double(n)));
        double ref_err = std::abs(theta(CVec::Zero(1), ref) - direct.value());
        double tt = seconds_since(t0);
        bool pass = worst < 1e-8 && dichotomy && ref_err < 1e-12 && tt < 10.0;
        std::snprintf(sbuf, sizeof sbuf,
                      "quasiperiodicity + characteristic signs to 1e-8 (worst %.1e), "
                      "sum exp(-pi n^2) reference to 1e-12 (err %.1e), %.1fs",
                      worst, ref_err, tt);
        line(3, pass, sbuf);
    }

    // ---- criteria 4 & 5: Fay/corollary suite and VN conditions ----
    t0 = std::chrono::steady_clock::now();
    StageOutcome verA = cmd_verify(cfgA);
    double tvA = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    StageOutcome verB = cmd_verify(cfgB);
    double tvB = seconds_since(t0);
    {
        bool pass = tvA < 300.0 && tvB < 300.0;
        for (const auto* r : {&verA.report, &verB.report})
            pass = pass && check(*r, "zero_counts") && check(*r, "cor1_residual") &&
                   check(*r, "cor1_constant_in_e") && check(*r, "cor2_residual");
        std::snprintf(sbuf, sizeof sbuf,
                      "10 random e per family: zero counts, cor1 %.1e, cor2 %.1e "
                      "(A %.0fs, B %.0fs)",
                      std::max(metric(verA.report, "cor1_residual_max"),
                               metric(verB.report, "cor1_residual_max")),
                      std::max(metric(verA.report, "cor2_residual_max"),
                               metric(verB.report, "cor2_residual_max")),
                      tvA, tvB);
        line(4, pass, sbuf);
    }
    {
        bool pass = check(verA.report, "vn1_theta_divisors") &&
                    check(verA.report, "vn_rank_is_k") &&
                    check(verB.report, "vn1_theta_divisors") &&
                    check(verB.report, "vn2_generic_failure") &&
                    check(verB.report, "vn_point_found") && check(verB.report, "vn_rank_is_k");
        std::snprintf(
            sbuf, sizeof sbuf,
            "VN1 on theta divisors; VN2 generic failure %d/%d, VN point defect %.1e, rank k=%d",
            static_cast<int>(verB.report["metrics"]["vn2_generic_fail_count"].get<long>()),
            static_cast<int>(verB.report["metrics"]["vn2_generic_trials"].get<long>()),
            metric(verB.report, "vn_point_defect"),
            static_cast<int>(verB.report["metrics"]["vn_rank"].get<long>()));
        line(5, pass, sbuf);
    }

    // ---- criterion 6: Baker-Akhiezer representation consistency ----
    {
        t0 = std::chrono::steady_clock::now();
        StageOutcome baA = cmd_ba(cfgA);
        StageOutcome baB = cmd_ba(cfgB);
        double tba = seconds_since(t0);
        bool pass = tba < 300.0;
        for (const auto* r : {&baA.report, &baB.report})
            pass = pass && check(*r, "cancellation_solved") &&
                   check(*r, "pole_divisor_canonical") && check(*r, "representations_agree") &&
                   check(*r, "coefficients_sum_to_one") && check(*r, "branch_pair_matching") &&
                   check(*r, "path_independent") && check(*r, "rejects_m_above_k");
        std::snprintf(sbuf, sizeof sbuf,
                      "three representations agree (worst rel diff %.1e), branch-pair "
                      "matching %.1e, path independence %.1e, m>k rejected (%.0fs)",
                      std::max(metric(baA.report, "representation_disagreement_max"),
                               metric(baB.report, "representation_disagreement_max")),
                      metric(baB.report, "branch_pair_mismatch_max"),
                      std::max(metric(baA.report, "path_dependence"),
                               metric(baB.report, "path_dependence")),
                      tba);
        line(6, pass, sbuf);
    }

    // ---- criteria 7 & 8: Schrodinger residuals and cross-potential ----
    {
        t0 = std::chrono::steady_clock::now();
        RunConfig cfgBneg = cfgB;
        cfgBneg.negative_control = true;
        StageOutcome schA = cmd_schrodinger(cfgA);
        StageOutcome schB = cmd_schrodinger(cfgBneg);
        double tsch = seconds_since(t0);

        // finite-difference order, measured directly on family B
        Curve CB(cfgB.curve);
        PeriodData pdB = normalize_differentials(CB, build_cycles(CB));
        PrymSystem psB(CB, pdB);
        CVec e(2);
        e << cplx{0.21, 0.12}, cplx{-0.17, 0.23};
        BASystem bsys(psB, psB.zeros_of_F_e(e));
        GridSpec g1, g2;
        g1.step = 4e-3;
        g2.step = 2e-3;
        auto probes = bsys.default_probes();
        double r1 = bsys.schrodinger_residual(2, g1, probes).rel_residual;
        double r2 = bsys.schrodinger_residual(2, g2, probes).rel_residual;
        double order = std::log2(r1 / r2);

        bool pass = tsch < 900.0 && order >= 1.8;
        pass = pass && check(schA.report, "residual_characteristic") &&
               check(schA.report, "residual_combined") && check(schA.report, "excluded_fraction_ok");
        pass = pass && check(schB.report, "residual_two_involution") &&
               check(schB.report, "residual_combined") &&
               check(schB.report, "excluded_fraction_ok") &&
               check(schB.report, "conjecture_residual") &&
               check(schB.report, "negative_control_fails_as_expected");
        std::snprintf(sbuf, sizeof sbuf,
                      "residuals A %.1e / B %.1e < 1e-4, negative control %.1e > 1e-2, "
                      "fd order %.2f (%.0fs)",
                      metric(schA.report, "residual_characteristic"),
                      metric(schB.report, "residual_two_involution"),
                      metric(schB.report, "negative_control_residual"), order, tsch);
        line(7, pass, sbuf);

        bool pass8 = check(schA.report, "xi_potential_matches") &&
                     check(schB.report, "xi_potential_matches");
        std::snprintf(sbuf, sizeof sbuf,
                      "xi-expansion potential (variant %s) matches theta potential mod "
                      "constant: A %.1e, B %.1e",
                      schA.report["metrics"]["xi_variant"].get<std::string>().c_str(),
                      metric(schA.report, "xi_deviation"), metric(schB.report, "xi_deviation"));
        line(8, pass8, sbuf);
    }

    // ---- criterion 9: determinism ----
    {
        RunConfig q = cfgA;
        q.quick = true;
        std::string ba1 = dump_report(cmd_ba(q).report);
        std::string ba2 = dump_report(cmd_ba(q).report);
        std::string v1 = dump_report(cmd_verify(q).report);
        std::string v2 = dump_report(cmd_verify(q).report);
        bool pass = ba1 == ba2 && v1 == v2;
        std::snprintf(sbuf, sizeof sbuf,
                      "repeated runs with identical config+seed are byte-identical "
                      "(%zu + %zu report bytes)",
                      ba1.size(), v1.size());
        line(9, pass, sbuf);
    }

    std::printf("%s\n", failures == 0 ? "all criteria passed" : "ACCEPTANCE FAILED");
    return failures == 0 ? 0 : 1;
}
