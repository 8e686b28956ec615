#pragma once

#include "prymlab/prym.hpp"

namespace prymlab {

// Per-point data produced by a single surface path: the Abel-Prym value
// (based at Q'_0) and the exponent integrals of Omega_1, Omega_2 along the
// SAME path, so the quasiperiodicity cancellation is exact.
struct PointData {
    CVec A;
    cplx I1{}, I2{};
};

struct BAConfig {
    Divisor zeta;            // pole divisor, degree 2h
    std::vector<CVec> e;     // e_j = Ab_prym(zeta_j), j = 0..k
    CVec e_two;              // Ab_prym(zeta)
    // theta parameter whose divisor function F_e vanishes exactly on zeta:
    // the half-lattice translate of Ab_prym(zeta)/2 minimizing
    // max_i |theta(A(P_i) - e)| over the points of zeta
    CVec e_canonical;
    double canonical_defect = 0.0;  // that minimum; ~0 iff zeta is a theta-zero divisor
    DifferentialForm omega1, omega2;  // second kind, poles d(w^-1) at inf+-
    CVec U1, U2;             // derived from the cancellation system
    cplx r1{}, r2{};         // regularized exponent constants at Q'_0
    double cancel_residual = 0.0;  // consistency of the cancellation solve
};

// n x n square grid of z values, row-major: z = center + step*(c-n/2) +
// i*step*(n/2-r). The spacing doubles as the finite-difference step.
struct GridSpec {
    cplx center{0.35, 0.15};
    double step = 1e-3;
    int n = 21;
};

struct PotentialResult {
    CMat u;          // (n-2) x (n-2) interior values
    cplx C{};        // fitted additive constant
    CVec Z;          // chosen shift
    int z_choice = 0;  // 0: Z = -e_canonical, 1: Z = -e_canonical + 2 pi i beta_k
};

struct XiResult {
    CMat xi1;        // n x n first expansion coefficients at Q'_0
    CMat u_log;      // (n-2) x (n-2): -dbar ln xi1
    CMat u_plain;    // (n-2) x (n-2): -dbar xi1 (comparison variant)
    double leading_error = 0.0;  // max |xi0 - 1| over the grid
};

struct ResidualReport {
    double rel_residual = 0.0;        // worst probe: ||r||_inf / ||psi||_inf
    std::vector<double> per_probe;
    int excluded = 0;                 // grid points skipped (theta divisor etc.)
    int interior = 0;
    cplx fitted_C{};                  // C used (conjecture_check with C = NaN)
};

// Baker-Akhiezer function for a degree-2h pole divisor on one of the two
// families, in the paper's three representations, with the potential u
// computed both from theta and from the xi_1 expansion.
class BASystem {
public:
    BASystem(const PrymSystem& ps, const Divisor& zeta);

    const BAConfig& config() const { return cfg_; }
    const PrymSystem& prym() const { return ps_; }

    // Abel + exponent integrals along the canonical path to P, or along a
    // caller-supplied path (for path-independence checks)
    PointData eval_point(const SurfacePoint& p) const;
    PointData eval_path(const SurfacePath& path) const;

    // plain theta-quotient with parameter e_j = Ab_prym(zeta_j); path
    // independent, normalized at Q'_0, but its pole divisor is the zero set
    // of theta(A(P) - e_j), not zeta
    cplx psi_j(const PointData& pd, cplx z, int j) const;
    cplx psi_j(const SurfacePoint& p, cplx z, int j) const;

    // basis of the functions with properties 1-3 (poles zeta, essential
    // singularity exp(z/w) at Q'_0, leading coefficient 1): theta_hat_m in
    // the two U-dependent factors, all four slots at e_canonical, m = 0..k.
    // Values at a branch pair satisfy psi(Q''_s) = (-1)^m psi(Q'_s), which
    // is what makes the matching system below nondegenerate.
    cplx psi_char(const PointData& pd, cplx z, int m) const;
    cplx psi_char(const SurfacePoint& p, cplx z, int m) const;

    // coefficients of psi = sum_m c_m psi_char(m): sum c_m = 1 and value
    // matching at the finite branch pairs (family A: c_0 = 1)
    CVec solve_c(cplx z) const;
    cplx psi_combined(const SurfacePoint& p, cplx z) const;

    // theta_hat_m form anchored at e_j = Ab_prym(zeta_j) (1 <= m <= k).
    // These parameters lie on the subvariety where the single-quotient
    // theta_hat ansatz solves the Schrodinger equation on its own; the
    // branch-pair values anti-match (ratio exactly -1), see README
    cplx psi_hat_rep(const PointData& pd, cplx z, int m, int j) const;
    cplx psi_hat_rep(const SurfacePoint& p, cplx z, int m, int j) const;

    // the normalized BA function written through theta_hat_m (0 <= m <= k):
    // all theta_hat_m evaluations at arguments shifted by the characteristic,
    // anchored at e_canonical; equal for every admissible m
    cplx psi_two_involution(const PointData& pd, cplx z, int m) const;
    cplx psi_two_involution(const SurfacePoint& p, cplx z, int m) const;

    // u = 2 d dbar ln theta(U1 z + U2 zbar + Z) + C, with Z searched over
    // {-e, -e + 2 pi i beta_1} and C fitted at the grid center
    PotentialResult potential_theta(const GridSpec& grid) const;

    // u from the expansion coefficient xi_1 at Q'_0 (both reading variants)
    XiResult potential_xi(const GridSpec& grid) const;

    // (d dbar + u) psi on the grid interior for a fixed representation
    // rep: 0 = combined sum c_j psi_j, 1 = psi_hat(m=k), 2 = psi2(m=k)
    ResidualReport schrodinger_residual(int rep, const GridSpec& grid,
                                        const std::vector<SurfacePoint>& probes) const;

    // the conjecture's ansatz evaluated from explicit parameters; psi uses
    // theta_hat_k(.+Z) and u uses the characteristic-matched
    // 2 d dbar ln theta_hat_k(.+Z) + C. Pass C = NaN to fit it at the grid
    // center
    ResidualReport conjecture_check(const CVec& A, const CVec& U1, const CVec& U2,
                                    cplx p1, cplx p2, cplx C, const CVec& Z,
                                    const GridSpec& grid) const;

    // three fixed generic finite points, clear of branch points
    std::vector<SurfacePoint> default_probes() const;

private:
    const PrymSystem& ps_;
    const Curve& C_;
    BAConfig cfg_;
    CVec off_prym_;  // Abel offset of inf+ (same convention as PrymSystem)
    std::vector<PointData> circle_;  // 16-point w-circle data for xi extraction
    std::vector<cplx> circle_w_;
    double circle_r_ = 1e-2;
    mutable std::vector<std::pair<PointData, PointData>> pair_data_;  // (Q'_j, Q''_j)

    void derive_U();
    void build_circle();
    cplx theta_quotient(const CVec& A, const CVec& uz, const CVec& e, int m) const;
    CVec uz(cplx z) const { return CVec(cfg_.U1 * z + cfg_.U2 * std::conj(z)); }
    cplx expo(const PointData& pd, cplx z) const;
    ResidualReport residual_impl(const std::function<cplx(cplx)>& psi_of_z,
                                 const CMat& u, const GridSpec& grid) const;
};

}  // namespace prymlab
