#pragma once

#include "prymlab/curve.hpp"

namespace prymlab {

// sigma-adapted symplectic homology basis, expressed in integer coordinates
// over a set of elementary loops around adjacent branch-point pairs.
//
// Labels (paper convention): a_alpha,b_alpha (alpha=1..g_sigma), a_j,b_j
// (j=g_sigma+1..h), a_{alpha+h},b_{alpha+h}. Stored order: alpha-block,
// j-block, (alpha+h)-block, so the Jacobian index order matches
// phi(e) = (e_alpha, 2e_j, e_alpha).
struct CycleBasis {
    int g = 0, g_sigma = 0, h = 0;
    std::vector<SurfacePath> loops;  // elementary loops, 2g of them
    CMat loop_periods_raw;           // g x 2g: raw basis x^{m-1}dx/y over loops
    Eigen::MatrixXi intersection;    // 2g x 2g intersection numbers of loops
    Eigen::MatrixXi sigma_action;    // [sigma gamma_i] = sum_j S(j,i) [gamma_j]
    std::vector<IVec> a_cycles;      // g integer coordinate vectors
    std::vector<IVec> b_cycles;

    // pairing <u,v> in loop coordinates
    long pairing(const IVec& u, const IVec& v) const;
};

CycleBasis build_cycles(const Curve& C);

// periods of the given forms over every elementary loop (forms.size() x 2g)
CMat loop_period_matrix(const Curve& C, const std::vector<DifferentialForm>& forms,
                        const CycleBasis& cb);

// combine a loop-period matrix over an integer cycle class
CVec combine_periods(const CMat& loop_periods, const IVec& cycle);

// closed path from the base point representing the cycle class (hub-and-spoke,
// connectors retraced so only the loops contribute to homology)
SurfacePath materialize_cycle(const Curve& C, const CycleBasis& cb, const IVec& cycle);

struct PeriodData {
    CycleBasis cycles;
    std::vector<DifferentialForm> jac_forms;   // g forms, oint_{a_K} w_I = 2pi i delta
    std::vector<DifferentialForm> prym_forms;  // h Prym-odd forms, same normalization
    CMat jac_change;   // g x g: column J = coefficients of jac_forms[J] in raw basis
    CMat prym_change;  // h x h: over the raw Prym-odd monomials
    CMat B;            // g x g Jacobian period matrix
    CMat Pi;           // h x h Prym matrix (Fay half-factors on j-columns)

    LatticeBasis jacobian_lattice() const;  // Z(2pi i E, B)
    LatticeBasis prym_lattice() const;      // Z(2pi i E, Pi)
};

PeriodData normalize_differentials(const Curve& C, const CycleBasis& cb);

// Second-kind form with principal part d(w1^-1) at inf+ (which=1) or
// d(w2^-1) at inf- (which=2), zero a-periods, holomorphic elsewhere.
DifferentialForm build_second_kind(const Curve& C, const PeriodData& pd, int which);

}  // namespace prymlab
