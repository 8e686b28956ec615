#pragma once

#include "prymlab/numerics.hpp"

namespace prymlab {

// Evaluation context for theta(z, Pi) = sum_N exp(1/2 N^T Pi N + N^T z).
// The 2*pi*i a-period normalization puts convergence on Re Pi < 0.
struct ThetaContext {
    CMat Pi;
    double theta_tol = 1e-12;
    double radius_cap = 40.0;

    ThetaContext(CMat Pi_in, double tol);

    int dim() const { return static_cast<int>(Pi.rows()); }
    const RMat& neg_re_pi() const { return A_; }

private:
    RMat A_;  // -Re Pi, positive definite (asserted)
};

// Saddle-centered truncated lattice sum; radius_override > 0 forces the
// truncation radius (used by convergence tests).
cplx theta(const CVec& z, const ThetaContext& ctx, double radius_override = 0.0);

// theta with half-integer characteristic beta = (0,..,0,1/2,..,1/2), m
// trailing halves: theta_hat_m(z) = theta(z + 2*pi*i*beta). raw_shift uses
// the paper's literal z + beta instead (kept for comparison only).
cplx theta_hat(int m, const CVec& z, const ThetaContext& ctx, bool raw_shift = false);

RVec theta_characteristic(int m, int h);

// termwise gradient d theta / dz
CVec theta_gradient(const CVec& z, const ThetaContext& ctx);

// d^2/dz dzbar of ln theta over a rows x cols grid of arguments (row-major,
// grid spacing `step` in the z plane); returns the (rows-2) x (cols-2)
// interior. `scale` multiplies theta and must not affect the result.
CMat log_theta_dd(const std::vector<CVec>& args, int rows, int cols, double step,
                  const ThetaContext& ctx, cplx scale = cplx{1.0, 0.0});

}  // namespace prymlab
