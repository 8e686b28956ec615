#pragma once

#include <array>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "prymlab/errors.hpp"

namespace prymlab {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

constexpr double kPi = 3.14159265358979323846;
inline const cplx kTwoPiI{0.0, 2.0 * kPi};

struct Tolerances {
    double quad_tol = 1e-12;     // absolute quadrature error target
    double theta_tol = 1e-12;    // theta tail bound target
    double lattice_tol = 1e-6;   // integrality tolerance for lattice membership
    double fd_step = 1e-3;       // finite-difference step in the z-plane

    void validate() const;
};

// Compensated (Kahan) accumulator; summation order is the caller's
// responsibility and must be fixed for bit-stable reruns.
class KahanSum {
public:
    void add(cplx term) {
        cplx y = term - comp_;
        cplx t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    cplx value() const { return sum_; }

private:
    cplx sum_{0.0, 0.0};
    cplx comp_{0.0, 0.0};
};

// Lattice in C^n spanned by 2n complex generators, handled as a real
// 2n x 2n generator matrix (Re stacked over Im).
class LatticeBasis {
public:
    LatticeBasis(int n, std::vector<CVec> generators);

    int dim() const { return n_; }
    const std::vector<CVec>& generators() const { return gens_; }
    const RMat& real_generators() const { return real_gens_; }
    double condition_number() const { return cond_; }

    static RVec realify(const CVec& v);

private:
    int n_;
    std::vector<CVec> gens_;
    RMat real_gens_;  // 2n x 2n
    double cond_;
};

struct LatticeReduction {
    CVec residual;
    IVec coeffs;  // length 2n
    double norm;  // Euclidean norm of the residual
};

// Adaptive Gauss-Kronrod (G7/K15) quadrature of a complex-valued function
// over the parameter interval [0,1]. Deterministic depth-first bisection.
cplx integrate_segment(const std::function<cplx(double)>& f, double tol);

// All integer vectors N with (N-center)^T Q (N-center) <= R^2, enumerated
// lexicographically. Q must be symmetric positive definite.
std::vector<IVec> lattice_points_in_ellipsoid(const RMat& Q, const RVec& center, double R);

// Nearest-integer reduction of v modulo the lattice.
LatticeReduction reduce_mod_lattice(const CVec& v, const LatticeBasis& L,
                                    double cond_threshold = 1e8);

// Second-order central-difference approximation of d^2 f / dz dzbar from a
// 3x3 stencil of samples (row-major, samples[r][c] at z0 + (c-1)*h + i(1-r)*h).
cplx wirtinger_laplacian(const std::array<std::array<cplx, 3>, 3>& samples, double step);

}  // namespace prymlab
