#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "prymlab/numerics.hpp"

namespace prymlab {

enum class Family { A, B };

// The two hyperelliptic double-cover families.
//   A: y^2 = (x^2-a1)(x^2-a2)(x^2-a3), genus 2, sigma(x,y)=(-x,-y), two
//      sigma-fixed points at infinity (k=0).
//   B: y^2 = prod_m (x^2-cm^2), genus 3, sigma(x,y)=(-x,y), four fixed
//      points {(0,+-y0), inf+-} (k=1).
struct CurveSpec {
    Family family = Family::A;
    std::vector<cplx> branch_params;  // A: a1,a2,a3  B: c1..c4

    int genus() const { return family == Family::A ? 2 : 3; }
    int k() const { return family == Family::A ? 0 : 1; }
    int g_sigma() const { return (genus() + 1 - (k() + 1)) / 2; }
    int h() const { return genus() - g_sigma(); }
    void validate() const;
};

struct SurfacePoint {
    bool at_infinity = false;
    int inf_sign = 0;  // +1: inf+, -1: inf-  (sign of y/x^{g+1})
    cplx x{};
    cplx y{};

    static SurfacePoint infinity(int sign) {
        SurfacePoint p;
        p.at_infinity = true;
        p.inf_sign = sign;
        return p;
    }
    static SurfacePoint finite(cplx x, cplx y) {
        SurfacePoint p;
        p.x = x;
        p.y = y;
        return p;
    }
};

// (p(x)/y + q(x)) dx with polynomial p and constant q.
struct DifferentialForm {
    enum class Kind { Holomorphic, SecondKind };
    Kind kind = Kind::Holomorphic;
    CVec p;     // ascending coefficients of p(x)
    cplx q0{};  // constant term of q (zero for holomorphic forms)

    static DifferentialForm holomorphic(CVec coeffs);
    static DifferentialForm second_kind(CVec coeffs, cplx q);
};

DifferentialForm lin_comb(cplx ca, const DifferentialForm& a, cplx cb,
                          const DifferentialForm& b);

// Piecewise-straight path on the surface. Segments live either in the x
// chart or in the w = 1/x chart (used for the final approach to infinity).
// The starting point fixes the sheet; everything downstream is analytic
// continuation.
struct SurfacePath {
    struct Seg {
        bool wchart = false;
        cplx a{}, b{};
    };
    SurfacePoint start;  // finite point with explicit y
    std::vector<Seg> segs;

    void line_to(cplx x_to);
    void wline(cplx w_from, cplx w_to);
};

// Continuation record along a path: per segment, sampled (t, reference)
// pairs where the reference is y (x chart) or yhat = y*w^{g+1} (w chart).
class PathTrace {
public:
    struct SegTrace {
        std::vector<double> t;
        std::vector<cplx> ref;
    };
    std::vector<SegTrace> segs;
    SurfacePoint endpoint;

    cplx ref_at(int seg, double t) const;
};

enum class InvolutionTag { Sigma, Tau, Iota };

struct InvolutionTable {
    std::vector<std::pair<SurfacePoint, SurfacePoint>> ramification_pairs;  // (Q'_j,Q''_j)
    std::vector<SurfacePoint> sigma_fixed;
};

class Curve {
public:
    explicit Curve(CurveSpec spec, Tolerances tol = {});

    const CurveSpec& spec() const { return spec_; }
    const Tolerances& tol() const { return tol_; }
    int genus() const { return spec_.genus(); }
    int g_sigma() const { return spec_.g_sigma(); }
    int h() const { return spec_.h(); }
    int k() const { return spec_.k(); }

    const std::vector<cplx>& branch_points() const { return branch_; }
    double min_branch_separation() const { return min_sep_; }
    double clearance() const { return clearance_; }

    cplx f(cplx x) const;          // defining polynomial, monic degree 2g+2
    cplx ghat(cplx w) const;       // w^{2g+2} f(1/w); ghat(0)=1
    cplx one_minus_ghat(cplx w) const;  // evaluated without cancellation
    cplx yhat_near(cplx w, cplx ref) const;  // sqrt(ghat) branch nearest ref

    SurfacePoint apply(InvolutionTag inv, const SurfacePoint& p) const;
    const InvolutionTable& involutions() const { return inv_table_; }
    SurfacePoint base_point() const { return base_; }

    const std::vector<DifferentialForm>& holomorphic_basis() const { return hol_basis_; }
    const std::vector<DifferentialForm>& prym_odd_basis() const { return prym_basis_; }
    // sign s with sigma^*(x^{m-1}dx/y) = s * x^{m-1}dx/y, m = 1..g
    int sigma_pullback_sign(int m) const;

    // --- analytic continuation and integration ---
    PathTrace trace(const SurfacePath& path) const;
    SurfacePoint continue_y(const SurfacePath& path) const;
    cplx integrate_form(const DifferentialForm& form, const SurfacePath& path,
                        double tol) const;
    std::vector<cplx> integrate_forms(const std::vector<DifferentialForm>& forms,
                                      const SurfacePath& path, double tol) const;
    std::vector<cplx> integrate_forms(const std::vector<DifferentialForm>& forms,
                                      const SurfacePath& path, const PathTrace& tr,
                                      double tol) const;

    // value of form/dw in the w chart at w, on the sheet with yhat near ref
    cplx form_over_dw(const DifferentialForm& form, cplx w, cplx yhat_ref) const;
    cplx form_over_dx(const DifferentialForm& form, cplx x, cplx y) const;

    // --- path construction ---
    SurfacePath path_to(const SurfacePoint& target) const;  // from base point
    SurfacePath path_near_infinity(cplx w_target, int inf_sign) const;
    SurfacePath loop_around(const std::vector<int>& branch_indices,
                            const SurfacePoint* start_hint = nullptr) const;
    SurfacePath transform_path(const SurfacePath& path, InvolutionTag inv) const;
    // branch-avoiding connector from a finite point to a target x value
    SurfacePath connect(const SurfacePoint& from, cplx x_target) const;
    SurfacePath append_loop(const SurfacePath& path, const SurfacePath& loop) const;
    SurfacePath reversed(const SurfacePath& path) const;

    cplx y_branch_matched(cplx x, cplx y_ref) const;
    double dist_to_branch(cplx a, cplx b) const;  // x-chart segment [a,b]

    // polyline with tracked y values, for intersection-number computation
    std::vector<std::pair<cplx, cplx>> sample_points(const SurfacePath& path,
                                                     int per_seg) const;

    // Laurent/Taylor coefficients of phi in the local parameter at Q'_0
    // (w1 = 1/x) or Q''_0 (w2 = -1/x), from a 16-point circle fit.
    std::vector<cplx> local_expansion(const std::function<cplx(const SurfacePoint&)>& phi,
                                      bool at_q1 /*Q'_0*/, int order,
                                      double radius = 1e-2) const;

    SurfacePoint point_from_w1(cplx w1) const;  // chart at Q'_0 = inf+
    SurfacePoint point_from_w2(cplx w2) const;  // chart at Q''_0 = inf-

private:
    CurveSpec spec_;
    Tolerances tol_;
    CVec f_coeffs_;      // ascending, degree 2g+2, monic
    CVec ghat_coeffs_;   // ascending, ghat(0) = 1
    std::vector<cplx> branch_;
    double min_sep_ = 0.0;
    double clearance_ = 0.0;
    SurfacePoint base_;
    InvolutionTable inv_table_;
    std::vector<DifferentialForm> hol_basis_;
    std::vector<DifferentialForm> prym_basis_;

    void build_involution_table();
    SurfacePath route(const SurfacePoint& from, cplx x_target) const;
    std::optional<std::vector<cplx>> try_route(cplx from, cplx to) const;
    double seg_clearance(cplx a, cplx b) const;
    cplx seg_integrand(const DifferentialForm& form, const SurfacePath::Seg& seg,
                       const PathTrace::SegTrace& tr, double t) const;
};

}  // namespace prymlab
