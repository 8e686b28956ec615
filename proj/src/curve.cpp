#include "prymlab/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prymlab {

namespace {

cplx poly_eval(const CVec& c, cplx x) {
    cplx acc{0.0, 0.0};
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) acc = acc * x + c(i);
    return acc;
}

CVec poly_mul(const CVec& a, const CVec& b) {
    CVec r = CVec::Zero(a.size() + b.size() - 1);
    for (int i = 0; i < a.size(); ++i)
        for (int j = 0; j < b.size(); ++j) r(i + j) += a(i) * b(j);
    return r;
}

double point_segment_dist(cplx p, cplx a, cplx b) {
    const cplx ab = b - a;
    const double len2 = std::norm(ab);
    if (len2 == 0.0) return std::abs(p - a);
    double t = ((p - a).real() * ab.real() + (p - a).imag() * ab.imag()) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::abs(p - (a + t * ab));
}

}  // namespace

void CurveSpec::validate() const {
    const size_t need = family == Family::A ? 3 : 4;
    if (branch_params.size() != need)
        throw ConfigError("CurveSpec: wrong number of branch parameters");
    for (const cplx& p : branch_params)
        if (std::abs(p) < 1e-10) throw DegenerateCurve("branch parameter too close to zero");
    for (size_t i = 0; i < branch_params.size(); ++i)
        for (size_t j = i + 1; j < branch_params.size(); ++j)
            if (std::abs(branch_params[i] - branch_params[j]) < 1e-10)
                throw DegenerateCurve("coinciding branch parameters");
}

DifferentialForm DifferentialForm::holomorphic(CVec coeffs) {
    DifferentialForm f;
    f.kind = Kind::Holomorphic;
    f.p = std::move(coeffs);
    f.q0 = 0.0;
    return f;
}

DifferentialForm DifferentialForm::second_kind(CVec coeffs, cplx q) {
    DifferentialForm f;
    f.kind = Kind::SecondKind;
    f.p = std::move(coeffs);
    f.q0 = q;
    return f;
}

DifferentialForm lin_comb(cplx ca, const DifferentialForm& a, cplx cb,
                          const DifferentialForm& b) {
    DifferentialForm r;
    r.kind = (a.kind == DifferentialForm::Kind::SecondKind ||
              b.kind == DifferentialForm::Kind::SecondKind)
                 ? DifferentialForm::Kind::SecondKind
                 : DifferentialForm::Kind::Holomorphic;
    const int n = static_cast<int>(std::max(a.p.size(), b.p.size()));
    r.p = CVec::Zero(n);
    for (int i = 0; i < a.p.size(); ++i) r.p(i) += ca * a.p(i);
    for (int i = 0; i < b.p.size(); ++i) r.p(i) += cb * b.p(i);
    r.q0 = ca * a.q0 + cb * b.q0;
    return r;
}

void SurfacePath::line_to(cplx x_to) {
    cplx from = segs.empty() ? start.x : segs.back().b;
    segs.push_back({false, from, x_to});
}

void SurfacePath::wline(cplx w_from, cplx w_to) { segs.push_back({true, w_from, w_to}); }

cplx PathTrace::ref_at(int seg, double t) const {
    const SegTrace& s = segs[seg];
    auto it = std::upper_bound(s.t.begin(), s.t.end(), t);
    size_t hi = static_cast<size_t>(it - s.t.begin());
    if (hi == 0) return s.ref.front();
    if (hi >= s.t.size()) return s.ref.back();
    // nearer node wins
    return (t - s.t[hi - 1] < s.t[hi] - t) ? s.ref[hi - 1] : s.ref[hi];
}

Curve::Curve(CurveSpec spec, Tolerances tol) : spec_(std::move(spec)), tol_(tol) {
    spec_.validate();
    tol_.validate();
    const int g = genus();

    // defining polynomial: product of (x^2 - r_m) with r_m = a_m or c_m^2
    CVec f = CVec::Ones(1);
    for (const cplx& p : spec_.branch_params) {
        cplx r = (spec_.family == Family::A) ? p : p * p;
        CVec quad(3);
        quad << -r, 0.0, 1.0;
        f = poly_mul(f, quad);
    }
    f_coeffs_ = f;

    // ghat(w) = w^{2g+2} f(1/w): reversed coefficients
    const int deg = 2 * g + 2;
    ghat_coeffs_ = CVec::Zero(deg + 1);
    for (int i = 0; i <= deg; ++i) ghat_coeffs_(i) = f_coeffs_(deg - i);

    for (const cplx& p : spec_.branch_params) {
        cplx b = (spec_.family == Family::A) ? std::sqrt(p) : p;
        branch_.push_back(b);
        branch_.push_back(-b);
    }
    std::sort(branch_.begin(), branch_.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    min_sep_ = std::numeric_limits<double>::max();
    for (size_t i = 0; i < branch_.size(); ++i)
        for (size_t j = i + 1; j < branch_.size(); ++j)
            min_sep_ = std::min(min_sep_, std::abs(branch_[i] - branch_[j]));
    if (min_sep_ < 1e-10) throw DegenerateCurve("branch points collide");
    clearance_ = 0.05 * min_sep_;

    double maxb = 0.0;
    for (const cplx& b : branch_) maxb = std::max(maxb, std::abs(b));
    double xb = std::max(10.0, 2.0 * maxb + 2.0);
    cplx yb = std::sqrt(this->f(xb));
    // base sheet compatible with inf+: Re(y/x^{g+1}) > 0
    cplx ratio = yb / std::pow(cplx(xb), g + 1);
    if (ratio.real() < 0) yb = -yb;
    base_ = SurfacePoint::finite(xb, yb);

    build_involution_table();

    for (int m = 1; m <= g; ++m) {
        CVec p = CVec::Zero(m);
        p(m - 1) = 1.0;
        hol_basis_.push_back(DifferentialForm::holomorphic(p));
        if (sigma_pullback_sign(m) == -1)
            prym_basis_.push_back(DifferentialForm::holomorphic(p));
    }
    if (static_cast<int>(prym_basis_.size()) != h())
        throw DegenerateCurve("Prym-odd subspace has unexpected dimension");
}

cplx Curve::f(cplx x) const { return poly_eval(f_coeffs_, x); }
cplx Curve::ghat(cplx w) const { return poly_eval(ghat_coeffs_, w); }

cplx Curve::one_minus_ghat(cplx w) const {
    // 1 - ghat has zero constant term; evaluate the shifted polynomial
    cplx acc{0.0, 0.0};
    for (int i = static_cast<int>(ghat_coeffs_.size()) - 1; i >= 1; --i)
        acc = acc * w + (-ghat_coeffs_(i));
    return acc * w;
}

cplx Curve::yhat_near(cplx w, cplx ref) const {
    cplx s = std::sqrt(ghat(w));
    return (std::abs(s - ref) <= std::abs(s + ref)) ? s : -s;
}

int Curve::sigma_pullback_sign(int m) const {
    // sigma^*(x^{m-1} dx / y) = ((-1)^m / s_y) x^{m-1} dx / y
    const int sy = (spec_.family == Family::A) ? -1 : 1;
    int s = (m % 2 == 0) ? 1 : -1;
    return s * sy;
}

SurfacePoint Curve::apply(InvolutionTag inv, const SurfacePoint& p) const {
    const bool famA = spec_.family == Family::A;
    if (p.at_infinity) {
        switch (inv) {
            case InvolutionTag::Sigma:
                return p;  // both families fix inf+-
            case InvolutionTag::Tau:
            case InvolutionTag::Iota:
                return SurfacePoint::infinity(-p.inf_sign);
        }
    }
    switch (inv) {
        case InvolutionTag::Sigma:
            return famA ? SurfacePoint::finite(-p.x, -p.y) : SurfacePoint::finite(-p.x, p.y);
        case InvolutionTag::Tau:
            return famA ? SurfacePoint::finite(-p.x, p.y) : SurfacePoint::finite(-p.x, -p.y);
        case InvolutionTag::Iota:
            return SurfacePoint::finite(p.x, -p.y);
    }
    return p;
}

void Curve::build_involution_table() {
    inv_table_.ramification_pairs.clear();
    inv_table_.sigma_fixed.clear();
    const SurfacePoint ip = SurfacePoint::infinity(+1);
    const SurfacePoint im = SurfacePoint::infinity(-1);
    inv_table_.ramification_pairs.emplace_back(ip, im);  // (Q'_0, Q''_0)
    inv_table_.sigma_fixed.push_back(ip);
    inv_table_.sigma_fixed.push_back(im);
    if (spec_.family == Family::B) {
        cplx y0 = std::sqrt(f(cplx{0.0, 0.0}));
        SurfacePoint q1 = SurfacePoint::finite(0.0, y0);
        SurfacePoint q2 = SurfacePoint::finite(0.0, -y0);
        inv_table_.ramification_pairs.emplace_back(q1, q2);  // tau Q'_1 = Q''_1
        inv_table_.sigma_fixed.push_back(q1);
        inv_table_.sigma_fixed.push_back(q2);
    }
}

double Curve::seg_clearance(cplx a, cplx b) const {
    double d = std::numeric_limits<double>::max();
    for (const cplx& e : branch_) d = std::min(d, point_segment_dist(e, a, b));
    return d;
}

double Curve::dist_to_branch(cplx a, cplx b) const { return seg_clearance(a, b); }

cplx Curve::y_branch_matched(cplx x, cplx y_ref) const {
    cplx s = std::sqrt(f(x));
    return (std::abs(s - y_ref) <= std::abs(s + y_ref)) ? s : -s;
}

PathTrace Curve::trace(const SurfacePath& path) const {
    const int g = genus();
    PathTrace out;
    out.segs.resize(path.segs.size());

    bool cur_w = false;  // chart of the current reference
    cplx ref = path.start.y;
    cplx cur_coord = path.start.x;

    // branch-point images per chart
    std::vector<cplx> wbranch;
    for (const cplx& e : branch_) wbranch.push_back(1.0 / e);

    for (size_t si = 0; si < path.segs.size(); ++si) {
        const auto& seg = path.segs[si];
        // chart transition
        if (seg.wchart != cur_w) {
            if (seg.wchart) {
                cplx w = seg.a;
                ref = ref * std::pow(w, g + 1);  // yhat = y w^{g+1}
            } else {
                cplx w = cur_coord;
                ref = ref / std::pow(w, g + 1);
            }
            cur_w = seg.wchart;
        }
        const std::vector<cplx>& bs = seg.wchart ? wbranch : branch_;
        auto value_near = [&](cplx z, cplx r) {
            cplx s = seg.wchart ? std::sqrt(ghat(z)) : std::sqrt(f(z));
            return (std::abs(s - r) <= std::abs(s + r)) ? s : -s;
        };
        auto dist_b = [&](cplx z) {
            double d = std::numeric_limits<double>::max();
            for (const cplx& e : bs) d = std::min(d, std::abs(z - e));
            return d;
        };

        PathTrace::SegTrace& tr = out.segs[si];
        const cplx dir = seg.b - seg.a;
        const double len = std::abs(dir);
        double t = 0.0;
        tr.t.push_back(0.0);
        tr.ref.push_back(ref);
        double dt = 0.125;
        while (t < 1.0 && len > 0.0) {
            cplx z = seg.a + dir * t;
            double cap = 0.4 * dist_b(z) / len;
            double step = std::min({dt, cap, 1.0 - t});
            for (;;) {
                if (step < 1e-9)
                    throw SheetAmbiguity("continue_y: step underflow near a branch point");
                cplx zn = seg.a + dir * (t + step);
                cplx cand = value_near(zn, ref);
                double scale = std::max({std::abs(cand), std::abs(ref), 1e-300});
                if (std::abs(cand - ref) < 0.5 * scale) {
                    ref = cand;
                    t += step;
                    tr.t.push_back(t);
                    tr.ref.push_back(ref);
                    dt = std::min(step * 1.6, 0.125);
                    break;
                }
                step *= 0.5;
            }
        }
        if (len == 0.0) {
            tr.t.push_back(1.0);
            tr.ref.push_back(ref);
        }
        cur_coord = seg.b;
    }

    // endpoint
    if (path.segs.empty()) {
        out.endpoint = path.start;
    } else {
        const auto& last = path.segs.back();
        if (last.wchart) {
            cplx w = last.b;
            if (std::abs(w) == 0.0) {
                out.endpoint = SurfacePoint::infinity(ref.real() > 0 ? +1 : -1);
            } else {
                out.endpoint = SurfacePoint::finite(1.0 / w, ref / std::pow(w, g + 1));
            }
        } else {
            out.endpoint = SurfacePoint::finite(last.b, ref);
        }
    }
    return out;
}

SurfacePoint Curve::continue_y(const SurfacePath& path) const { return trace(path).endpoint; }

cplx Curve::seg_integrand(const DifferentialForm& form, const SurfacePath::Seg& seg,
                          const PathTrace::SegTrace& tr, double t) const {
    const int g = genus();
    const cplx z = seg.a + (seg.b - seg.a) * t;
    // locate reference
    auto it = std::upper_bound(tr.t.begin(), tr.t.end(), t);
    size_t hi = static_cast<size_t>(it - tr.t.begin());
    cplx ref;
    if (hi == 0)
        ref = tr.ref.front();
    else if (hi >= tr.t.size())
        ref = tr.ref.back();
    else
        ref = (t - tr.t[hi - 1] < tr.t[hi] - t) ? tr.ref[hi - 1] : tr.ref[hi];

    if (!seg.wchart) {
        cplx y = y_branch_matched(z, ref);
        return (poly_eval(form.p, z) / y + form.q0) * (seg.b - seg.a);
    }
    // w chart: (p(x)/y) dx = -sum_j p_j w^{g-1-j} dw / yhat,  q dx = -q dw / w^2
    cplx yh = yhat_near(z, ref);
    cplx reg{0.0, 0.0};
    const int np = static_cast<int>(form.p.size());
    for (int j = 0; j < np && j <= g - 1; ++j) reg += form.p(j) * std::pow(z, g - 1 - j);
    cplx val = -reg / yh;
    cplx p_top = (np > g + 1) ? form.p(g + 1) : cplx{0.0, 0.0};
    if (p_top != cplx{0.0, 0.0} || form.q0 != cplx{0.0, 0.0}) {
        // stabilized (p_top/yhat + q0)/w^2 for small w
        double s = yh.real() > 0 ? 1.0 : -1.0;
        cplx dyh = (s > 0) ? -one_minus_ghat(z) / (1.0 + yh) : one_minus_ghat(z) / (1.0 - yh);
        cplx num = (p_top + form.q0 * s) + form.q0 * dyh;  // p_top + q0*yhat
        val -= num / (yh * z * z);
    }
    return val * (seg.b - seg.a);
}

cplx Curve::integrate_form(const DifferentialForm& form, const SurfacePath& path,
                           double tol) const {
    PathTrace tr = trace(path);
    std::vector<DifferentialForm> fs{form};
    return integrate_forms(fs, path, tr, tol)[0];
}

std::vector<cplx> Curve::integrate_forms(const std::vector<DifferentialForm>& forms,
                                         const SurfacePath& path, double tol) const {
    PathTrace tr = trace(path);
    return integrate_forms(forms, path, tr, tol);
}

std::vector<cplx> Curve::integrate_forms(const std::vector<DifferentialForm>& forms,
                                         const SurfacePath& path, const PathTrace& tr,
                                         double tol) const {
    std::vector<cplx> out(forms.size(), cplx{0.0, 0.0});
    if (path.segs.empty()) return out;
    const double seg_tol = tol / static_cast<double>(path.segs.size());
    for (size_t fi = 0; fi < forms.size(); ++fi) {
        KahanSum acc;
        for (size_t si = 0; si < path.segs.size(); ++si) {
            const auto& seg = path.segs[si];
            if (seg.a == seg.b) continue;
            acc.add(integrate_segment(
                [&](double t) { return seg_integrand(forms[fi], seg, tr.segs[si], t); },
                seg_tol));
        }
        out[fi] = acc.value();
    }
    return out;
}

cplx Curve::form_over_dw(const DifferentialForm& form, cplx w, cplx yhat_ref) const {
    SurfacePath::Seg seg{true, w, w + 1.0};
    PathTrace::SegTrace tr;
    tr.t = {0.0};
    tr.ref = {yhat_ref};
    return seg_integrand(form, seg, tr, 0.0);  // (b-a)=1 so this is form/dw
}

cplx Curve::form_over_dx(const DifferentialForm& form, cplx x, cplx y) const {
    return poly_eval(form.p, x) / y + form.q0;
}

std::optional<std::vector<cplx>> Curve::try_route(cplx from, cplx to) const {
    const double route_clear = 0.3 * min_sep_;
    auto ok = [&](cplx a, cplx b, bool relax_a, bool relax_b) {
        double need = route_clear;
        if (relax_a) need = std::min(need, 0.9 * std::max(seg_clearance(a, a), 1e-8));
        if (relax_b) need = std::min(need, 0.9 * std::max(seg_clearance(b, b), 1e-8));
        return seg_clearance(a, b) >= need;
    };
    if (ok(from, to, true, true)) return std::vector<cplx>{from, to};
    double maxim = 0.0, maxre = 0.0;
    for (const cplx& e : branch_) {
        maxim = std::max(maxim, std::abs(e.imag()));
        maxre = std::max(maxre, std::abs(e.real()));
    }
    for (double h : {maxim + 0.6 * maxre + 1.0, 2.0 * (maxim + maxre) + 2.0,
                     4.0 * (maxim + maxre) + 4.0}) {
        for (double sgn : {1.0, -1.0}) {
            cplx w1 = from + cplx{0.0, sgn * h};
            cplx w2 = to + cplx{0.0, sgn * h};
            if (ok(from, w1, true, false) && ok(w1, w2, false, false) && ok(w2, to, false, true))
                return std::vector<cplx>{from, w1, w2, to};
        }
    }
    return std::nullopt;
}

SurfacePath Curve::route(const SurfacePoint& from, cplx x_target) const {
    auto pts = try_route(from.x, x_target);
    if (!pts) throw SheetAmbiguity("route: no clear path around branch points");
    SurfacePath p;
    p.start = from;
    for (size_t i = 0; i + 1 < pts->size(); ++i) p.segs.push_back({false, (*pts)[i], (*pts)[i + 1]});
    return p;
}

namespace {

// octagonal loop vertices around center with radius r, starting/ending east
std::vector<cplx> octagon(cplx center, double r) {
    std::vector<cplx> v;
    for (int i = 0; i <= 8; ++i) {
        double th = 2.0 * kPi * i / 8.0;
        v.push_back(center + r * cplx{std::cos(th), std::sin(th)});
    }
    return v;
}

}  // namespace

SurfacePath Curve::path_to(const SurfacePoint& target) const {
    if (target.at_infinity) return path_near_infinity(cplx{0.0, 0.0}, target.inf_sign);
    for (int attempt = 0; attempt < 2; ++attempt) {
        SurfacePath p;
        p.start = base_;
        if (attempt == 1) {
            // guaranteed sheet flip: a closed loop in x around one branch
            // point, prefixed to the same route as attempt 0
            double r = 0.35 * min_sep_;
            cplx c = branch_.front() + r;
            SurfacePath toc = route(base_, c);
            p.segs = toc.segs;
            auto oct = octagon(branch_.front(), r);
            for (size_t i = 0; i + 1 < oct.size(); ++i) p.segs.push_back({false, oct[i], oct[i + 1]});
            for (auto it = toc.segs.rbegin(); it != toc.segs.rend(); ++it)
                p.segs.push_back({it->wchart, it->b, it->a});
        }
        SurfacePath direct = route(base_, target.x);
        p.segs.insert(p.segs.end(), direct.segs.begin(), direct.segs.end());
        SurfacePoint end = continue_y(p);
        if (std::abs(end.y - target.y) <= std::abs(end.y + target.y)) {
            if (std::abs(end.y - target.y) > 1e-6 * (1.0 + std::abs(target.y)))
                throw SheetAmbiguity("path_to: endpoint does not satisfy the curve equation");
            return p;
        }
    }
    throw SheetAmbiguity("path_to: could not reach the requested sheet");
}

SurfacePath Curve::path_near_infinity(cplx w_target, int inf_sign) const {
    double maxb = 0.0;
    for (const cplx& b : branch_) maxb = std::max(maxb, std::abs(b));
    const double xsw = std::max({5.0, 2.0 * maxb, base_.x.real()});
    for (int attempt = 0; attempt < 2; ++attempt) {
        SurfacePath p;
        p.start = base_;
        if (attempt == 1) {
            double r = 0.35 * min_sep_;
            cplx c = branch_.front() + r;
            SurfacePath toc = route(base_, c);
            p.segs = toc.segs;
            auto oct = octagon(branch_.front(), r);
            for (size_t i = 0; i + 1 < oct.size(); ++i) p.segs.push_back({false, oct[i], oct[i + 1]});
            auto back = try_route(c, base_.x);
            if (!back) throw SheetAmbiguity("path_near_infinity: no return route");
            for (size_t i = 0; i + 1 < back->size(); ++i)
                p.segs.push_back({false, (*back)[i], (*back)[i + 1]});
        }
        if (xsw > base_.x.real()) p.segs.push_back({false, base_.x, cplx(xsw)});
        p.segs.push_back({true, 1.0 / xsw, w_target});
        PathTrace tr = trace(p);
        cplx yh_end = tr.segs.back().ref.back();
        int sgn = yh_end.real() > 0 ? +1 : -1;
        if (sgn == inf_sign) return p;
    }
    throw SheetAmbiguity("path_near_infinity: could not reach the requested infinity sheet");
}

SurfacePath Curve::loop_around(const std::vector<int>& branch_indices,
                               const SurfacePoint* start_hint) const {
    std::vector<cplx> pts;
    for (int i : branch_indices) pts.push_back(branch_.at(static_cast<size_t>(i)));
    cplx e0 = pts.front(), e1 = pts.back();
    cplx mid = 0.5 * (e0 + e1);
    double halflen = 0.5 * std::abs(e1 - e0);
    cplx dir = (halflen > 0) ? (e1 - e0) / (2.0 * halflen) : cplx{1.0, 0.0};

    // margin: distance from the enclosed segment to every other branch point
    double margin = std::numeric_limits<double>::max();
    for (size_t bi = 0; bi < branch_.size(); ++bi) {
        bool enclosed = false;
        for (int i : branch_indices) enclosed |= (static_cast<size_t>(i) == bi);
        if (enclosed) continue;
        margin = std::min(margin, point_segment_dist(branch_[bi], e0, e1));
    }
    if (margin == std::numeric_limits<double>::max()) margin = 1.0;
    const double r = 0.45 * margin;

    const int n = 64;
    SurfacePath p;
    std::vector<cplx> verts;
    for (int i = 0; i <= n; ++i) {
        double th = 2.0 * kPi * i / n;
        cplx z = mid + dir * ((halflen + r) * std::cos(th)) + dir * cplx{0.0, 1.0} * (r * std::sin(th));
        verts.push_back(z);
    }
    cplx y0;
    if (start_hint) {
        y0 = y_branch_matched(verts[0], start_hint->y);
    } else {
        y0 = std::sqrt(f(verts[0]));
        if (y0.real() < 0 || (y0.real() == 0 && y0.imag() < 0)) y0 = -y0;
    }
    p.start = SurfacePoint::finite(verts[0], y0);
    for (int i = 0; i < n; ++i) p.segs.push_back({false, verts[i], verts[i + 1]});
    return p;
}

SurfacePath Curve::transform_path(const SurfacePath& path, InvolutionTag inv) const {
    const bool flip_x = (inv != InvolutionTag::Iota);
    SurfacePath out;
    out.start = apply(inv, path.start);
    for (const auto& s : path.segs) {
        cplx a = flip_x ? -s.a : s.a;
        cplx b = flip_x ? -s.b : s.b;
        out.segs.push_back({s.wchart, a, b});
    }
    return out;
}

SurfacePath Curve::connect(const SurfacePoint& from, cplx x_target) const {
    return route(from, x_target);
}

SurfacePath Curve::append_loop(const SurfacePath& path, const SurfacePath& loop) const {
    SurfacePoint end = continue_y(path);
    if (end.at_infinity)
        throw SheetAmbiguity("append_loop: path must end at a finite point");
    SurfacePath conn = route(end, loop.start.x);
    SurfacePath out = path;
    for (const auto& s : conn.segs) out.segs.push_back(s);
    for (const auto& s : loop.segs) out.segs.push_back(s);
    for (auto it = conn.segs.rbegin(); it != conn.segs.rend(); ++it)
        out.segs.push_back({it->wchart, it->b, it->a});
    return out;
}

SurfacePath Curve::reversed(const SurfacePath& path) const {
    SurfacePoint end = continue_y(path);
    if (end.at_infinity) throw SheetAmbiguity("reversed: endpoint at infinity");
    SurfacePath out;
    out.start = end;
    for (auto it = path.segs.rbegin(); it != path.segs.rend(); ++it)
        out.segs.push_back({it->wchart, it->b, it->a});
    return out;
}

std::vector<std::pair<cplx, cplx>> Curve::sample_points(const SurfacePath& path,
                                                        int per_seg) const {
    PathTrace tr = trace(path);
    std::vector<std::pair<cplx, cplx>> pts;
    for (size_t si = 0; si < path.segs.size(); ++si) {
        const auto& seg = path.segs[si];
        if (seg.wchart) continue;  // loops stay in the x chart
        for (int j = 0; j < per_seg; ++j) {
            double t = static_cast<double>(j) / per_seg;
            cplx z = seg.a + (seg.b - seg.a) * t;
            cplx y = y_branch_matched(z, tr.ref_at(static_cast<int>(si), t));
            pts.emplace_back(z, y);
        }
    }
    if (!path.segs.empty()) {
        const auto& last = path.segs.back();
        if (!last.wchart) {
            cplx y = y_branch_matched(last.b, tr.segs.back().ref.back());
            pts.emplace_back(last.b, y);
        }
    }
    return pts;
}

SurfacePoint Curve::point_from_w1(cplx w1) const {
    const int g = genus();
    if (w1 == cplx{0.0, 0.0}) return SurfacePoint::infinity(+1);
    cplx yh = std::sqrt(ghat(w1));
    if (yh.real() < 0) yh = -yh;
    return SurfacePoint::finite(1.0 / w1, yh / std::pow(w1, g + 1));
}

SurfacePoint Curve::point_from_w2(cplx w2) const {
    const int g = genus();
    if (w2 == cplx{0.0, 0.0}) return SurfacePoint::infinity(-1);
    cplx v = -w2;
    cplx yh = std::sqrt(ghat(v));
    if (yh.real() > 0) yh = -yh;
    return SurfacePoint::finite(1.0 / v, yh / std::pow(v, g + 1));
}

std::vector<cplx> Curve::local_expansion(const std::function<cplx(const SurfacePoint&)>& phi,
                                         bool at_q1, int order, double radius) const {
    const int n = 16;
    if (order >= n / 2) throw FitIllConditioned("local_expansion: order too large for 16 samples");
    std::vector<cplx> vals(n);
    double scale = 0.0;
    for (int j = 0; j < n; ++j) {
        double th = 2.0 * kPi * j / n;
        cplx w = radius * cplx{std::cos(th), std::sin(th)};
        SurfacePoint p = at_q1 ? point_from_w1(w) : point_from_w2(w);
        vals[j] = phi(p);
        scale = std::max(scale, std::abs(vals[j]));
    }
    std::vector<cplx> dft(n);
    for (int k = 0; k < n; ++k) {
        KahanSum s;
        for (int j = 0; j < n; ++j) {
            double th = -2.0 * kPi * j * k / n;
            s.add(vals[j] * cplx{std::cos(th), std::sin(th)});
        }
        dft[k] = s.value() / static_cast<double>(n);
    }
    // Aliasing check: negative powers (poles inside the circle) fold into the
    // top DFT bins; for an analytic phi these decay like (r/rho)^k and are
    // negligible at k >= n/2 with r = 1e-2.
    double tail = std::max({std::abs(dft[n / 2]), std::abs(dft[n - 3]), std::abs(dft[n - 2]),
                            std::abs(dft[n - 1])});
    if (scale > 0 && tail / scale > 1e-8)
        throw FitIllConditioned("local_expansion: fit residual too large (pole inside sample circle?)");
    std::vector<cplx> coeffs(order + 1);
    for (int k = 0; k <= order; ++k) coeffs[k] = dft[k] / std::pow(radius, k);
    return coeffs;
}

}  // namespace prymlab
