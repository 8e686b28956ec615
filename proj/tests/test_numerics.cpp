#include <doctest.h>

#include <cmath>
#include <random>

#include "prymlab/numerics.hpp"

using namespace prymlab;

namespace {

// composite Simpson oracle on [0,1], n panels (n even)
cplx simpson(const std::function<cplx(double)>& f, int n) {
    KahanSum s;
    const double h = 1.0 / n;
    s.add(f(0.0));
    s.add(f(1.0));
    for (int i = 1; i < n; ++i) s.add(((i % 2) ? 4.0 : 2.0) * f(i * h));
    return s.value() * (h / 3.0);
}

std::vector<IVec> brute_ellipsoid(const RMat& Q, const RVec& center, double R) {
    const int n = static_cast<int>(Q.rows());
    std::vector<IVec> out;
    IVec cur(n);
    std::function<void(int)> rec = [&](int d) {
        if (d == n) {
            RVec diff = cur.cast<double>() - center;
            if (diff.dot(Q * diff) <= R * R) out.push_back(cur);
            return;
        }
        for (int v = -20; v <= 20; ++v) {
            cur(d) = v;
            rec(d + 1);
        }
    };
    rec(0);
    return out;
}

}  // namespace

TEST_CASE("integrate_segment basics") {
    CHECK(std::abs(integrate_segment([](double) { return cplx{1.0, 0.0}; }, 1e-12) -
                   cplx{1.0, 0.0}) < 1e-12);

    cplx loop = integrate_segment(
        [](double t) {
            cplx e = std::exp(kTwoPiI * t);
            return e * kTwoPiI;
        },
        1e-12);
    CHECK(std::abs(loop) < 1e-12);

    auto f = [](double t) { return cplx{1.0 / (t + 1.0), 0.0}; };
    cplx ln2 = integrate_segment(f, 1e-12);
    CHECK(std::abs(ln2 - cplx{std::log(2.0), 0.0}) < 1e-12);
    CHECK(std::abs(ln2 - simpson(f, 4096)) < 1e-11);
}

TEST_CASE("integrate_segment matches polynomial antiderivatives") {
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int deg = 1 + static_cast<int>(rng() % 12);
        std::vector<cplx> c(deg + 1);
        for (auto& ci : c) ci = cplx{u(rng), u(rng)};
        auto poly = [&](double t) {
            cplx acc{0.0, 0.0};
            for (int i = deg; i >= 0; --i) acc = acc * t + c[i];
            return acc;
        };
        // antiderivative at 1 minus at 0
        cplx exact{0.0, 0.0};
        for (int i = 0; i <= deg; ++i) exact += c[i] / static_cast<double>(i + 1);
        CHECK(std::abs(integrate_segment(poly, 1e-12) - exact) < 1e-12);
    }
}

TEST_CASE("lattice_points_in_ellipsoid") {
    {
        RMat Q = RMat::Identity(1, 1);
        RVec c = RVec::Zero(1);
        auto pts = lattice_points_in_ellipsoid(Q, c, 2.5);
        REQUIRE(pts.size() == 5);
        for (int i = 0; i < 5; ++i) CHECK(pts[i](0) == i - 2);
    }
    {
        RMat Q = RMat::Identity(2, 2);
        RVec c = RVec::Zero(2);
        auto pts = lattice_points_in_ellipsoid(Q, c, 1.0);
        CHECK(pts.size() == 5);  // origin plus 4 axis neighbours
    }
    {
        RMat Q(2, 2);
        Q << 1.0, 0.0, 0.0, 4.0;
        RVec c(2);
        c << 0.5, 0.0;
        auto pts = lattice_points_in_ellipsoid(Q, c, 1.2);
        auto ref = brute_ellipsoid(Q, c, 1.2);
        REQUIRE(pts.size() == ref.size());
        for (size_t i = 0; i < pts.size(); ++i) CHECK(pts[i] == ref[i]);
    }
    {
        // random SPD cases vs brute force, n <= 3
        std::mt19937 rng(777);
        std::uniform_real_distribution<double> u(-0.8, 0.8);
        for (int n = 1; n <= 3; ++n) {
            for (int trial = 0; trial < 5; ++trial) {
                RMat A = RMat::NullaryExpr(n, n, [&](Eigen::Index, Eigen::Index) { return u(rng); });
                RMat Q = A.transpose() * A + 0.3 * RMat::Identity(n, n);
                RVec c = RVec::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
                double R = 1.0 + std::abs(u(rng)) * 2.0;
                auto pts = lattice_points_in_ellipsoid(Q, c, R);
                auto ref = brute_ellipsoid(Q, c, R);
                REQUIRE(pts.size() == ref.size());
                for (size_t i = 0; i < pts.size(); ++i) CHECK(pts[i] == ref[i]);
            }
        }
    }
}

TEST_CASE("reduce_mod_lattice") {
    // lattice in C^2 with four generators
    std::vector<CVec> gens;
    CVec g1(2), g2(2), g3(2), g4(2);
    g1 << cplx{1.0, 0.0}, cplx{0.0, 0.0};
    g2 << cplx{0.0, 0.0}, cplx{1.0, 0.0};
    g3 << cplx{0.2, 1.3}, cplx{0.1, 0.4};
    g4 << cplx{-0.3, 0.2}, cplx{0.0, 1.7};
    gens = {g1, g2, g3, g4};
    LatticeBasis L(2, gens);

    {
        CVec v = CVec::Zero(2);
        auto r = reduce_mod_lattice(v, L);
        CHECK(r.norm < 1e-14);
        CHECK(r.coeffs.isZero());
    }
    {
        CVec v = g1 + g2;
        auto r = reduce_mod_lattice(v, L);
        CHECK(r.norm < 1e-12);
        CHECK(r.coeffs(0) == 1);
        CHECK(r.coeffs(1) == 1);
        CHECK(r.coeffs(2) == 0);
        CHECK(r.coeffs(3) == 0);
    }
    {
        CVec v = 0.3 * g1;
        auto r = reduce_mod_lattice(v, L);
        CHECK(std::abs(r.residual(0) - cplx{0.3, 0.0}) < 1e-12);
        CHECK(r.coeffs.isZero());
    }
    {
        // idempotence
        CVec v(2);
        v << cplx{2.7, -1.4}, cplx{0.9, 3.3};
        auto r1 = reduce_mod_lattice(v, L);
        auto r2 = reduce_mod_lattice(r1.residual, L);
        CHECK(r2.coeffs.isZero());
        CHECK((r2.residual - r1.residual).norm() < 1e-12);
    }
}

TEST_CASE("wirtinger_laplacian") {
    auto stencil = [](const std::function<cplx(cplx)>& f, cplx z0, double h) {
        std::array<std::array<cplx, 3>, 3> s;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                s[r][c] = f(z0 + cplx{(c - 1) * h, (1 - r) * h});
        return s;
    };
    const double h = 1e-3;

    auto fzz = [](cplx z) { return z * std::conj(z); };
    CHECK(std::abs(wirtinger_laplacian(stencil(fzz, cplx{0.3, 0.2}, h), h) - cplx{1.0, 0.0}) <
          1e-6);

    auto fz3 = [](cplx z) { return z * z * z; };
    CHECK(std::abs(wirtinger_laplacian(stencil(fz3, cplx{0.5, -0.1}, h), h)) < 1e-6);

    auto fexp = [](cplx z) { return std::exp(z + std::conj(z)); };
    CHECK(std::abs(wirtinger_laplacian(stencil(fexp, cplx{0.0, 0.0}, h), h) - cplx{1.0, 0.0}) <
          1e-5);

    // observed order >= 1.8 on exp(a z + b zbar), exact value a*b*f
    cplx a{0.7, 0.3}, b{-0.4, 0.9};
    auto g = [&](cplx z) { return std::exp(a * z + b * std::conj(z)); };
    cplx z0{0.2, 0.1};
    cplx exact = a * b * g(z0);
    double e1 = std::abs(wirtinger_laplacian(stencil(g, z0, 2e-3), 2e-3) - exact);
    double e2 = std::abs(wirtinger_laplacian(stencil(g, z0, 1e-3), 1e-3) - exact);
    double order = std::log2(e1 / e2);
    CHECK(order >= 1.8);
}

TEST_CASE("tolerance validation") {
    Tolerances t;
    CHECK_NOTHROW(t.validate());
    t.fd_step = 1e-12;
    CHECK_THROWS_AS(t.validate(), ConfigError);
    t = Tolerances{};
    t.quad_tol = -1.0;
    CHECK_THROWS_AS(t.validate(), ConfigError);
}
