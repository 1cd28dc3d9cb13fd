#include <cmath>

#include "doctest.h"
#include "fermichain/algebra.hpp"
#include "fermichain/car.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/transition.hpp"

using namespace fermichain;

namespace {

MatrixSubalgebra gen(std::vector<CMatrix> g, const CMatrix& unit) { return algebra_closure(g, unit); }

TransitionBlockSpec single(const CMatrix& p, const MatrixSubalgebra& n, const CMatrix& phi) {
    return {OrbitKind::Single, p, n, phi};
}

// even faithful two-mode density used as a block state
CMatrix even_two_site_density(int modes) {
    const std::size_t D = std::size_t(1) << modes;
    CMatrix r(D);
    const auto s = parity_signs(modes);
    for (std::size_t i = 0; i < D; ++i) {
        r(i, i) = 1.0 + 0.1 * double(i);
        for (std::size_t j = i + 1; j < D; ++j)
            if (s[i] == s[j]) {
                r(i, j) = cplx(0.02 * double(i + 1), -0.01 * double(j));
                r(j, i) = std::conj(r(i, j));
            }
    }
    r *= 1.0 / r.trace().real();
    return r;
}

CMatrix superop_from_choi(const CMatrix& c, std::size_t d0, std::size_t D) {
    CMatrix s(d0 * d0, D * D);
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t cc = 0; cc < D; ++cc)
            for (std::size_t b = 0; b < d0; ++b)
                for (std::size_t a = 0; a < d0; ++a) s(a + b * d0, cc + d * D) = c(cc * d0 + a, d * d0 + b);
    return s;
}

}  // namespace

TEST_CASE("product-state block: eps(xy) = tau(y) x") {
    const CMatrix i2 = CMatrix::identity(2);
    const auto eps = assemble({build_block(single(i2, full_corner(i2), 0.25 * CMatrix::identity(4)), 1)}, 1, 1);
    const CMatrix x = annihilator(1, 0) + 0.3 * i2;
    const CMatrix y = CMatrix::diag_real({0.2, 1.0});
    CHECK(frob_distance(eps.apply(kron(x, y)), 0.6 * x) < 1e-13);
    const auto rep = verify_conditional_expectation(eps);
    CHECK(rep.passes(1e-12));
    CHECK(rep.faithful);
    CHECK(eps.range().dim() == 4);
    CHECK(classify(eps) == ChainClass::StronglyEven);
}

TEST_CASE("trace block: eps = tau(.) I") {
    const CMatrix i2 = CMatrix::identity(2);
    const auto eps = assemble({build_block(single(i2, scalars(i2), 0.25 * CMatrix::identity(4)), 1)}, 1, 1);
    const CMatrix w = kron(CMatrix::diag_real({1, 3}), annihilator(1, 0) + CMatrix::identity(2));
    CHECK(frob_distance(eps.apply(w), (w.trace() / 4.0) * i2) < 1e-13);
    const auto rep = verify_conditional_expectation(eps);
    CHECK(rep.idempotency <= 1e-12);
    CHECK(rep.unitality <= 1e-12);
    CHECK(rep.bimodule <= 1e-12);
    CHECK(rep.evenness <= 1e-12);
    CHECK(rep.choi_min_eigenvalue >= -1e-12);
    CHECK(rep.faithful);
}

TEST_CASE("corrupted Choi matrix is reported") {
    const CMatrix i2 = CMatrix::identity(2);
    const auto eps = assemble({build_block(single(i2, scalars(i2), 0.25 * CMatrix::identity(4)), 1)}, 1, 1);
    CMatrix c = eps.choi();
    const auto e = herm_eig(c);
    CMatrix v(8, 1);
    for (std::size_t i = 0; i < 8; ++i) v(i, 0) = e.vectors(i, 0);
    c += (-0.01 - e.values[0]) * (v * v.adjoint());
    const TransitionExpectation bad(1, 1, superop_from_choi(c, 2, 4));
    CHECK(verify_conditional_expectation(bad, eps.range()).choi_min_eigenvalue == doctest::Approx(-0.01).epsilon(1e-9));
}

TEST_CASE("two-mode site: N = alg(a1), complement alg(a2)") {
    // site 0 and site 1 each have two modes
    const CMatrix i4 = CMatrix::identity(4);
    const CMatrix a1 = annihilator(2, 0);
    const MatrixSubalgebra n = gen({a1, a1.adjoint()}, i4);
    const CMatrix r = even_two_site_density(4);
    const auto eps = assemble({build_block(single(i4, n, r), 2)}, 2, 2);
    const auto rep = verify_conditional_expectation(eps);
    CHECK(rep.passes(1e-9));
    CHECK(rep.faithful);
    CHECK(subspace_distance(eps.range(), n) < 1e-9);
    // eps(x y) = Phi(y) x for x in N, y in Nbar v A_1 (here: a2-string times site-1 even)
    const MatrixSubalgebra nbar = fermion_complement(n, full_corner(i4)).complement;
    const CMatrix y1 = kron(nbar.basis[1], CMatrix::identity(4));
    const CMatrix y2 = kron(CMatrix::identity(4), matrix_unit(2, 1, 1, 1));
    for (const auto& x : n.basis) {
        const CMatrix y = even_part(y1 * y2);
        const cplx phi = trace_of_product(r, y);
        CHECK(frob_distance(eps.apply(kron(x, CMatrix::identity(4)) * y), phi * x) < 1e-10);
    }
    // round trip of the block state
    const auto rec = disassemble(eps);
    REQUIRE(rec.size() == 1);
    CHECK(frob_distance(rec[0].psi, eps.blocks()[0].psi) < 1e-10);
}

TEST_CASE("double orbit: q_chi block on one mode") {
    const CMatrix i2 = CMatrix::identity(2);
    const CMatrix a = annihilator(1, 0);
    const CMatrix q = 0.5 * (i2 + a + a.adjoint());
    const CMatrix qq = kron(q, i2);
    // eta: normalized trace of the two-dimensional corner q A q
    const CMatrix eta = 0.5 * qq;
    const auto eps = assemble({build_block({OrbitKind::Double, q, scalars(q), eta}, 1)}, 1, 1);
    const auto rep = verify_conditional_expectation(eps);
    CHECK(rep.passes(1e-10));
    CHECK(classify(eps) == ChainClass::Minimal);
    const CMatrix qm = i2 - q;
    // eps(x) = eta(q x q) q + eta(q Theta(x) q) q_-
    const CMatrix x = kron(CMatrix::diag_real({0.3, 1.0}) + a, a + a.adjoint() + 0.5 * i2);
    const CMatrix expect = trace_of_product(eta, qq * x * qq) * q + trace_of_product(eta, qq * theta(x) * qq) * qm;
    CHECK(frob_distance(eps.apply(x), expect) < 1e-12);
    // even z on site 1: eps((P1+P2) z) = Phi(P1 z P1) (P1 + P2)
    const CMatrix z = kron(i2, CMatrix::diag_real({0.1, 0.9}));
    CHECK(frob_distance(eps.apply(z), trace_of_product(eta, qq * z * qq) * i2) < 1e-12);
    CHECK(rep.evenness <= 1e-10);
}

TEST_CASE("builders reject invalid blocks") {
    const CMatrix i2 = CMatrix::identity(2);
    CMatrix odd = 0.25 * CMatrix::identity(4);
    odd(0, 1) = odd(1, 0) = 0.05;  // mode-1 odd entry
    CHECK_THROWS_AS(build_block(single(i2, full_corner(i2), odd), 1), FermiError);
    CHECK_THROWS_AS(build_block(single(i2, full_corner(i2), 0.5 * CMatrix::identity(4)), 1), FermiError);
    const CMatrix a = annihilator(1, 0);
    const CMatrix q = 0.5 * (i2 + a + a.adjoint());
    CHECK_THROWS_AS(build_block(single(q, scalars(q), 0.5 * kron(q, i2)), 1), FermiError);
    const auto b = build_block(single(i2, scalars(i2), 0.25 * CMatrix::identity(4)), 1);
    CHECK_THROWS_AS(assemble({b, b}, 1, 1), FermiError);
}

TEST_CASE("lift acts as x eps(y)") {
    const CMatrix i4 = CMatrix::identity(4);
    const CMatrix a1 = annihilator(2, 0);
    const auto eps = assemble({build_block(single(i4, gen({a1, a1.adjoint()}, i4), even_two_site_density(4)), 2)}, 2, 2);
    // window: one extra site of two modes on the left
    const ChainWindow w = ChainWindow::uniform(0, 2, 2);
    const CMatrix x = annihilator(w, 0, 1);  // odd, left factor
    for (int k = 0; k < 4; ++k) {
        const CMatrix y = even_part(annihilator(w, 1, k % 2) * creator(w, 2, k / 2) + creator(w, 2, 1) * annihilator(w, 2, 0));
        const CMatrix lhs = lift_apply(eps, x * y, 4);
        // x eps(y): eps(y) lives on sites [0,1] of the lifted window
        const CMatrix epsy = lift_apply(eps, y, 4);
        const ChainWindow w2 = ChainWindow::uniform(0, 1, 2);
        CHECK(frob_distance(lhs, annihilator(w2, 0, 1) * epsy) < 1e-9);
    }
    CHECK(frob_distance(lift_apply(eps, CMatrix::identity(64), 4), CMatrix::identity(16)) < 1e-12);
    // dual consistency
    const CMatrix t = CMatrix::diag_real({1, 2, 3, 4, 5, 6, 7, 8, 1, 2, 3, 4, 5, 6, 7, 8});
    const CMatrix y = annihilator(w, 2, 0).adjoint() * annihilator(w, 1, 1) + CMatrix::identity(64);
    CHECK(std::abs(trace_of_product(t, lift_apply(eps, y, 4)) - trace_of_product(lift_dual(eps, t, 4), y)) < 1e-10);
}

TEST_CASE("ergodic average examples") {
    // idempotent input
    const CMatrix i2 = CMatrix::identity(2);
    const auto eps = assemble({build_block(single(i2, scalars(i2), 0.25 * CMatrix::identity(4)), 1)}, 1, 1);
    const SuperOp e0{2, eps.averaging_superop()};
    auto r = ergodic_average(e0);
    CHECK(frob_distance(r.expectation.s, e0.s) < 1e-10);

    // Ad_U with spectrum {1, i, -1, -i}
    const CMatrix u = CMatrix::diag({1.0, cplx(0, 1), -1.0, cplx(0, -1)});
    const SuperOp ad = superop_from_map(4, [&](const CMatrix& x) { return u * x * u.adjoint(); });
    r = ergodic_average(ad);
    SuperOp avg = superop_identity(4);
    SuperOp pw = ad;
    for (int k = 1; k < 4; ++k) {
        avg.s += pw.s;
        pw = compose(ad, pw);
    }
    avg.s *= 0.25;
    CHECK(frob_distance(r.expectation.s, avg.s) < 1e-10);
    CHECK(r.fixed_points.dim() == 4);
    auto rep = verify_square_expectation(r.expectation, r.fixed_points);
    CHECK(rep.passes(1e-9));

    // (id + Ad_V)/2 -> even part
    const CMatrix v = parity_unitary(2);
    const SuperOp half = superop_from_map(4, [&](const CMatrix& x) { return 0.5 * (x + v * x * v); });
    r = ergodic_average(half);
    const CMatrix x = annihilator(2, 1) + matrix_unit(2, 0, 1, 1);
    CHECK(frob_distance(r.expectation.apply(x), even_part(x)) < 1e-10);
    rep = verify_square_expectation(r.expectation, r.fixed_points);
    CHECK(rep.passes(1e-9));
}

TEST_CASE("ergodic average rejects Jordan blocks") {
    SuperOp j;
    j.n = 2;
    j.s = CMatrix::identity(4);
    j.s(0, 1) = 1.0;
    CHECK_THROWS_AS(ergodic_average(j), FermiError);
}
