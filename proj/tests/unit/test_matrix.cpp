#include <cmath>

#include "doctest.h"
#include "fermichain/errors.hpp"
#include "fermichain/matrix.hpp"

using namespace fermichain;

namespace {

CMatrix random_hermitian(std::size_t n, unsigned seed) {
    // small LCG, enough for test inputs
    unsigned long long s = seed * 6364136223846793005ULL + 1442695040888963407ULL;
    auto next = [&] {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        return double((s >> 11) & ((1ULL << 52) - 1)) / double(1ULL << 52) - 0.5;
    };
    CMatrix a(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const cplx v = i == j ? cplx(next(), 0) : cplx(next(), next());
            a(i, j) = v;
            a(j, i) = std::conj(v);
        }
    return a;
}

}  // namespace

TEST_CASE("kron index formula") {
    CHECK(kron(CMatrix::identity(2), CMatrix::identity(2)).entries() == CMatrix::identity(4).entries());
    const CMatrix z = CMatrix::diag_real({1, -1});
    CHECK(kron(z, CMatrix::identity(2)).entries() == CMatrix::diag_real({1, 1, -1, -1}).entries());
    // e12 (x) e21: entry (i*2+k, j*2+l) = a_ij b_kl, only i=0,j=1,k=1,l=0 survives
    const CMatrix k = kron(CMatrix::unit(2, 0, 1), CMatrix::unit(2, 1, 0));
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) CHECK(k(r, c) == cplx((r == 1 && c == 2) ? 1.0 : 0.0, 0.0));
}

TEST_CASE("kron is associative and multiplicative") {
    // dyadic entries keep every product exact, so equality is bitwise
    auto dyadic = [](std::size_t n, int shift) {
        CMatrix m(n);
        for (std::size_t i = 0; i < n * n; ++i) m.data()[i] = cplx(double(int(i) - shift) / 4.0, double(shift - 2 * int(i)) / 8.0);
        return m;
    };
    CHECK(kron(kron(dyadic(2, 1), dyadic(3, 2)), dyadic(2, 3)).entries() ==
          kron(dyadic(2, 1), kron(dyadic(3, 2), dyadic(2, 3))).entries());
    const CMatrix a = random_hermitian(2, 1), b = random_hermitian(3, 2);
    const CMatrix d = random_hermitian(2, 4), e = random_hermitian(3, 5);
    CHECK(frob_distance(kron(a, b) * kron(d, e), kron(a * d, b * e)) < 1e-13);
}

TEST_CASE("herm_eig examples") {
    auto e = herm_eig(CMatrix::diag_real({2, 1}));
    CHECK(e.values[0] == doctest::Approx(1.0));
    CHECK(e.values[1] == doctest::Approx(2.0));
    CHECK(std::abs(std::abs(e.vectors(1, 0)) - 1.0) < 1e-14);

    CMatrix x(2);
    x(0, 1) = x(1, 0) = 1.0;
    e = herm_eig(x);
    CHECK(e.values[0] == doctest::Approx(-1.0));
    CHECK(e.values[1] == doctest::Approx(1.0));
    // eigenvector of -1 is (1,-1)/sqrt2 up to phase
    CHECK(std::abs(e.vectors(0, 0) + e.vectors(1, 0)) < 1e-12);
    CHECK(std::abs(std::abs(e.vectors(0, 0)) - 1.0 / std::sqrt(2.0)) < 1e-12);

    e = herm_eig(CMatrix::identity(5));
    for (double v : e.values) CHECK(v == doctest::Approx(1.0));
    CHECK(e.vectors.is_unitary(1e-12));
}

TEST_CASE("herm_eig reconstruction on random inputs") {
    for (std::size_t n : {3u, 17u, 64u, 256u}) {
        const CMatrix a = random_hermitian(n, unsigned(n));
        const auto e = herm_eig(a);
        CMatrix rec = e.vectors * CMatrix::diag_real(e.values) * e.vectors.adjoint();
        CHECK(frob_distance(rec, a) <= 1e-10 * double(n) * a.frob());
        CHECK(frob_distance(e.vectors.adjoint() * e.vectors, CMatrix::identity(n)) <= 1e-11 * double(n));
        for (std::size_t i = 1; i < n; ++i) CHECK(e.values[i - 1] <= e.values[i]);
        // deterministic
        CHECK(herm_eig(a).vectors.entries() == e.vectors.entries());
    }
}

TEST_CASE("herm_eig rejects non-Hermitian input") {
    CMatrix a(2);
    a(0, 1) = 1.0;
    CHECK_THROWS_AS(herm_eig(a), FermiError);
}

TEST_CASE("mat_func examples") {
    CHECK(frob_distance(mat_func(CMatrix::identity(3), MatFunc::PowerIt, 0.7), CMatrix::identity(3)) < 1e-14);
    const double e1 = std::exp(1.0);
    CHECK(frob_distance(mat_func(CMatrix::diag_real({e1, e1 * e1}), MatFunc::Log), CMatrix::diag_real({1, 2})) < 1e-13);
    const CMatrix p = mat_func(CMatrix::diag_real({4, 1}), MatFunc::PowerIt, 0.5);
    CHECK(std::abs(p(0, 0) - cplx(std::cos(std::log(2.0)), std::sin(std::log(2.0)))) < 1e-14);
    CHECK(std::abs(p(1, 1) - 1.0) < 1e-14);
    // kernel convention 0^{it} = 0
    const CMatrix q = mat_func(CMatrix::diag_real({1, 0}), MatFunc::PowerIt, 0.3);
    CHECK(std::abs(q(1, 1)) == 0.0);
    CHECK_THROWS_AS(mat_func(CMatrix::diag_real({1, -1}), MatFunc::Log), FermiError);
}

TEST_CASE("power_it is unitary for faithful input") {
    CMatrix a = random_hermitian(12, 9);
    a = a * a + 0.1 * CMatrix::identity(12);
    const CMatrix u = mat_func(a, MatFunc::PowerIt, 1.3);
    CHECK(frob_distance(u * u.adjoint(), CMatrix::identity(12)) < 1e-10);
}

TEST_CASE("nullspace examples") {
    // [x, c] = 0 as a constraint on vec(x): one row per entry of the commutator
    auto commutator_rows = [](const CMatrix& c) {
        std::vector<std::vector<cplx>> rows;
        const std::size_t n = c.rows();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                std::vector<cplx> r(n * n);
                for (std::size_t k = 0; k < n; ++k) {
                    r[i + k * n] += c(k, j);  // (x c)_ij
                    r[k + j * n] -= c(i, k);  // (c x)_ij
                }
                rows.push_back(r);
            }
        return rows;
    };
    CHECK(nullspace(commutator_rows(CMatrix::identity(2)), 4).size() == 4);
    auto ns = nullspace(commutator_rows(CMatrix::diag_real({1, -1})), 4);
    CHECK(ns.size() == 2);
    for (const auto& v : ns) {
        // only diagonal entries of x: vec indices 0 and 3
        CHECK(std::abs(v[1]) < 1e-12);
        CHECK(std::abs(v[2]) < 1e-12);
    }
    auto r1 = commutator_rows(CMatrix::unit(2, 0, 1));
    auto r2 = commutator_rows(CMatrix::unit(2, 1, 0));
    r1.insert(r1.end(), r2.begin(), r2.end());
    ns = nullspace(r1, 4);
    REQUIRE(ns.size() == 1);
    CHECK(std::abs(ns[0][0] - ns[0][3]) < 1e-12);
    for (const auto& row : r1) {
        cplx acc = 0;
        for (std::size_t k = 0; k < 4; ++k) acc += row[k] * ns[0][k];
        CHECK(std::abs(acc) <= 1e-10);
    }
}

TEST_CASE("orthonormalize does not keep rounding noise of a nearly dependent element") {
    const auto b = orthonormalize({random_hermitian(6, 1), random_hermitian(6, 2), random_hermitian(6, 3)});
    REQUIRE(b.size() == 3);
    // the third input differs from b[0] by 3e-9 b[2]; its residual is mostly rounding
    const auto out = orthonormalize({b[0], b[1], b[0] + 3e-9 * b[2], b[2]});
    CHECK(out.size() == 3);
    for (const auto& x : out) {
        double in_span = 0;
        for (const auto& y : b) in_span += std::norm(hs_inner(y, x));
        CHECK(std::abs(in_span - 1.0) < 1e-12);
    }
    // orthogonal inputs keep their order
    const auto same = orthonormalize({b[2], b[0], b[1]});
    CHECK(frob_distance(same[0], b[2]) < 1e-14);
    CHECK(frob_distance(same[1], b[0]) < 1e-14);
}
