#include <cmath>

#include "doctest.h"
#include "fermichain/algebra.hpp"
#include "fermichain/car.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/markov.hpp"
#include "fixtures.hpp"

using namespace fermichain;
using namespace fixtures;

TEST_CASE("product chain: marginal is the tensor power of the block state") {
    const CMatrix r = CMatrix::diag_real({0.7, 0.3});
    const CMatrix i2 = CMatrix::identity(2);
    const auto eps = assemble({build_block({OrbitKind::Single, i2, full_corner(i2), kron(0.5 * i2, r)}, 1)}, 1, 1);
    const auto st = stationary_state(eps);
    CHECK(st.unique);
    CHECK(frob_distance(st.rho, r) < 1e-12);
    const MarkovSpec spec = homogeneous_spec(eps, std::nullopt);
    validate_spec(spec);
    const CMatrix expect = 8.0 * kron(kron(r, r), r);
    CHECK(frob_distance(marginal_density(spec, 0, 2), expect) < 1e-12);
    CHECK(frob_distance(marginal_density_dual(spec, 0, 2), expect) < 1e-12);
    CHECK(frob_distance(marginal_density(spec, 3, 4), 4.0 * kron(r, r)) < 1e-12);
}

TEST_CASE("trace chain: every marginal is the trace") {
    const CMatrix i2 = CMatrix::identity(2);
    const auto eps = assemble({build_block({OrbitKind::Single, i2, scalars(i2), 0.25 * CMatrix::identity(4)}, 1)}, 1, 1);
    const MarkovSpec spec = homogeneous_spec(eps, std::nullopt);
    CHECK(frob_distance(marginal_density(spec, 0, 3), CMatrix::identity(16)) < 1e-12);
}

TEST_CASE("classical chain: joint law, classical data and decomposition") {
    const double p[2][2] = {{0.9, 0.1}, {0.3, 0.7}};
    const MarkovSpec spec = homogeneous_spec(classical_chain(p), std::nullopt);
    CHECK(spec.stationary_initial);
    CHECK(frob_distance(spec.rho, CMatrix::diag_real({0.75, 0.25})) < 1e-12);

    // independent joint law of three sites
    const double pi[2] = {0.75, 0.25};
    std::vector<double> joint(8);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) joint[std::size_t(a * 4 + b * 2 + c)] = pi[a] * p[a][b] * p[b][c];
    const CMatrix expect = 8.0 * CMatrix::diag_real(joint);
    CHECK(frob_distance(marginal_density(spec, 0, 2), expect) < 1e-12);
    CHECK(frob_distance(marginal_density(spec, 5, 7), expect) < 1e-12);

    const auto cm = extract_classical(spec, 0, 2);
    REQUIRE(cm.sites.size() == 3);
    REQUIRE(cm.transitions.size() == 2);
    // central projections come in some order; match by the diagonal
    for (std::size_t x = 0; x < 2; ++x) {
        const int ax = cm.sites[0].q[x](0, 0).real() > 0.5 ? 0 : 1;
        CHECK(std::abs(cm.sites[0].pi[x] - pi[ax]) < 1e-12);
        for (std::size_t y = 0; y < 2; ++y) {
            const int by = cm.sites[1].q[y](0, 0).real() > 0.5 ? 0 : 1;
            CHECK(std::abs(cm.transitions[0][x][y] - p[ax][by]) < 1e-12);
        }
    }
    CHECK(cm.row_sum_residual < 1e-12);
    CHECK(cm.compat_residual < 1e-12);

    const auto dec = decompose(spec, 0, 2);
    CHECK(dec.components.size() == 8);
    CHECK(std::abs(dec.weight_sum - 1.0) < 1e-12);
    CHECK(dec.weight_residual < 1e-12);
    CHECK(dec.reconstruction_residual < 1e-12);

    const auto se = strongly_even_density(spec, 0, 2);
    CHECK(frob_distance(se.density, expect) < 1e-12);
    CHECK(se.trace_product_residual < 1e-12);

    const auto dg = diagonal_subalgebra(spec, 0, 2);
    CHECK(dg.minimal_projections.size() == 8);
    CHECK(dg.maximal_abelian);
    CHECK(dg.even);
    CHECK(dg.expectation_residual < 1e-10);
    CHECK(dg.markov_residual < 1e-12);
    CHECK(dg.entropy_pinched >= dg.entropy_full - 1e-12);
}

TEST_CASE("degenerate fixed space: maximum entropy stationary state") {
    const double p[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
    const auto st = stationary_state(classical_chain(p));
    CHECK(st.fixed_dim == 2);
    CHECK_FALSE(st.unique);
    CHECK(frob_distance(st.rho, CMatrix::diag_real({0.5, 0.5})) < 1e-8);
}

TEST_CASE("two-mode sites: both marginal paths agree and nest") {
    const auto eps = two_mode_chain();
    const CMatrix rho0 = CMatrix::diag_real({0.4, 0.1, 0.3, 0.2});
    const MarkovSpec spec = homogeneous_spec(eps, rho0);
    validate_spec(spec);
    const CMatrix t = marginal_density(spec, 0, 2);
    CHECK(frob_distance(t, marginal_density_dual(spec, 0, 2)) < 1e-11);
    CHECK(oddness(t) < 1e-12);
    CHECK(std::abs(tau(t) - 1.0) < 1e-12);
    // compatibility: dropping the last site of [0,2] gives [0,1]
    const CMatrix t01 = marginal_density(spec, 0, 1);
    CHECK(frob_distance((1.0 / 4.0) * partial_trace_last(t, 16, 4), t01) < 1e-11);
    // first site of [0,1]: density of x -> rho0(eps(x (x) I)), entry by entry
    CMatrix site(4);
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b)
            site(b, a) = trace_of_product(rho0, eps.apply(kron(CMatrix::unit(4, a, b), CMatrix::identity(4))));
    CHECK(frob_distance((1.0 / 16.0) * partial_trace_last(t01, 4, 4), site) < 1e-12);

    const auto se = strongly_even_density(spec, 0, 2);
    CHECK(frob_distance(se.density, t) < 1e-10);
    CHECK(se.trace_product_residual < 1e-10);
}

TEST_CASE("rebuilding from block data reproduces the marginals") {
    const MarkovSpec spec = homogeneous_spec(two_mode_chain(), CMatrix::diag_real({0.4, 0.1, 0.3, 0.2}));
    const MarkovSpec back = build_from_blocks(extract_blocks(spec));
    CHECK(frob_distance(marginal_density(back, 0, 2), marginal_density(spec, 0, 2)) < 1e-10);

    const double p[2][2] = {{0.9, 0.1}, {0.3, 0.7}};
    const MarkovSpec c = homogeneous_spec(classical_chain(p), std::nullopt);
    const MarkovSpec cb = build_from_blocks(extract_blocks(c));
    CHECK(frob_distance(marginal_density(cb, 0, 3), marginal_density(c, 0, 3)) < 1e-10);
}

TEST_CASE("block data errors") {
    const double p[2][2] = {{0.9, 0.1}, {0.3, 0.7}};
    BlockData d = extract_blocks(homogeneous_spec(classical_chain(p), std::nullopt));
    BlockData bad = d;
    bad.transitions[0][0][0] = 0.5;
    CHECK_THROWS_AS(build_from_blocks(bad), FermiError);
    // zero transition leaves the block state unfaithful
    BlockData unf = d;
    unf.transitions[0][0] = {1.0, 0.0};
    try {
        build_from_blocks(unf);
        CHECK(false);
    } catch (const FermiError& e) {
        CHECK(e.code() == "NotFaithfulBlock");
    }
}

TEST_CASE("window limits") {
    const MarkovSpec spec = homogeneous_spec(two_mode_chain(), CMatrix::diag_real({0.4, 0.1, 0.3, 0.2}));
    try {
        marginal_density(spec, 0, 4);
        CHECK(false);
    } catch (const FermiError& e) {
        CHECK(e.code() == "WindowTooLarge");
    }
    CHECK_THROWS_AS(marginal_density(spec, 0, 4, 11), FermiError);

    const auto eps = two_mode_chain();
    const MarkovSpec chain = chain_spec({eps, eps}, CMatrix::diag_real({0.4, 0.1, 0.3, 0.2}));
    CHECK_NOTHROW(marginal_density(chain, 0, 1));
    CHECK_THROWS_AS(marginal_density(chain, 0, 2), FermiError);
    // non-homogeneous chain with equal bonds matches the homogeneous one
    CHECK(frob_distance(marginal_density(chain, 0, 1), marginal_density(spec, 0, 1)) < 1e-12);
}

TEST_CASE("center blocks reproduce the dense marginal") {
    const double p[2][2] = {{0.9, 0.1}, {0.3, 0.7}};
    const MarkovSpec c = homogeneous_spec(classical_chain(p), std::nullopt);
    const auto bm = marginal_blocks(c, 1, 3);
    CHECK(bm.blocks.size() == 8);
    CHECK(bm.max_block == 1);
    CHECK(std::abs(bm.trace - 1.0) < 1e-12);
    const CMatrix t = marginal_density(c, 1, 3);
    double s = 0;
    for (const auto& b : bm.blocks) s += entropy_of(b.block);
    CHECK(std::abs(s - entropy_of((1.0 / 8.0) * t)) < 1e-12);
    // well beyond the dense budget: 12 one-dimensional blocks deep
    CHECK_NOTHROW(marginal_blocks(c, 0, 11));

    const MarkovSpec spec = homogeneous_spec(two_mode_chain(), CMatrix::diag_real({0.4, 0.1, 0.3, 0.2}));
    const MarkovLocalState st(spec);
    const CMatrix t2 = marginal_density(spec, 0, 2);
    CHECK(std::abs(st.window_entropy(0, 2) - entropy_of((1.0 / 64.0) * t2)) < 1e-10);
    CHECK(std::abs(st.LocalState::window_entropy(0, 2) - st.window_entropy(0, 2)) < 1e-10);
}
