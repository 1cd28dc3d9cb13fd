#pragma once
// Small chains shared by the unit tests.

#include "fermichain/algebra.hpp"
#include "fermichain/car.hpp"
#include "fermichain/markov.hpp"
#include "fermichain/transition.hpp"

namespace fixtures {

using namespace fermichain;

// one-mode classical chain: N_w = C e_ww, block state e_ww (x) diag(P[w])
inline TransitionExpectation classical_chain(const double p[2][2]) {
    std::vector<BuiltBlock> blocks;
    for (int w = 0; w < 2; ++w) {
        const CMatrix e = CMatrix::unit(2, std::size_t(w), std::size_t(w));
        blocks.push_back(build_block({OrbitKind::Single, e, scalars(e), kron(e, CMatrix::diag_real({p[w][0], p[w][1]}))}, 1));
    }
    return assemble(blocks, 1, 1);
}

inline CMatrix even_density(int modes, double skew) {
    const std::size_t D = std::size_t(1) << modes;
    CMatrix r(D);
    const auto s = parity_signs(modes);
    for (std::size_t i = 0; i < D; ++i) {
        r(i, i) = 1.0 + skew * double(i);
        for (std::size_t j = i + 1; j < D; ++j)
            if (s[i] == s[j]) {
                r(i, j) = cplx(0.02 * double(i + 1), -0.01 * double(j));
                r(j, i) = std::conj(r(i, j));
            }
    }
    r *= 1.0 / r.trace().real();
    return r;
}

// two-mode sites, N = alg(a_1) (x) e-corner: single block over the identity
inline TransitionExpectation two_mode_chain() {
    const CMatrix id = CMatrix::identity(4);
    const MatrixSubalgebra n = algebra_closure({annihilator(2, 0)}, id);
    return assemble({build_block({OrbitKind::Single, id, n, even_density(4, 0.13)}, 2)}, 2, 2);
}

}  // namespace fixtures
