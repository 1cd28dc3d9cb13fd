#include "fermichain/markov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fermichain/errors.hpp"
#include "fermichain/tolerance.hpp"

namespace fermichain {

// ---------------------------------------------------------------- spec

const TransitionExpectation& MarkovSpec::bond(int j) const {
    if (bonds.empty()) fail("InvalidSpec", "no transition expectation");
    if (j < 0) fail("SiteOutOfRange", "negative site");
    if (homogeneous) return bonds.front();
    if (std::size_t(j) >= bonds.size()) fail("SiteOutOfRange", "bond " + std::to_string(j) + " beyond the chain");
    return bonds[std::size_t(j)];
}

int MarkovSpec::site_modes(int j) const {
    if (bonds.empty()) fail("InvalidSpec", "no transition expectation");
    if (j < 0) fail("SiteOutOfRange", "negative site");
    if (homogeneous) return bonds.front().left_modes();
    if (std::size_t(j) < bonds.size()) return bonds[std::size_t(j)].left_modes();
    if (std::size_t(j) == bonds.size()) return bonds.back().right_modes();
    fail("SiteOutOfRange", "site " + std::to_string(j) + " beyond the chain");
}

int MarkovSpec::last_site() const { return homogeneous ? (1 << 20) : int(bonds.size()) - 1; }

ChainWindow MarkovSpec::window(int k, int l) const {
    std::vector<SiteSpec> s;
    for (int j = k; j <= l; ++j) s.push_back({j, site_modes(j)});
    return ChainWindow(s);
}

CMatrix partial_trace_last(const CMatrix& t, std::size_t keep, std::size_t drop) {
    if (t.rows() != keep * drop) fail("BadShape", "partial trace dimensions");
    CMatrix out(keep);
    for (std::size_t i = 0; i < keep; ++i)
        for (std::size_t j = 0; j < keep; ++j) {
            cplx acc = 0;
            for (std::size_t r = 0; r < drop; ++r) acc += t(i * drop + r, j * drop + r);
            out(i, j) = acc;
        }
    return out;
}

CMatrix partial_trace_first(const CMatrix& t, std::size_t drop, std::size_t keep) {
    if (t.rows() != keep * drop) fail("BadShape", "partial trace dimensions");
    CMatrix out(keep);
    for (std::size_t r = 0; r < drop; ++r)
        for (std::size_t i = 0; i < keep; ++i)
            for (std::size_t j = 0; j < keep; ++j) out(i, j) += t(r * keep + i, r * keep + j);
    return out;
}

double entropy_of(const CMatrix& rho) {
    double s = 0;
    for (double l : herm_eigenvalues(rho))
        if (l > 0) s -= l * std::log(l);
    return s;
}

namespace {

double min_eigenvalue(const CMatrix& a) {
    auto ev = herm_eigenvalues(a);
    return ev.empty() ? 0.0 : ev.front();
}

std::size_t ipow4(int m) { return std::size_t(1) << (2 * m); }

int matrix_side(std::size_t dim) {
    const auto n = std::size_t(std::llround(std::sqrt(double(dim))));
    if (n * n != dim) fail("NotFactor", "algebra is not a full matrix algebra");
    return int(n);
}

void check_window(const MarkovSpec& spec, int k, int l, int budget) {
    if (k < 0 || l < k) fail("SiteOutOfRange", "window [" + std::to_string(k) + "," + std::to_string(l) + "] is empty");
    if (l > spec.last_site())
        fail("SiteOutOfRange", "window edge " + std::to_string(l) + " needs a bond beyond the chain");
    if (budget > kMaxModeBudget) fail("WindowTooLarge", "mode budget above " + std::to_string(kMaxModeBudget));
    int modes = 0;
    for (int j = k; j <= l; ++j) modes += spec.site_modes(j);
    if (modes > budget)
        fail("WindowTooLarge", std::to_string(modes) + " modes exceed the budget of " + std::to_string(budget));
}

// F*(rho) for the transfer map z -> eps(alpha(z))
CMatrix transfer_dual(const CMatrix& t, const CMatrix& rho) {
    const std::size_t d = rho.rows();
    // tr(rho X) = vec(rho^T) . vec(X), so vec(F*(rho)^T) = T^T vec(rho^T)
    const auto v = vec(rho.transpose());
    std::vector<cplx> w(d * d);
    for (std::size_t i = 0; i < d * d; ++i) {
        cplx acc = 0;
        for (std::size_t j = 0; j < d * d; ++j) acc += t(j, i) * v[j];
        w[i] = acc;
    }
    return unvec(w, d, d).transpose();
}

}  // namespace

// ---------------------------------------------------------------- stationary state

StationaryResult stationary_state(const TransitionExpectation& eps) {
    if (eps.d0() != eps.d1()) fail("NotHomogeneous", "stationary state needs equal site sizes");
    const std::size_t d = eps.d0();
    const CMatrix t = eps.transfer_superop();
    const SuperOp fd = superop_from_map(d, [&](const CMatrix& r) { return transfer_dual(t, r); });
    const ErgodicResult erg = ergodic_average(fd);

    std::vector<CMatrix> herm;
    for (const auto& f : erg.fixed_points.basis) {
        herm.push_back(even_part(hermitian_part(f)));
        herm.push_back(even_part(hermitian_part(cplx(0, -1) * f)));
    }
    const auto basis = orthonormalize(herm);
    if (basis.empty()) fail("NoEvenFixedState", "the transfer dual has no even fixed point");

    StationaryResult out;
    out.fixed_dim = basis.size();
    out.unique = basis.size() == 1;

    CMatrix rho = even_part(hermitian_part(erg.expectation.apply((1.0 / double(d)) * CMatrix::identity(d))));
    const double trace = rho.trace().real();
    if (std::abs(trace) < 1e-12) fail("NoEvenFixedState", "ergodic average of the trace state vanished");
    rho *= 1.0 / trace;
    if (min_eigenvalue(rho) < -tol().psd) fail("NoEvenFixedState", "no positive even fixed point found");

    if (!out.unique) {
        // maximum entropy point of the fixed states: gradient ascent inside
        // the traceless directions of the fixed space
        std::size_t pivot = 0;
        for (std::size_t i = 1; i < basis.size(); ++i)
            if (std::abs(basis[i].trace()) > std::abs(basis[pivot].trace())) pivot = i;
        std::vector<CMatrix> dirs;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            if (i == pivot) continue;
            dirs.push_back(basis[i] - (basis[i].trace() / basis[pivot].trace()) * basis[pivot]);
        }
        dirs = orthonormalize(dirs);
        double s = entropy_of(rho);
        for (int it = 0; it < 500; ++it) {
            CMatrix logr = spectral_apply(rho, [](double x) { return cplx(std::log(std::max(x, 1e-16)), 0.0); });
            CMatrix g(d);
            double gnorm2 = 0;
            for (const auto& h : dirs) {
                const double gi = -trace_of_product(h, logr).real();
                g += gi * h;
                gnorm2 += gi * gi;
            }
            if (std::sqrt(gnorm2) < 1e-12) break;
            double step = 1.0;
            bool moved = false;
            while (step > 1e-16) {
                CMatrix cand = rho + step * g;
                if (min_eigenvalue(cand) > 0) {
                    const double sc = entropy_of(cand);
                    if (sc > s) {
                        rho = hermitian_part(cand);
                        s = sc;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
    }
    out.rho = rho;
    out.fixed_residual = frob_distance(transfer_dual(t, rho), rho);
    out.entropy = entropy_of(rho);
    return out;
}

MarkovSpec homogeneous_spec(TransitionExpectation eps, const std::optional<CMatrix>& rho) {
    MarkovSpec s;
    s.homogeneous = true;
    if (rho) {
        s.rho = *rho;
    } else {
        const StationaryResult st = stationary_state(eps);
        s.rho = st.rho;
        s.stationary_initial = true;
        s.stationary_fixed_dim = st.fixed_dim;
    }
    s.bonds.push_back(std::move(eps));
    return s;
}

MarkovSpec chain_spec(std::vector<TransitionExpectation> bonds, const CMatrix& rho) {
    MarkovSpec s;
    s.homogeneous = false;
    s.bonds = std::move(bonds);
    s.rho = rho;
    return s;
}

void validate_spec(const MarkovSpec& spec) {
    if (spec.bonds.empty()) fail("InvalidSpec", "no transition expectation");
    for (std::size_t j = 0; j < spec.bonds.size(); ++j) {
        const auto& b = spec.bonds[j];
        if (!b.structure_error().empty()) fail("InvalidSpec", "bond " + std::to_string(j) + ": " + b.structure_error());
        if (spec.homogeneous && b.left_modes() != b.right_modes())
            fail("InvalidSpec", "homogeneous chain needs equal site sizes");
        if (!spec.homogeneous && j + 1 < spec.bonds.size() && b.right_modes() != spec.bonds[j + 1].left_modes())
            fail("InvalidSpec", "site sizes of consecutive bonds differ at site " + std::to_string(j + 1));
        const VerificationReport r = verify_conditional_expectation(b);
        if (!r.passes(tol().verify))
            fail("InvalidSpec", "bond " + std::to_string(j) + " is not an even conditional expectation");
    }
    const CMatrix& rho = spec.rho;
    if (rho.rows() != spec.bonds.front().d0()) fail("InvalidSpec", "initial density has the wrong size");
    if (std::abs(rho.trace() - 1.0) > tol().state_trace) fail("InvalidSpec", "initial density does not have trace 1");
    if (!rho.is_hermitian(tol().hermitian) || min_eigenvalue(rho) < -tol().psd)
        fail("InvalidSpec", "initial density is not positive");
    if (!density_is_even(rho, tol().theta)) fail("InvalidSpec", "initial density is not even");
}

CMatrix site_state(const MarkovSpec& spec, int k) {
    if (k < 0) fail("SiteOutOfRange", "negative site");
    CMatrix rho = spec.rho;
    if (spec.homogeneous && spec.stationary_initial) return rho;
    for (int j = 0; j < k; ++j) {
        const auto& b = spec.bond(j);
        rho = partial_trace_first(b.dual(rho), b.d0(), b.d1());
    }
    return rho;
}

// ---------------------------------------------------------------- marginals

namespace {

struct Nonzero {
    std::size_t p, q;
    cplx v;
};

std::vector<std::vector<Nonzero>> local_monomials(int modes) {
    const std::size_t count = ipow4(modes);
    std::vector<std::vector<Nonzero>> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        const CMatrix b = tensor_monomial(monomial_digits(i, modes));
        for (std::size_t p = 0; p < b.rows(); ++p)
            for (std::size_t q = 0; q < b.cols(); ++q)
                if (b(p, q) != cplx(0.0, 0.0)) out[i].push_back({p, q, b(p, q)});
    }
    return out;
}

// eps(b (x) y) for a local monomial b; st is the transposed superoperator.
// y empty means the identity.
void apply_kron(const CMatrix& st, std::size_t d0, std::size_t d1, const std::vector<Nonzero>& b, const cplx* y,
                cplx* out) {
    const std::size_t D = d0 * d1, n0 = d0 * d0;
    std::fill(out, out + n0, cplx(0.0, 0.0));
    for (const auto& nz : b)
        for (std::size_t r = 0; r < d1; ++r)
            for (std::size_t s = 0; s < d1; ++s) {
                cplx yv;
                if (y == nullptr) {
                    if (r != s) continue;
                    yv = 1.0;
                } else {
                    yv = y[r * d1 + s];
                    if (yv == cplx(0.0, 0.0)) continue;
                }
                const cplx f = nz.v * yv;
                const std::size_t col = (nz.p * d1 + r) + (nz.q * d1 + s) * D;
                const cplx* row = st.data() + col * n0;
                for (std::size_t idx = 0; idx < n0; ++idx) out[idx] += f * row[idx];
            }
}

}  // namespace

CMatrix marginal_density(const MarkovSpec& spec, int k, int l, int budget) {
    check_window(spec, k, l, budget);
    // Y_j[b_j..b_l] = eps_j(b_j (x) Y_{j+1}[b_{j+1}..b_l]); the Jordan-Wigner
    // strings of odd factors cancel pairwise inside the nested expectations
    std::vector<cplx> cur;  // flattened row-major site matrices, column-major vec per eps output
    std::size_t cur_count = 0, cur_dim = 0;
    for (int j = l; j >= k; --j) {
        const auto& eps = spec.bond(j);
        const std::size_t d0 = eps.d0(), d1 = eps.d1(), n0 = d0 * d0;
        const CMatrix st = eps.superop().transpose();
        const auto mons = local_monomials(eps.left_modes());
        std::vector<cplx> next;
        std::vector<cplx> yrow(d1 * d1);
        if (j == l) {
            next.assign(mons.size() * n0, 0.0);
            for (std::size_t b = 0; b < mons.size(); ++b) apply_kron(st, d0, d1, mons[b], nullptr, &next[b * n0]);
            cur_count = mons.size();
        } else {
            if (cur_dim != d1) fail("InvalidSpec", "site sizes of consecutive bonds differ");
            next.assign(mons.size() * cur_count * n0, 0.0);
            for (std::size_t b = 0; b < mons.size(); ++b)
                for (std::size_t s = 0; s < cur_count; ++s) {
                    // cur stores column-major vec of eps outputs; convert to row-major
                    const cplx* v = &cur[s * d1 * d1];
                    for (std::size_t r = 0; r < d1; ++r)
                        for (std::size_t c = 0; c < d1; ++c) yrow[r * d1 + c] = v[r + c * d1];
                    apply_kron(st, d0, d1, mons[b], yrow.data(), &next[(b * cur_count + s) * n0]);
                }
            cur_count *= mons.size();
        }
        cur.swap(next);
        cur_dim = d0;
    }

    const CMatrix rho = site_state(spec, k);
    const std::size_t d = cur_dim;
    const ChainWindow w = spec.window(k, l);
    const int m = w.total_modes();
    std::vector<cplx> coeff(cur_count, 0.0);
    const double odd_tol = tol().theta;
    for (std::size_t idx = 0; idx < cur_count; ++idx) {
        const cplx* v = &cur[idx * d * d];
        cplx phi = 0;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) phi += rho(b, a) * v[a + b * d];
        auto digits = monomial_digits(idx, m);
        int odd = 0;
        for (auto& dg : digits) {
            if (dg >= 2) {
                odd ^= 1;
                dg = dg == 2 ? 3 : 2;  // adjoint monomial
            }
        }
        if (odd && std::abs(phi) > odd_tol)
            fail("NotEven", "odd monomial with expectation " + std::to_string(std::abs(phi)));
        coeff[monomial_index(digits)] = phi / monomial_norm2(digits);
    }
    CMatrix t = hermitian_part(from_monomial_coefficients(coeff, m));
    if (min_eigenvalue(t) < -tol().not_positive) fail("NotPositive", "marginal density has a negative eigenvalue");
    return t;
}

CMatrix marginal_density_dual(const MarkovSpec& spec, int k, int l, int budget) {
    check_window(spec, k, l, budget);
    CMatrix t = site_state(spec, k);
    std::size_t left = 1;
    for (int j = k; j <= l; ++j) {
        const auto& eps = spec.bond(j);
        t = lift_dual(eps, t, left);
        left *= eps.d0();
    }
    const std::size_t last = spec.bond(l).d1();
    CMatrix r = partial_trace_last(t, left, last);
    return double(left) * hermitian_part(r);
}

CMatrix MarkovLocalState::window_density(int k, int l) const { return marginal_density(spec_, k, l, budget_); }

double LocalState::window_entropy(int k, int l) const {
    const CMatrix t = window_density(k, l);
    return entropy_of((1.0 / double(t.rows())) * t);
}

double MarkovLocalState::window_entropy(int k, int l) const {
    double s = 0;
    for (auto& b : marginal_blocks(spec_, k, l, budget_).blocks) {
        // the state is even: cross-parity entries are rounding, and zeroing
        // them lets the eigensolver split the block in two
        for (std::size_t i = 0; i < b.block.rows(); ++i)
            for (std::size_t j = 0; j < b.block.cols(); ++j)
                if (b.parity[i] != b.parity[j]) b.block(i, j) = 0.0;
        s += entropy_of(b.block);
    }
    return s;
}

// ---------------------------------------------------------------- center blocks

namespace {

const CentralData& central_of(const MarkovSpec& spec, int j);

// Columns spanning the range of each Q_omega. Q is even, so its even part
// drops only rounding and the eigensolver splits it by parity: every
// column is a parity eigenvector.
std::vector<CMatrix> label_isometries(const CentralData& cd, std::vector<std::vector<int>>* parity = nullptr) {
    std::vector<CMatrix> out;
    for (const auto& q : cd.q_projections) {
        const HermEig e = herm_eig(even_part(hermitian_part(q)));
        const auto signs = parity_signs(modes_of_dim(q.rows()));
        std::vector<std::size_t> cols;
        for (std::size_t i = 0; i < e.values.size(); ++i)
            if (e.values[i] > 0.5) cols.push_back(i);
        CMatrix u(q.rows(), cols.size());
        std::vector<int> par;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            std::size_t top = 0;
            for (std::size_t r = 0; r < q.rows(); ++r) {
                u(r, c) = e.vectors(r, cols[c]);
                if (std::abs(u(r, c)) > std::abs(u(top, c))) top = r;
            }
            par.push_back(signs[top]);
        }
        if (parity) parity->push_back(std::move(par));
        out.push_back(std::move(u));
    }
    return out;
}

CMatrix compress(const CMatrix& x, const CMatrix& w) { return w.adjoint() * x * w; }

// images of the matrix units e_ab of the range of u under
// sigma -> W* eps*(u sigma u*) W (W = u (x) v), or, without v, under the
// averaged last-site map sigma -> u* Tr_2 eps*(u sigma u*) u
std::vector<CMatrix> unit_images(const TransitionExpectation& eps, const CMatrix& u, const CMatrix* v) {
    const std::size_t r = u.cols();
    std::vector<CMatrix> out;
    out.reserve(r * r);
    const CMatrix w = v ? kron(u, *v) : CMatrix();
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < r; ++b) {
            const CMatrix x = u * CMatrix::unit(r, a, b) * u.adjoint();
            const CMatrix y = eps.dual(x);
            out.push_back(v ? compress(y, w) : compress(partial_trace_last(y, eps.d0(), eps.d1()), u));
        }
    return out;
}

// new(P, x; Q, y) = sum_ab B(P, a; Q, b) K_ab(x, y)
CMatrix apply_units(const CMatrix& b, std::size_t r, const std::vector<CMatrix>& k) {
    const std::size_t outer = b.rows() / r;
    const std::size_t s = k.front().rows();
    CMatrix out(outer * s);
    for (std::size_t p = 0; p < outer; ++p)
        for (std::size_t q = 0; q < outer; ++q)
            for (std::size_t a = 0; a < r; ++a)
                for (std::size_t c = 0; c < r; ++c) {
                    const cplx v = b(p * r + a, q * r + c);
                    if (v == cplx(0)) continue;
                    const CMatrix& m = k[a * r + c];
                    for (std::size_t x = 0; x < s; ++x)
                        for (std::size_t y = 0; y < s; ++y) out(p * s + x, q * s + y) += v * m(x, y);
                }
    return out;
}

}  // namespace

BlockMarginal marginal_blocks(const MarkovSpec& spec, int k, int l, int budget) {
    if (k < 0 || l < k) fail("SiteOutOfRange", "window [" + std::to_string(k) + "," + std::to_string(l) + "] is empty");
    if (l > spec.last_site())
        fail("SiteOutOfRange", "window edge " + std::to_string(l) + " needs a bond beyond the chain");
    if (budget > kMaxModeBudget) fail("WindowTooLarge", "mode budget above " + std::to_string(kMaxModeBudget));

    std::vector<std::vector<CMatrix>> iso;
    std::vector<std::vector<std::vector<int>>> par(std::size_t(l - k + 1));
    std::size_t biggest = 1;
    for (int j = k; j <= l; ++j) {
        iso.push_back(label_isometries(central_of(spec, j), &par[std::size_t(j - k)]));
        std::size_t r = 0;
        for (const auto& u : iso.back()) r = std::max(r, u.cols());
        biggest *= r;
    }
    if (biggest > (std::size_t(1) << budget))
        fail("WindowTooLarge", "center block of dimension " + std::to_string(biggest) + " exceeds the budget of " +
                                   std::to_string(budget) + " modes");

    const double zero = 1e-15;
    const CMatrix rho = site_state(spec, k);
    std::vector<CenterBlock> cur;
    for (std::size_t w = 0; w < iso[0].size(); ++w) {
        CMatrix b = hermitian_part(compress(rho, iso[0][w]));
        if (b.trace().real() > zero) cur.push_back({{int(w)}, std::move(b), {}});
    }
    for (int j = k; j < l; ++j) {
        const auto& eps = spec.bond(j);
        const auto& here = iso[std::size_t(j - k)];
        const auto& next = iso[std::size_t(j - k + 1)];
        std::vector<std::vector<std::vector<CMatrix>>> kern(here.size());
        std::vector<CenterBlock> nxt;
        for (const auto& cb : cur) {
            const auto w = std::size_t(cb.trajectory.back());
            if (kern[w].empty())
                for (const auto& v : next) kern[w].push_back(unit_images(eps, here[w], &v));
            for (std::size_t w2 = 0; w2 < next.size(); ++w2) {
                CMatrix b = apply_units(cb.block, here[w].cols(), kern[w][w2]);
                if (b.trace().real() <= zero) continue;
                auto traj = cb.trajectory;
                traj.push_back(int(w2));
                nxt.push_back({std::move(traj), std::move(b), {}});
            }
        }
        cur = std::move(nxt);
    }
    const auto& last = iso.back();
    std::vector<std::vector<CMatrix>> fin(last.size());
    BlockMarginal out;
    for (auto& cb : cur) {
        const auto w = std::size_t(cb.trajectory.back());
        if (fin[w].empty()) fin[w] = unit_images(spec.bond(l), last[w], nullptr);
        cb.block = hermitian_part(apply_units(cb.block, last[w].cols(), fin[w]));
        // basis vectors are Kronecker products of the site columns, first site most significant
        cb.parity = {1};
        for (std::size_t j = 0; j < cb.trajectory.size(); ++j) {
            std::vector<int> next;
            for (int a : cb.parity)
                for (int b : par[j][std::size_t(cb.trajectory[j])]) next.push_back(a * b);
            cb.parity = std::move(next);
        }
        out.trace += cb.block.trace().real();
        out.max_block = std::max(out.max_block, cb.block.rows());
        out.blocks.push_back(std::move(cb));
    }
    return out;
}

// ---------------------------------------------------------------- classical data

namespace {

// tr-density of the window [j, j+1] (or [j, j])
CMatrix small_window(const MarkovSpec& spec, int j, int l) {
    CMatrix t = marginal_density_dual(spec, j, l, kMaxModeBudget);
    return (1.0 / double(t.rows())) * t;
}

const CentralData& central_of(const MarkovSpec& spec, int j) {
    const auto& b = spec.bond(j);
    if (!b.structure_error().empty()) fail("InvalidSpec", b.structure_error());
    return b.central();
}

}  // namespace

ClassicalMarkovData extract_classical(const MarkovSpec& spec, int k, int l) {
    if (k < 0 || l < k || l > spec.last_site()) fail("SiteOutOfRange", "classical data window is out of range");
    ClassicalMarkovData out;
    out.first_site = k;
    const double drop = tol().weight_drop;
    for (int j = k; j <= l; ++j) {
        const auto& cd = central_of(spec, j);
        const CMatrix site = small_window(spec, j, j);
        SiteClassical sc;
        sc.site = j;
        for (std::size_t w = 0; w < cd.q_projections.size(); ++w) {
            const double pi = trace_of_product(site, cd.q_projections[w]).real();
            if (pi <= drop) {
                out.dropped.push_back({j, int(w), pi});
                continue;
            }
            sc.labels.push_back(int(w));
            sc.pi.push_back(pi);
            sc.q.push_back(cd.q_projections[w]);
        }
        out.sites.push_back(std::move(sc));
    }
    for (int j = k; j < l; ++j) {
        const auto& a = out.sites[std::size_t(j - k)];
        const auto& b = out.sites[std::size_t(j - k + 1)];
        const CMatrix pair = small_window(spec, j, j + 1);
        std::vector<std::vector<double>> tm(a.labels.size(), std::vector<double>(b.labels.size(), 0.0));
        for (std::size_t x = 0; x < a.labels.size(); ++x) {
            double row = 0;
            for (std::size_t y = 0; y < b.labels.size(); ++y) {
                tm[x][y] = trace_of_product(pair, kron(a.q[x], b.q[y])).real() / a.pi[x];
                row += tm[x][y];
            }
            out.row_sum_residual = std::max(out.row_sum_residual, std::abs(row - 1.0));
        }
        for (std::size_t y = 0; y < b.labels.size(); ++y) {
            double push = 0;
            for (std::size_t x = 0; x < a.labels.size(); ++x) push += a.pi[x] * tm[x][y];
            out.compat_residual = std::max(out.compat_residual, std::abs(push - b.pi[y]));
        }
        out.transitions.push_back(std::move(tm));
    }
    return out;
}

namespace {

// all label tuples, first site most significant
void for_each_trajectory(const std::vector<std::size_t>& sizes,
                         const std::function<void(const std::vector<std::size_t>&)>& f) {
    if (sizes.empty()) return;
    for (auto s : sizes)
        if (s == 0) return;
    std::vector<std::size_t> idx(sizes.size(), 0);
    while (true) {
        f(idx);
        std::size_t p = sizes.size();
        while (p > 0) {
            --p;
            if (++idx[p] < sizes[p]) break;
            idx[p] = 0;
            if (p == 0) return;
        }
    }
}

}  // namespace

DecompositionReport decompose(const MarkovSpec& spec, int k, int l) {
    const ClassicalMarkovData cm = extract_classical(spec, k, l);
    const CMatrix t = marginal_density(spec, k, l, kMaxModeBudget);
    const double dim = double(t.rows());
    DecompositionReport out;
    out.dropped = cm.dropped;
    std::vector<std::size_t> sizes;
    for (const auto& s : cm.sites) sizes.push_back(s.labels.size());
    CMatrix sum(t.rows());
    for_each_trajectory(sizes, [&](const std::vector<std::size_t>& idx) {
        CMatrix q = cm.sites[0].q[idx[0]];
        double joint = cm.sites[0].pi[idx[0]];
        for (std::size_t p = 1; p < idx.size(); ++p) {
            q = kron(q, cm.sites[p].q[idx[p]]);
            joint *= cm.transitions[p - 1][idx[p - 1]][idx[p]];
        }
        const double mu = trace_of_product(t, q).real() / dim;
        out.weight_residual = std::max(out.weight_residual, std::abs(mu - joint));
        if (mu <= tol().weight_drop) return;
        DecompositionComponent c;
        for (std::size_t p = 0; p < idx.size(); ++p) c.trajectory.push_back(cm.sites[p].labels[idx[p]]);
        c.weight = mu;
        c.classical_joint = joint;
        c.density = (1.0 / mu) * (q * t * q);
        c.evenness = oddness(c.density);
        c.min_eigenvalue = min_eigenvalue(c.density);
        sum += mu * c.density;
        out.weight_sum += mu;
        out.components.push_back(std::move(c));
    });
    out.reconstruction_residual = frob_distance(sum, t);
    return out;
}

// ---------------------------------------------------------------- strongly even chains

namespace {

struct SiteAlgebras {
    std::vector<CMatrix> q;
    std::vector<MatrixSubalgebra> n, nbar, ntilde;
    std::vector<CMatrix> psi;
};

SiteAlgebras site_algebras(const MarkovSpec& spec, int j, bool need_tilde) {
    const auto& eps = spec.bond(j);
    if (!eps.structure_error().empty()) fail("InvalidSpec", eps.structure_error());
    if (classify(eps) != ChainClass::StronglyEven)
        fail("NotStronglyEven", "bond " + std::to_string(j) + " has a Theta-orbit of size two");
    SiteAlgebras s;
    for (auto& rb : disassemble(eps)) {
        const MatrixSubalgebra corner = full_corner(rb.p);
        s.q.push_back(rb.p);
        s.nbar.push_back(fermion_complement(rb.n, corner).complement);
        if (need_tilde) s.ntilde.push_back(relative_commutant(rb.n, corner));
        s.n.push_back(rb.n);
        s.psi.push_back(rb.psi);
    }
    return s;
}

// left (x) right as a two-site algebra, odd right elements carrying V
MatrixSubalgebra join_two_site(const MatrixSubalgebra& left, const MatrixSubalgebra& right, int left_modes) {
    const GradedBasis gl = graded_basis(left), gr = graded_basis(right);
    const CMatrix v = parity_unitary(left_modes);
    std::vector<CMatrix> el;
    for (std::size_t a = 0; a < gl.elements.size(); ++a)
        for (std::size_t b = 0; b < gr.elements.size(); ++b)
            el.push_back(kron(gr.parity[b] ? gl.elements[a] * v : gl.elements[a], gr.elements[b]));
    MatrixSubalgebra out = subalgebra_from_span(el, kron(left.unit, right.unit));
    out.theta_invariant = true;
    return out;
}

// tr(unit)/n for an algebra isomorphic to M_n
double multiplicity(const MatrixSubalgebra& a) { return a.unit.trace().real() / double(matrix_side(a.dim())); }

// density of x -> tr(r x) on a with respect to the trace of a itself
CMatrix intrinsic_density(const MatrixSubalgebra& a, const CMatrix& r) { return multiplicity(a) * a.project(r); }

CMatrix embed_at(const CMatrix& x, std::size_t left, std::size_t right) {
    CMatrix out = x;
    if (left > 1) out = kron(CMatrix::identity(left), out);
    if (right > 1) out = kron(out, CMatrix::identity(right));
    return out;
}

}  // namespace

StronglyEvenReport strongly_even_density(const MarkovSpec& spec, int k, int l) {
    check_window(spec, k, l, kMaxModeBudget);
    std::vector<SiteAlgebras> sites;
    for (int j = k; j <= l; ++j) sites.push_back(site_algebras(spec, j, false));
    const ChainWindow w = spec.window(k, l);
    const int L = l - k + 1;
    std::vector<std::size_t> dims;
    for (int p = 0; p < L; ++p) dims.push_back(std::size_t(1) << w.modes_of(p));
    auto prod_dims = [&](int a, int b) {
        std::size_t r = 1;
        for (int p = a; p < b; ++p) r *= dims[std::size_t(p)];
        return r;
    };

    // first factor: rho_k on N^k
    const CMatrix rho = site_state(spec, k);
    const auto& s0 = sites.front();
    std::vector<double> first_tr;
    CMatrix first(dims[0]);
    for (std::size_t o = 0; o < s0.q.size(); ++o) {
        first += intrinsic_density(s0.n[o], rho);
        first_tr.push_back(s0.n[o].project(rho).trace().real());
    }
    CMatrix total = embed_at(first, 1, prod_dims(1, L));

    // bond factors on Nbar^j v N^{j+1}
    std::vector<std::vector<std::vector<double>>> bond_tr;
    for (int p = 0; p + 1 < L; ++p) {
        const auto& a = sites[std::size_t(p)];
        const auto& b = sites[std::size_t(p + 1)];
        CMatrix f(dims[std::size_t(p)] * dims[std::size_t(p + 1)]);
        std::vector<std::vector<double>> trs(a.q.size(), std::vector<double>(b.q.size(), 0.0));
        for (std::size_t x = 0; x < a.q.size(); ++x)
            for (std::size_t y = 0; y < b.q.size(); ++y) {
                const MatrixSubalgebra alg = join_two_site(a.nbar[x], b.n[y], w.modes_of(p));
                f += intrinsic_density(alg, a.psi[x]);
                trs[x][y] = alg.project(a.psi[x]).trace().real();
            }
        total = total * embed_at(f, prod_dims(0, p), prod_dims(p + 2, L));
        bond_tr.push_back(std::move(trs));
    }

    // last factor: the block state restricted to Nbar^l
    const auto& sl = sites.back();
    const std::size_t dl = dims.back(), dnext = spec.bond(l).d1();
    std::vector<double> last_tr;
    CMatrix last(dl);
    for (std::size_t o = 0; o < sl.q.size(); ++o) {
        const CMatrix reduced = partial_trace_last(sl.psi[o], dl, dnext);
        last += intrinsic_density(sl.nbar[o], reduced);
        last_tr.push_back(sl.nbar[o].project(reduced).trace().real());
    }
    total = total * embed_at(last, prod_dims(0, L - 1), 1);

    StronglyEvenReport out;
    std::vector<std::size_t> sizes;
    for (const auto& s : sites) sizes.push_back(s.q.size());
    for_each_trajectory(sizes, [&](const std::vector<std::size_t>& idx) {
        CMatrix q = sites[0].q[idx[0]];
        double expect = first_tr[idx[0]] * last_tr[idx.back()];
        for (std::size_t p = 1; p < idx.size(); ++p) {
            q = kron(q, sites[p].q[idx[p]]);
            expect *= bond_tr[p - 1][idx[p - 1]][idx[p]];
        }
        const double got = trace_of_product(total, q).real();
        out.trace_product_residual = std::max(out.trace_product_residual, std::abs(got - expect));
        ++out.blocks;
    });
    out.density = double(total.rows()) * hermitian_part(total);
    return out;
}

// ---------------------------------------------------------------- block data

BlockData extract_blocks(const MarkovSpec& spec) {
    BlockData data;
    const std::size_t nb = spec.homogeneous ? 1 : spec.bonds.size();
    for (std::size_t j = 0; j <= nb; ++j) data.site_modes.push_back(spec.site_modes(int(j)));
    data.left_modes = data.site_modes.front();
    for (std::size_t j = 0; j < nb; ++j) {
        const auto& eps = spec.bond(int(j));
        SiteBlockData sb;
        sb.q = central_of(spec, int(j)).q_projections;
        std::vector<CMatrix> next_q;
        if (spec.homogeneous)
            next_q = sb.q;
        else if (j + 1 < nb)
            next_q = central_of(spec, int(j + 1)).q_projections;
        else
            next_q = {CMatrix::identity(eps.d1())};
        std::vector<std::vector<double>> tm;
        for (auto& rb : disassemble(eps)) {
            sb.kind.push_back(rb.kind);
            sb.p.push_back(rb.p);
            sb.n.push_back(rb.n);
            std::vector<CMatrix> states;
            std::vector<double> row;
            for (const auto& q2 : next_q) {
                const CMatrix cut = kron(rb.p, q2);
                CMatrix part = cut * rb.psi * cut;
                const double pi = part.trace().real();
                row.push_back(pi);
                states.push_back(pi > tol().weight_drop ? (1.0 / pi) * part : part);
            }
            sb.states.push_back(std::move(states));
            tm.push_back(std::move(row));
        }
        data.transitions.push_back(std::move(tm));
        data.sites.push_back(std::move(sb));
    }
    for (const auto& q : data.sites.front().q) {
        CMatrix part = q * spec.rho * q;
        const double pi = part.trace().real();
        data.pi0.push_back(pi);
        data.initial.push_back(pi > tol().weight_drop ? (1.0 / pi) * part : part);
    }
    return data;
}

MarkovSpec build_from_blocks(const BlockData& data) {
    if (data.sites.empty()) fail("InvalidSpec", "no block data");
    if (data.transitions.size() != data.sites.size()) fail("InvalidSpec", "one transition matrix per bond expected");
    const double st = tol().stochastic;
    double total0 = 0;
    for (double p : data.pi0) {
        if (p < -st) fail("NotStochastic", "negative initial weight");
        total0 += p;
    }
    if (std::abs(total0 - 1.0) > st) fail("NotStochastic", "initial weights do not sum to 1");
    for (const auto& tm : data.transitions)
        for (const auto& row : tm) {
            double s = 0;
            for (double p : row) {
                if (p < -st) fail("NotStochastic", "negative transition probability");
                s += p;
            }
            if (std::abs(s - 1.0) > st) fail("NotStochastic", "transition row does not sum to 1");
        }

    std::vector<TransitionExpectation> bonds;
    for (std::size_t j = 0; j < data.sites.size(); ++j) {
        const auto& sb = data.sites[j];
        const int dl = data.site_modes.at(j), dr = data.site_modes.at(j + 1);
        std::vector<BuiltBlock> built;
        for (std::size_t o = 0; o < sb.p.size(); ++o) {
            const auto& row = data.transitions[j].at(o);
            CMatrix phi(std::size_t(1) << (dl + dr));
            for (std::size_t y = 0; y < row.size(); ++y)
                if (row[y] > 0) phi += row[y] * sb.states[o].at(y);
            TransitionBlockSpec spec{sb.kind[o], sb.p[o], sb.n[o], phi};
            BuiltBlock b = build_block(spec, dr);
            // faithful on the carrier: invertible inside the corner of P (x) I
            const CMatrix unit = kron(b.p, CMatrix::identity(std::size_t(1) << dr));
            const CMatrix shifted = b.psi + (CMatrix::identity(unit.rows()) - unit);
            if (min_eigenvalue(shifted) <= tol().faithful_density)
                fail("NotFaithfulBlock", "block state of orbit " + std::to_string(o) + " at bond " +
                                             std::to_string(j) + " is not faithful");
            built.push_back(std::move(b));
        }
        bonds.push_back(assemble(built, dl, dr));
    }
    CMatrix rho(std::size_t(1) << data.site_modes.front());
    for (std::size_t o = 0; o < data.pi0.size(); ++o)
        if (data.pi0[o] > 0) rho += data.pi0[o] * data.initial.at(o);

    MarkovSpec s;
    s.homogeneous = data.sites.size() == 1;
    s.bonds = std::move(bonds);
    s.rho = rho;
    return s;
}

// ---------------------------------------------------------------- diagonal subalgebra

namespace {

// minimal projections of an even maximal abelian subalgebra of alg
// containing t; spectral projections of t refined by compressions of
// generic even elements (ramps first, seeded afterwards)
std::vector<CMatrix> even_masa(const MatrixSubalgebra& alg, const CMatrix& t) {
    const double target = multiplicity(alg);
    const std::size_t n = alg.unit.rows();
    auto split = [&](const CMatrix& e, const CMatrix& h) {
        // spectrum of e h e inside e
        const CMatrix c = e * h * e + 1e3 * (CMatrix::identity(n) - e);
        std::vector<CMatrix> parts;
        for (const auto& cl : spectral_clusters(c)) {
            CMatrix p = cl.projection * e;
            if (p.trace().real() > 0.5) parts.push_back(hermitian_part(p));
        }
        return parts;
    };
    std::vector<CMatrix> projs = split(alg.unit, even_part(alg.project(t)));
    std::vector<CMatrix> gens;
    for (int k = 1; k <= 2; ++k) {
        std::vector<double> ramp(n);
        for (std::size_t i = 0; i < n; ++i) ramp[i] = std::pow(double(i + 1), double(k));
        gens.push_back(even_part(alg.project(CMatrix::diag_real(ramp))));
    }
    for (std::uint64_t s = 0; s < 4; ++s) {
        const auto g = seeded_normals(0xd1a90000u + s, alg.dim());
        CMatrix h(n);
        for (std::size_t i = 0; i < alg.dim(); ++i) h += g[i] * alg.basis[i];
        gens.push_back(even_part(hermitian_part(h)));
    }
    std::vector<CMatrix> done;
    while (!projs.empty()) {
        CMatrix e = projs.back();
        projs.pop_back();
        if (e.trace().real() < target + 0.5) {
            done.push_back(e);
            continue;
        }
        bool refined = false;
        for (const auto& h : gens) {
            auto parts = split(e, h);
            if (parts.size() > 1) {
                for (auto& p : parts) projs.push_back(std::move(p));
                refined = true;
                break;
            }
        }
        if (!refined) fail("DegenerateGeneric", "could not split a projection of the block algebra");
    }
    return done;
}

}  // namespace

DiagonalReport diagonal_subalgebra(const MarkovSpec& spec, int m, int n) {
    if (n < m + 1) fail("SiteOutOfRange", "diagonal subalgebra needs at least two sites");
    check_window(spec, m, n, kMaxModeBudget);
    std::vector<SiteAlgebras> sites;
    for (int j = m; j <= n; ++j) sites.push_back(site_algebras(spec, j, j == m));
    const ChainWindow w = spec.window(m, n);
    const int L = n - m + 1;
    std::vector<std::size_t> dims;
    for (int p = 0; p < L; ++p) dims.push_back(std::size_t(1) << w.modes_of(p));
    auto prod_dims = [&](int a, int b) {
        std::size_t r = 1;
        for (int p = a; p < b; ++p) r *= dims[std::size_t(p)];
        return r;
    };
    const std::size_t dim = w.dim();

    DiagonalReport out;

    // ambient algebra: relative commutant of the range at m, all of the
    // interior sites, range at n. Products of orthonormal homogeneous bases
    // are already orthogonal.
    {
        const auto& first = spec.bond(m);
        const MatrixSubalgebra rc = relative_commutant(first.range(), full_corner(CMatrix::identity(first.d0())));
        const GradedBasis gl = graded_basis(rc);
        const GradedBasis gr = graded_basis(spec.bond(n).range());
        int mid_modes = 0;
        for (int p = 1; p + 1 < L; ++p) mid_modes += w.modes_of(p);
        const std::size_t mids = ipow4(mid_modes);
        if (gl.elements.size() * gr.elements.size() * mids > 4096)
            fail("WindowTooLarge", "ambient algebra of the diagonal check is too large");
        const CMatrix v = parity_unitary(w.modes_of(0));
        std::vector<CMatrix> el;
        for (std::size_t a = 0; a < gl.elements.size(); ++a)
            for (std::size_t y = 0; y < mids; ++y) {
                const auto digits = monomial_digits(y, mid_modes);
                int py = 0;
                for (int dg : digits)
                    if (dg >= 2) py ^= 1;
                const CMatrix ym = mid_modes > 0 ? tensor_monomial(digits) : CMatrix::identity(1);
                for (std::size_t b = 0; b < gr.elements.size(); ++b) {
                    const int s = (py + gr.parity[b]) % 2;
                    CMatrix e = kron(kron(s ? gl.elements[a] * v : gl.elements[a], ym), gr.elements[b]);
                    e *= 1.0 / e.frob();
                    el.push_back(std::move(e));
                }
            }
        out.ambient.ambient_dim = dim;
        out.ambient.unit = CMatrix::identity(dim);
        out.ambient.basis = std::move(el);
        out.ambient.theta_invariant = true;
    }

    // per bond and block pair: algebra, density and its even masa
    struct BondBlock {
        std::vector<CMatrix> minimal;  // two-site projections
        std::vector<double> weights;   // tr(Psi d)
    };
    std::vector<std::vector<std::vector<BondBlock>>> bb;
    for (int p = 0; p + 1 < L; ++p) {
        const auto& a = sites[std::size_t(p)];
        const auto& b = sites[std::size_t(p + 1)];
        std::vector<std::vector<BondBlock>> rows(a.q.size(), std::vector<BondBlock>(b.q.size()));
        for (std::size_t x = 0; x < a.q.size(); ++x)
            for (std::size_t y = 0; y < b.q.size(); ++y) {
                const MatrixSubalgebra& left = p == 0 ? a.ntilde[x] : a.nbar[x];
                const MatrixSubalgebra alg = join_two_site(left, b.n[y], w.modes_of(p));
                const CMatrix t = intrinsic_density(alg, a.psi[x]);
                for (auto& d : even_masa(alg, t)) {
                    rows[x][y].weights.push_back(trace_of_product(a.psi[x], d).real());
                    rows[x][y].minimal.push_back(std::move(d));
                }
            }
        bb.push_back(std::move(rows));
    }

    const CMatrix rho = site_state(spec, m);
    const CMatrix T = marginal_density(spec, m, n, kMaxModeBudget);
    const CMatrix Ttr = (1.0 / double(dim)) * T;

    std::vector<std::size_t> sizes;
    for (const auto& s : sites) sizes.push_back(s.q.size());
    std::vector<double> predicted;
    for_each_trajectory(sizes, [&](const std::vector<std::size_t>& idx) {
        // choices of one minimal projection per bond
        std::vector<std::size_t> counts;
        for (int p = 0; p + 1 < L; ++p) counts.push_back(bb[std::size_t(p)][idx[std::size_t(p)]][idx[std::size_t(p + 1)]].minimal.size());
        const double pim = trace_of_product(rho, sites[0].q[idx[0]]).real();
        for_each_trajectory(counts, [&](const std::vector<std::size_t>& c) {
            CMatrix proj = CMatrix::identity(dim);
            double pred = pim;
            for (int p = 0; p + 1 < L; ++p) {
                const auto& blk = bb[std::size_t(p)][idx[std::size_t(p)]][idx[std::size_t(p + 1)]];
                proj = proj * embed_at(blk.minimal[c[std::size_t(p)]], prod_dims(0, p), prod_dims(p + 2, L));
                pred *= blk.weights[c[std::size_t(p)]];
            }
            out.minimal_projections.push_back(hermitian_part(proj));
            predicted.push_back(pred);
        });
    });

    std::vector<CMatrix> normalized;
    out.even = true;
    CMatrix pinched(dim);
    for (std::size_t i = 0; i < out.minimal_projections.size(); ++i) {
        const CMatrix& p = out.minimal_projections[i];
        const double mu = trace_of_product(Ttr, p).real();
        out.markov_residual = std::max(out.markov_residual, std::abs(mu - predicted[i]));
        if (oddness(p) > tol().theta) out.even = false;
        normalized.push_back((1.0 / p.frob()) * p);
        pinched += p * Ttr * p;
    }
    out.diagonal.ambient_dim = dim;
    out.diagonal.unit = CMatrix::identity(dim);
    out.diagonal.basis = orthonormalize(normalized);
    out.diagonal.theta_invariant = out.even;

    bool inside = true;
    for (const auto& p : out.minimal_projections)
        if (out.ambient.distance(p) > tol().closure * std::max(1.0, p.frob())) inside = false;
    out.maximal_abelian = inside && out.diagonal.dim() == out.minimal_projections.size() &&
                          is_maximal_abelian(out.diagonal, out.ambient);

    // phi = phi o E on the ambient basis, E(x) = sum tr(p x)/tr(p) p
    std::vector<double> phi_p, tr_p;
    for (const auto& p : out.minimal_projections) {
        phi_p.push_back(trace_of_product(Ttr, p).real());
        tr_p.push_back(p.trace().real());
    }
    for (const auto& b : out.ambient.basis) {
        const cplx direct = trace_of_product(Ttr, b);
        cplx via = 0;
        for (std::size_t i = 0; i < out.minimal_projections.size(); ++i)
            via += trace_of_product(out.minimal_projections[i], b) / tr_p[i] * phi_p[i];
        out.expectation_residual = std::max(out.expectation_residual, std::abs(direct - via));
    }
    out.entropy_full = entropy_of(Ttr);
    out.entropy_pinched = entropy_of(hermitian_part(pinched));
    return out;
}

}  // namespace fermichain
