#include "fermichain/transition.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include "fermichain/car.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/tolerance.hpp"

namespace fermichain {

const char* orbit_kind_name(OrbitKind k) { return k == OrbitKind::Single ? "single" : "double"; }

const char* chain_class_name(ChainClass c) {
    switch (c) {
        case ChainClass::StronglyEven: return "strongly_even";
        case ChainClass::Minimal: return "minimal";
        default: return "mixed";
    }
}

bool VerificationReport::passes(double t) const {
    return idempotency <= t && unitality <= t && choi_min_eigenvalue >= -t && bimodule <= t && evenness <= t &&
           localization <= t;
}

namespace {

Eigen::MatrixXcd to_eigen(const CMatrix& a) {
    Eigen::MatrixXcd m(Eigen::Index(a.rows()), Eigen::Index(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = a(i, j);
    return m;
}

std::vector<CMatrix> vectors_to_matrices(const std::vector<std::vector<cplx>>& vs, std::size_t n) {
    std::vector<CMatrix> out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back(unvec(v, n, n));
    return out;
}

// kernel of a square matrix, via its Gram matrix
std::vector<std::vector<cplx>> kernel(const CMatrix& a) {
    CMatrix g = a.adjoint() * a;
    double scale = 0;
    for (std::size_t i = 0; i < g.rows(); ++i) scale = std::max(scale, g(i, i).real());
    return nullspace_from_gram(g, std::max(scale, 1.0));
}

MatrixUnits lift_units(const MatrixUnits& u, std::size_t d1) {
    MatrixUnits out;
    out.n = u.n;
    const CMatrix id = CMatrix::identity(d1);
    for (const auto& f : u.f) out.f.push_back(kron(f, id));
    return out;
}

double rank_of_projection(const CMatrix& p) { return p.trace().real(); }

void check_block_projection(const CMatrix& p, std::size_t d0, const char* what) {
    if (p.rows() != d0 || !p.square()) fail("InvalidBlock", std::string(what) + " has the wrong dimension");
    if (!p.is_projection(tol().unit)) fail("InvalidBlock", std::string(what) + " is not a projection");
    if (p.trace().real() < 0.5) fail("InvalidBlock", std::string(what) + " is zero");
}

void check_block_algebra(const MatrixSubalgebra& n, const CMatrix& p) {
    if (n.ambient_dim != p.rows() || frob_distance(n.unit, p) > tol().unit * (1.0 + p.frob()))
        fail("InvalidBlock", "block algebra unit differs from the block projection");
    if (closure_residual(n) > tol().closure) fail("InvalidBlock", "block algebra is not closed under products");
    if (!is_full_matrix_algebra(n)) fail("InvalidBlock", "block algebra is not a full matrix algebra");
}

CMatrix normalize_state(const CMatrix& psi) {
    const double t = psi.trace().real();
    if (std::abs(t - 1.0) > tol().state_trace) fail("InvalidBlock", "block state is not normalized on its carrier");
    return psi;
}

}  // namespace

// ---------------------------------------------------------------- builders

BuiltBlock build_single_orbit(const TransitionBlockSpec& spec, int dr) {
    const std::size_t d0 = spec.p.rows(), d1 = std::size_t(1) << dr;
    check_block_projection(spec.p, d0, "P");
    if (frob_distance(theta(spec.p), spec.p) > tol().unit) fail("InvalidBlock", "P is not Theta-invariant");
    check_block_algebra(spec.n, spec.p);
    if (!check_theta_invariant(spec.n, tol().theta)) fail("InvalidBlock", "N is not Theta-invariant");
    if (spec.phi.rows() != d0 * d1) fail("InvalidBlock", "block state has the wrong dimension");
    if (!spec.phi.is_hermitian(tol().hermitian) || !spec.phi.is_psd(tol().psd))
        fail("InvalidBlock", "block state density is not positive");
    if (oddness(spec.phi) > tol().theta * (1.0 + spec.phi.frob())) fail("InvalidBlock", "block state is not even");

    BuiltBlock b;
    b.kind = OrbitKind::Single;
    b.p = spec.p;
    b.n = spec.n;
    b.units = matrix_units(spec.n);
    const CMatrix pp = kron(spec.p, CMatrix::identity(d1));
    // Phi o beta on N' ^ P A P: its density is the commutant expectation of
    // the compressed even part
    b.psi = normalize_state(hermitian_part(commutant_expectation(lift_units(b.units, d1), pp * even_part(spec.phi) * pp)));
    return b;
}

BuiltBlock build_double_orbit(const TransitionBlockSpec& spec, int dr) {
    const std::size_t d0 = spec.p.rows(), d1 = std::size_t(1) << dr;
    check_block_projection(spec.p, d0, "P1");
    if ((theta(spec.p) * spec.p).frob() > tol().unit) fail("InvalidBlock", "Theta(P1) is not orthogonal to P1");
    check_block_algebra(spec.n, spec.p);
    if (spec.phi.rows() != d0 * d1) fail("InvalidBlock", "block state has the wrong dimension");
    if (!spec.phi.is_hermitian(tol().hermitian) || !spec.phi.is_psd(tol().psd))
        fail("InvalidBlock", "block state density is not positive");

    BuiltBlock b;
    b.kind = OrbitKind::Double;
    b.p = spec.p;
    b.n = spec.n;
    b.units = matrix_units(spec.n);
    const CMatrix pp = kron(spec.p, CMatrix::identity(d1));
    b.psi = normalize_state(hermitian_part(commutant_expectation(lift_units(b.units, d1), pp * spec.phi * pp)));
    return b;
}

BuiltBlock build_block(const TransitionBlockSpec& spec, int dr) {
    return spec.kind == OrbitKind::Single ? build_single_orbit(spec, dr) : build_double_orbit(spec, dr);
}

CMatrix block_superop(const BuiltBlock& b, int dl, int dr) {
    const std::size_t d0 = std::size_t(1) << dl, d1 = std::size_t(1) << dr, D = d0 * d1;
    CMatrix s(d0 * d0, D * D);
    const std::size_t n = b.units.n;
    const CMatrix id1 = CMatrix::identity(d1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const CMatrix& fij = b.units(i, j);
            const CMatrix g = b.psi * kron(b.units(j, i), id1);  // tr(g w) = sum g_dc w_cd
            for (std::size_t bb = 0; bb < d0; ++bb)
                for (std::size_t a = 0; a < d0; ++a) {
                    const cplx f = fij(a, bb) * double(n);
                    if (f == cplx(0.0, 0.0)) continue;
                    const std::size_t row = a + bb * d0;
                    for (std::size_t d = 0; d < D; ++d)
                        for (std::size_t c = 0; c < D; ++c) {
                            const cplx gv = g(d, c);
                            if (gv != cplx(0.0, 0.0)) s(row, c + d * D) += f * gv;
                        }
                }
        }
    if (b.kind == OrbitKind::Double) {
        const auto s0 = parity_signs(dl), s01 = parity_signs(dl + dr);
        CMatrix t = s;
        for (std::size_t bb = 0; bb < d0; ++bb)
            for (std::size_t a = 0; a < d0; ++a)
                for (std::size_t d = 0; d < D; ++d)
                    for (std::size_t c = 0; c < D; ++c) {
                        const int sg = s0[a] * s0[bb] * s01[c] * s01[d];
                        t(a + bb * d0, c + d * D) += double(sg) * s(a + bb * d0, c + d * D);
                    }
        return t;
    }
    return s;
}

TransitionExpectation assemble(const std::vector<BuiltBlock>& blocks, int dl, int dr) {
    const std::size_t d0 = std::size_t(1) << dl, d1 = std::size_t(1) << dr, D = d0 * d1;
    if (blocks.empty()) fail("UnitsDontSum", "no blocks given");
    CMatrix units(d0);
    CMatrix s(d0 * d0, D * D);
    for (const auto& b : blocks) {
        if (b.p.rows() != d0) fail("UnitsDontSum", "block projection has the wrong dimension");
        units += b.p;
        if (b.kind == OrbitKind::Double) units += theta(b.p);
        s += block_superop(b, dl, dr);
    }
    if (frob_distance(units, CMatrix::identity(d0)) > tol().unit * double(d0))
        fail("UnitsDontSum", "block units do not add up to the identity");
    return TransitionExpectation(dl, dr, std::move(s), blocks);
}

// ---------------------------------------------------------------- expectation

TransitionExpectation::TransitionExpectation(int dl, int dr, CMatrix superop, std::vector<BuiltBlock> blocks)
    : dl_(dl), dr_(dr), s_(std::move(superop)), blocks_(std::move(blocks)) {
    const std::size_t d0 = this->d0(), D = big_dim();
    if (s_.rows() != d0 * d0 || s_.cols() != D * D) fail("BadShape", "superoperator shape does not match the sites");
    range_ = fixed_point_algebra(*this);
    // a corrupted map need not have an algebra of fixed points
    try {
        central_ = center_decomposition(range_);
    } catch (const FermiError& e) {
        structure_error_ = e.what();
    }
}

CMatrix TransitionExpectation::apply(const CMatrix& w) const {
    const std::size_t d0 = this->d0(), D = big_dim();
    if (w.rows() != D || w.cols() != D) fail("BadShape", "operator is not on the two-site window");
    // nonzeros of vec(w) in column order, so each superoperator row is read forward
    std::vector<std::pair<std::size_t, cplx>> nz;
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t c = 0; c < D; ++c)
            if (w(c, d) != cplx(0.0, 0.0)) nz.emplace_back(c + d * D, w(c, d));
    CMatrix out(d0);
    for (std::size_t b = 0; b < d0; ++b)
        for (std::size_t a = 0; a < d0; ++a) {
            const cplx* row = &s_(a + b * d0, 0);
            cplx acc = 0;
            for (const auto& [col, x] : nz) acc += row[col] * x;
            out(a, b) = acc;
        }
    return out;
}

CMatrix TransitionExpectation::apply_embedded(const CMatrix& w) const { return kron(apply(w), CMatrix::identity(d1())); }

CMatrix TransitionExpectation::dual(const CMatrix& x) const {
    const std::size_t d0 = this->d0(), D = big_dim();
    if (x.rows() != d0) fail("BadShape", "dual argument is not a site-0 operator");
    CMatrix y(D);
    for (std::size_t b = 0; b < d0; ++b)
        for (std::size_t a = 0; a < d0; ++a) {
            const cplx xv = x(b, a);
            if (xv == cplx(0.0, 0.0)) continue;
            const std::size_t row = a + b * d0;
            for (std::size_t d = 0; d < D; ++d)
                for (std::size_t c = 0; c < D; ++c) y(d, c) += xv * s_(row, c + d * D);
        }
    return y;
}

CMatrix TransitionExpectation::averaging_superop() const {
    const std::size_t d0 = this->d0(), d1 = this->d1(), D = big_dim();
    CMatrix s0(d0 * d0, d0 * d0);
    for (std::size_t bp = 0; bp < d0; ++bp)
        for (std::size_t ap = 0; ap < d0; ++ap)
            for (std::size_t k = 0; k < d1; ++k) {
                const std::size_t col = (ap * d1 + k) + (bp * d1 + k) * D;
                for (std::size_t r = 0; r < d0 * d0; ++r) s0(r, ap + bp * d0) += s_(r, col);
            }
    return s0;
}

CMatrix TransitionExpectation::transfer_superop() const {
    const std::size_t d0 = this->d0(), d1 = this->d1(), D = big_dim();
    if (d0 != d1) fail("NotHomogeneous", "transfer map needs equal site sizes");
    const auto s0 = parity_signs(dl_);
    CMatrix t(d0 * d0, d0 * d0);
    for (std::size_t d = 0; d < d0; ++d)
        for (std::size_t c = 0; c < d0; ++c) {
            // alpha(e_cd) = V^{parity} (x) e_cd
            const bool odd = s0[c] != s0[d];
            for (std::size_t k = 0; k < d0; ++k) {
                const double sg = odd ? double(s0[k]) : 1.0;
                const std::size_t col = (k * d1 + c) + (k * d1 + d) * D;
                for (std::size_t r = 0; r < d0 * d0; ++r) t(r, c + d * d0) += sg * s_(r, col);
            }
        }
    return t;
}

CMatrix TransitionExpectation::choi() const {
    const std::size_t d0 = this->d0(), D = big_dim();
    CMatrix c(D * d0);
    for (std::size_t d = 0; d < D; ++d)
        for (std::size_t cc = 0; cc < D; ++cc)
            for (std::size_t b = 0; b < d0; ++b)
                for (std::size_t a = 0; a < d0; ++a) c(cc * d0 + a, d * d0 + b) = s_(a + b * d0, cc + d * D);
    return c;
}

MatrixSubalgebra fixed_point_algebra(const TransitionExpectation& eps) {
    const std::size_t d0 = eps.d0();
    const CMatrix m = eps.averaging_superop() - CMatrix::identity(d0 * d0);
    std::vector<CMatrix> fixed;
    // the fixed space is *-closed; keep a Hermitian spanning set
    for (const auto& f : vectors_to_matrices(kernel(m), d0)) {
        fixed.push_back(hermitian_part(f));
        fixed.push_back(hermitian_part(cplx(0, -1) * f));
    }
    MatrixSubalgebra a = subalgebra_from_span(fixed, CMatrix::identity(d0));
    a.theta_invariant = check_theta_invariant(a, tol().theta);
    return a;
}

// ---------------------------------------------------------------- verification

namespace {

// (y (x) I) x and x (y (x) I) without forming the Kronecker product
CMatrix site0_times(const CMatrix& y, const CMatrix& x, std::size_t d1) {
    const std::size_t d0 = y.rows(), D = x.rows();
    CMatrix out(D);
    for (std::size_t i = 0; i < d0; ++i)
        for (std::size_t k = 0; k < d0; ++k) {
            const cplx c = y(i, k);
            if (c == cplx(0.0, 0.0)) continue;
            for (std::size_t r = 0; r < d1; ++r) {
                const cplx* src = &x(k * d1 + r, 0);
                cplx* dst = &out(i * d1 + r, 0);
                for (std::size_t j = 0; j < D; ++j) dst[j] += c * src[j];
            }
        }
    return out;
}

CMatrix times_site0(const CMatrix& x, const CMatrix& y, std::size_t d1) {
    const std::size_t d0 = y.rows(), D = x.rows();
    CMatrix out(D);
    for (std::size_t row = 0; row < D; ++row)
        for (std::size_t k = 0; k < d0; ++k)
            for (std::size_t j = 0; j < d0; ++j) {
                const cplx c = y(k, j);
                if (c == cplx(0.0, 0.0)) continue;
                const cplx* src = &x(row, k * d1);
                cplx* dst = &out(row, j * d1);
                for (std::size_t r = 0; r < d1; ++r) dst[r] += src[r] * c;
            }
    return out;
}

double kraus_min_singular(const CMatrix& dual_identity) {
    const auto ev = herm_eigenvalues(hermitian_part(dual_identity));
    return std::sqrt(std::max(0.0, ev.empty() ? 0.0 : ev.front()));
}

}  // namespace

VerificationReport verify_conditional_expectation(const TransitionExpectation& eps, const MatrixSubalgebra& range) {
    VerificationReport r;
    const std::size_t d0 = eps.d0(), d1 = eps.d1(), D = eps.big_dim();
    const CMatrix& s = eps.superop();

    r.idempotency = (eps.averaging_superop() * s - s).frob();
    r.unitality = frob_distance(eps.apply(CMatrix::identity(D)), CMatrix::identity(d0));
    r.choi_min_eigenvalue = herm_eigenvalues(hermitian_part(eps.choi())).front();

    const auto s0 = parity_signs(eps.left_modes()), s01 = parity_signs(eps.left_modes() + eps.right_modes());
    double ev = 0;
    for (std::size_t b = 0; b < d0; ++b)
        for (std::size_t a = 0; a < d0; ++a)
            for (std::size_t d = 0; d < D; ++d)
                for (std::size_t c = 0; c < D; ++c) {
                    const cplx v = s(a + b * d0, c + d * D);
                    if (s0[a] * s0[b] * s01[c] * s01[d] < 0) ev += std::norm(v);
                }
    r.evenness = 2.0 * std::sqrt(ev);  // ||S - Theta S Theta||_F

    const CMatrix id1 = CMatrix::identity(d1);
    double bim = 0;
    if (D <= 16) {
        r.bimodule_full_basis = true;
        for (const auto& nb : range.basis) {
            const CMatrix big = kron(nb, id1);
            for (std::size_t c = 0; c < D; ++c)
                for (std::size_t d = 0; d < D; ++d) {
                    const CMatrix e = CMatrix::unit(D, c, d);
                    const CMatrix base = eps.apply(e);
                    bim = std::max(bim, frob_distance(eps.apply(big * e), nb * base));
                    bim = std::max(bim, frob_distance(eps.apply(e * big), base * nb));
                }
        }
    } else {
        r.bimodule_full_basis = false;
        for (int probe = 0; probe < 8; ++probe) {
            const auto g = seeded_normals(0xb1d00000ULL + std::uint64_t(probe), 2 * D * D);
            CMatrix x(D);
            for (std::size_t i = 0; i < D * D; ++i) x.data()[i] = cplx(g[2 * i], g[2 * i + 1]);
            x *= 1.0 / x.frob();
            const CMatrix base = eps.apply(x);
            for (const auto& nb : range.basis) {
                bim = std::max(bim, frob_distance(eps.apply(site0_times(nb, x, d1)), nb * base));
                bim = std::max(bim, frob_distance(eps.apply(times_site0(x, nb, d1)), base * nb));
            }
        }
    }
    r.bimodule = bim;
    r.localization = 0.0;  // the compact form has its image on site 0 by construction
    r.kraus_min_singular = kraus_min_singular(eps.dual(CMatrix::identity(d0)));
    r.faithful = r.kraus_min_singular > tol().faithful_sv;
    return r;
}

VerificationReport verify_conditional_expectation(const TransitionExpectation& eps) {
    return verify_conditional_expectation(eps, eps.range());
}

ChainClass classify(const TransitionExpectation& eps) {
    const auto& orbits = eps.central().orbits;
    bool all_single = true;
    for (const auto& o : orbits)
        if (o.size() != 1) all_single = false;
    if (all_single) return ChainClass::StronglyEven;
    if (orbits.size() == 1) return ChainClass::Minimal;
    return ChainClass::Mixed;
}

std::vector<RecoveredBlock> disassemble(const TransitionExpectation& eps) {
    const auto& cd = eps.central();
    std::vector<RecoveredBlock> out;
    for (const auto& orbit : cd.orbits) {
        RecoveredBlock rb;
        rb.kind = orbit.size() == 1 ? OrbitKind::Single : OrbitKind::Double;
        rb.projections = orbit;
        rb.p = cd.projections[std::size_t(orbit.front())];
        std::vector<CMatrix> compressed;
        for (const auto& b : eps.range().basis) compressed.push_back(rb.p * b * rb.p);
        rb.n = subalgebra_from_span(compressed, rb.p);
        rb.n.theta_invariant = check_theta_invariant(rb.n, tol().theta);
        // tr(P eps(w)) = rank(P) tr(Psi w) for the block state density Psi
        rb.psi = hermitian_part(eps.dual(rb.p));
        rb.psi *= 1.0 / rank_of_projection(rb.p);
        out.push_back(std::move(rb));
    }
    return out;
}

// ---------------------------------------------------------------- square superoperators

CMatrix SuperOp::apply(const CMatrix& x) const {
    const auto v = vec(x);
    std::vector<cplx> w(n * n);
    for (std::size_t i = 0; i < n * n; ++i) {
        cplx acc = 0;
        for (std::size_t j = 0; j < n * n; ++j) acc += s(i, j) * v[j];
        w[i] = acc;
    }
    return unvec(w, n, n);
}

SuperOp superop_from_map(std::size_t n, const std::function<CMatrix(const CMatrix&)>& f) {
    SuperOp e;
    e.n = n;
    e.s = CMatrix(n * n, n * n);
    for (std::size_t d = 0; d < n; ++d)
        for (std::size_t c = 0; c < n; ++c) {
            const CMatrix y = f(CMatrix::unit(n, c, d));
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t a = 0; a < n; ++a) e.s(a + b * n, c + d * n) = y(a, b);
        }
    return e;
}

SuperOp superop_identity(std::size_t n) {
    SuperOp e;
    e.n = n;
    e.s = CMatrix::identity(n * n);
    return e;
}

SuperOp compose(const SuperOp& a, const SuperOp& b) {
    if (a.n != b.n) fail("BadShape", "superoperator sizes differ");
    SuperOp e;
    e.n = a.n;
    e.s = a.s * b.s;
    return e;
}

ErgodicResult ergodic_average(const SuperOp& e) {
    const std::size_t n = e.n, N = n * n;
    if (e.s.rows() != N || e.s.cols() != N) fail("BadShape", "superoperator shape does not match n");
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(to_eigen(e.s), false);
    if (es.info() != Eigen::Success) fail("NoConvergence", "eigenvalues of the superoperator did not converge");
    std::vector<cplx> lambda(N);
    for (std::size_t i = 0; i < N; ++i) lambda[i] = es.eigenvalues()(Eigen::Index(i));

    const double circle = 1e-8, group = 1e-6;
    std::vector<bool> seen(N, false);
    for (std::size_t i = 0; i < N; ++i) {
        if (std::abs(lambda[i]) > 1.0 + circle)
            fail("NotPowerBounded", "eigenvalue of modulus " + std::to_string(std::abs(lambda[i])) + " > 1");
        if (seen[i] || std::abs(std::abs(lambda[i]) - 1.0) > circle) continue;
        // peripheral eigenvalue: algebraic and geometric multiplicities must agree
        std::size_t alg = 0;
        cplx mean = 0;
        for (std::size_t j = 0; j < N; ++j)
            if (std::abs(lambda[j] - lambda[i]) < group) {
                seen[j] = true;
                ++alg;
                mean += lambda[j];
            }
        mean /= double(alg);
        const std::size_t geo = kernel(e.s - mean * CMatrix::identity(N)).size();
        if (geo < alg)
            fail("NotPowerBounded", "defective peripheral eigenvalue " + std::to_string(mean.real()) + "+" +
                                        std::to_string(mean.imag()) + "i (algebraic " + std::to_string(alg) +
                                        ", geometric " + std::to_string(geo) + ")");
    }

    const CMatrix id = CMatrix::identity(N);
    const auto right = kernel(e.s - id);
    const auto left = kernel(e.s.adjoint() - id);
    if (right.size() != left.size() || right.empty())
        fail("NotPowerBounded", "eigenvalue 1 has mismatched left and right eigenspaces");
    const std::size_t k = right.size();
    CMatrix K(N, k), L(N, k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < N; ++i) {
            K(i, j) = right[j][i];
            L(i, j) = left[j][i];
        }
    const CMatrix Ld = L.adjoint();
    ErgodicResult out;
    out.expectation.n = n;
    out.expectation.s = K * solve(Ld * K, Ld);
    auto fixed = vectors_to_matrices(right, n);
    out.fixed_points = subalgebra_from_span(fixed, CMatrix::identity(n));
    out.fixed_points.theta_invariant = check_theta_invariant(out.fixed_points, tol().theta);
    return out;
}

VerificationReport verify_square_expectation(const SuperOp& e, const MatrixSubalgebra& range) {
    VerificationReport r;
    const std::size_t n = e.n;
    r.idempotency = (e.s * e.s - e.s).frob();
    r.unitality = frob_distance(e.apply(CMatrix::identity(n)), CMatrix::identity(n));
    CMatrix c(n * n);
    for (std::size_t d = 0; d < n; ++d)
        for (std::size_t cc = 0; cc < n; ++cc)
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t a = 0; a < n; ++a) c(cc * n + a, d * n + b) = e.s(a + b * n, cc + d * n);
    r.choi_min_eigenvalue = herm_eigenvalues(hermitian_part(c)).front();
    const auto sg = parity_signs(modes_of_dim(n));
    double ev = 0;
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t d = 0; d < n; ++d)
                for (std::size_t cc = 0; cc < n; ++cc)
                    if (sg[a] * sg[b] * sg[cc] * sg[d] < 0) ev += std::norm(e.s(a + b * n, cc + d * n));
    r.evenness = 2.0 * std::sqrt(ev);
    double bim = 0;
    for (const auto& nb : range.basis)
        for (std::size_t cc = 0; cc < n; ++cc)
            for (std::size_t d = 0; d < n; ++d) {
                const CMatrix x = CMatrix::unit(n, cc, d);
                const CMatrix base = e.apply(x);
                bim = std::max(bim, frob_distance(e.apply(nb * x), nb * base));
                bim = std::max(bim, frob_distance(e.apply(x * nb), base * nb));
            }
    r.bimodule = bim;
    r.localization = 0.0;
    // dual of the identity: sum_i K_i^* K_i
    CMatrix dual_id(n);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t d = 0; d < n; ++d)
            for (std::size_t cc = 0; cc < n; ++cc) dual_id(d, cc) += e.s(b + b * n, cc + d * n);
    r.kraus_min_singular = kraus_min_singular(dual_id);
    r.faithful = r.kraus_min_singular > tol().faithful_sv;
    return r;
}

// ---------------------------------------------------------------- lifts

CMatrix lift_apply(const TransitionExpectation& eps, const CMatrix& w, std::size_t left_dim) {
    const std::size_t D = eps.big_dim(), d0 = eps.d0();
    if (w.rows() != left_dim * D) fail("BondOutOfWindow", "operator does not end with the bond sites");
    CMatrix out(left_dim * d0);
    CMatrix blk(D);
    for (std::size_t i = 0; i < left_dim; ++i)
        for (std::size_t j = 0; j < left_dim; ++j) {
            bool zero = true;
            for (std::size_t r = 0; r < D; ++r)
                for (std::size_t c = 0; c < D; ++c) {
                    blk(r, c) = w(i * D + r, j * D + c);
                    if (blk(r, c) != cplx(0.0, 0.0)) zero = false;
                }
            if (zero) continue;
            const CMatrix y = eps.apply(blk);
            for (std::size_t r = 0; r < d0; ++r)
                for (std::size_t c = 0; c < d0; ++c) out(i * d0 + r, j * d0 + c) = y(r, c);
        }
    return out;
}

CMatrix lift_dual(const TransitionExpectation& eps, const CMatrix& t, std::size_t left_dim) {
    const std::size_t D = eps.big_dim(), d0 = eps.d0();
    if (t.rows() != left_dim * d0) fail("BondOutOfWindow", "density does not end with the bond site");
    CMatrix out(left_dim * D);
    CMatrix blk(d0);
    for (std::size_t i = 0; i < left_dim; ++i)
        for (std::size_t j = 0; j < left_dim; ++j) {
            bool zero = true;
            for (std::size_t r = 0; r < d0; ++r)
                for (std::size_t c = 0; c < d0; ++c) {
                    blk(r, c) = t(i * d0 + r, j * d0 + c);
                    if (blk(r, c) != cplx(0.0, 0.0)) zero = false;
                }
            if (zero) continue;
            const CMatrix y = eps.dual(blk);
            for (std::size_t r = 0; r < D; ++r)
                for (std::size_t c = 0; c < D; ++c) out(i * D + r, j * D + c) = y(r, c);
        }
    return out;
}

}  // namespace fermichain
