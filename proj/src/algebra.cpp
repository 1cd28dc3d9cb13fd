#include "fermichain/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fermichain/car.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/tolerance.hpp"

namespace fermichain {

std::vector<double> seeded_normals(std::uint64_t seed, std::size_t count) {
    std::mt19937_64 gen(seed);
    auto uniform = [&] { return (double(gen() >> 11) + 0.5) * 0x1.0p-53; };
    std::vector<double> out;
    out.reserve(count + 1);
    while (out.size() < count) {
        const double u1 = uniform(), u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out.push_back(r * std::cos(2.0 * M_PI * u2));
        out.push_back(r * std::sin(2.0 * M_PI * u2));
    }
    out.resize(count);
    return out;
}

CMatrix MatrixSubalgebra::project(const CMatrix& x) const {
    CMatrix p(x.rows(), x.cols());
    for (const auto& b : basis) {
        const cplx c = hs_inner(b, x);
        if (c != cplx(0.0, 0.0)) p += c * b;
    }
    return p;
}

double MatrixSubalgebra::distance(const CMatrix& x) const { return frob_distance(x, project(x)); }

bool check_theta_invariant(const MatrixSubalgebra& a, double t) {
    for (const auto& b : a.basis)
        if (a.distance(theta(b)) > t) return false;
    return true;
}

MatrixSubalgebra subalgebra_from_span(const std::vector<CMatrix>& elements, const CMatrix& unit) {
    MatrixSubalgebra a;
    a.ambient_dim = unit.rows();
    a.unit = unit;
    a.basis = orthonormalize(elements);
    a.theta_invariant = check_theta_invariant(a, tol().theta);
    return a;
}

namespace {
bool is_diagonal(const CMatrix& p) {
    for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j)
            if (i != j && p(i, j) != cplx(0.0, 0.0)) return false;
    return true;
}

// orthonormal columns spanning the range of a projection
std::vector<std::vector<cplx>> range_vectors(const CMatrix& p) {
    std::vector<std::vector<cplx>> vs;
    const std::size_t n = p.rows();
    if (is_diagonal(p)) {
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(p(i, i) - 1.0) < 1e-9) {
                std::vector<cplx> v(n);
                v[i] = 1.0;
                vs.push_back(v);
            }
        return vs;
    }
    const HermEig e = herm_eig(p);
    for (std::size_t k = 0; k < n; ++k)
        if (e.values[k] > 0.5) {
            std::vector<cplx> v(n);
            for (std::size_t i = 0; i < n; ++i) v[i] = e.vectors(i, k);
            vs.push_back(v);
        }
    return vs;
}

CMatrix outer(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    CMatrix m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == cplx(0.0, 0.0)) continue;
        for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * std::conj(b[j]);
    }
    return m;
}

// Hermitian orthonormal real-span basis of a *-closed subspace
std::vector<CMatrix> hermitian_basis(const std::vector<CMatrix>& basis) {
    std::vector<CMatrix> hs;
    for (const auto& b : basis) {
        hs.push_back(0.5 * (b + b.adjoint()));
        hs.push_back(cplx(0.0, -0.5) * (b - b.adjoint()));
    }
    // real Gram-Schmidt: inner products of Hermitian matrices are real.
    // Parts at rounding level (Hermitian b gives a tiny i(b - b*)) are skipped.
    double top = 0;
    for (const auto& x : hs) top = std::max(top, x.frob());
    std::vector<CMatrix> out;
    for (auto& x : hs) {
        const double n0 = x.frob();
        if (n0 <= 1e-9 * top) continue;
        CMatrix y = x;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& o : out) y -= hs_inner(o, y).real() * o;
        const double n1 = y.frob();
        if (n1 <= 1e-9 * n0) continue;
        y = hermitian_part(y);
        y *= 1.0 / y.frob();
        out.push_back(std::move(y));
    }
    return out;
}

// spectral projections of h on the range of unit, clusters as in matrix_core
std::vector<CMatrix> clusters_under_unit(const CMatrix& h, const CMatrix& unit) {
    const double shift = -2.0 * (h.frob() + 1.0);
    CMatrix hs = h + shift * (CMatrix::identity(h.rows()) - unit);
    std::vector<CMatrix> out;
    for (auto& c : spectral_clusters(hs)) {
        if (std::abs(c.value - shift) < 0.5 * (h.frob() + 1.0)) continue;
        out.push_back(unit * c.projection * unit);
    }
    return out;
}

bool entries_greater(const CMatrix& a, const CMatrix& b) {
    const auto& x = a.entries();
    const auto& y = b.entries();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i].real() - y[i].real()) > 1e-9) return x[i].real() > y[i].real();
        if (std::abs(x[i].imag() - y[i].imag()) > 1e-9) return x[i].imag() > y[i].imag();
    }
    return false;
}
}  // namespace

MatrixSubalgebra full_corner(const CMatrix& p) {
    auto vs = range_vectors(p);
    std::vector<CMatrix> b;
    for (const auto& v : vs)
        for (const auto& w : vs) b.push_back(outer(v, w));
    MatrixSubalgebra a;
    a.ambient_dim = p.rows();
    a.unit = p;
    a.basis = orthonormalize(b);
    a.theta_invariant = check_theta_invariant(a, tol().theta);
    return a;
}

MatrixSubalgebra scalars(const CMatrix& p) { return subalgebra_from_span({p}, p); }

double closure_residual(const MatrixSubalgebra& a) {
    double r = 0;
    for (const auto& x : a.basis) {
        r = std::max(r, a.distance(x.adjoint()));
        for (const auto& y : a.basis) r = std::max(r, a.distance(x * y));
    }
    return r;
}

MatrixSubalgebra algebra_closure(const std::vector<CMatrix>& generators, const CMatrix& unit) {
    const double t = tol().closure;
    for (const auto& g : generators) {
        if (frob_distance(unit * g * unit, g) > t * std::max(1.0, g.frob()))
            fail("NotSupported", "generator is not supported under the unit");
    }
    std::vector<CMatrix> gens;
    for (const auto& g : generators) {
        gens.push_back(g);
        gens.push_back(g.adjoint());
    }
    std::vector<CMatrix> span = {unit};
    for (const auto& g : gens) span.push_back(g);
    std::vector<CMatrix> basis = orthonormalize(span);
    // words in the generators: multiply the current basis by generators on the left
    std::size_t done = 0;
    while (done < basis.size()) {
        const std::size_t upto = basis.size();
        for (std::size_t k = done; k < upto; ++k)
            for (const auto& g : gens) {
                CMatrix w = g * basis[k];
                CMatrix y = w;
                for (int pass = 0; pass < 2; ++pass)
                    for (const auto& b : basis) y -= hs_inner(b, y) * b;
                const double n1 = y.frob();
                if (n1 > 1e-9 * std::max(1.0, w.frob())) {
                    y *= 1.0 / n1;
                    basis.push_back(std::move(y));
                }
            }
        done = upto;
    }
    MatrixSubalgebra a;
    a.ambient_dim = unit.rows();
    a.unit = unit;
    a.basis = std::move(basis);
    a.theta_invariant = check_theta_invariant(a, tol().theta);
    return a;
}

MatrixSubalgebra relative_commutant(const MatrixSubalgebra& n, const MatrixSubalgebra& m) {
    const double t = tol().closure;
    for (const auto& b : n.basis)
        if (m.distance(b) > t * std::max(1.0, b.frob())) fail("NotSubalgebra", "N is not contained in M");
    const std::size_t k = m.dim();
    // commutators [b_a, n_c] for every pair
    std::vector<std::vector<CMatrix>> comm(k);
    for (std::size_t a = 0; a < k; ++a)
        for (const auto& x : n.basis) comm[a].push_back(commutator(m.basis[a], x));
    CMatrix g(k);
    double scale = 0;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            cplx s = 0;
            for (std::size_t c = 0; c < n.dim(); ++c) s += hs_inner(comm[a][c], comm[b][c]);
            g(a, b) = s;
            g(b, a) = std::conj(s);
            if (a == b) scale = std::max(scale, s.real());
        }
    // orthonormal bases: commutator norms are O(1), so rounding noise must
    // not set the scale
    const std::vector<std::vector<cplx>> null = nullspace_from_gram(g, std::max(scale, 1.0));
    std::vector<CMatrix> elems;
    for (const auto& v : null) {
        CMatrix x(m.ambient_dim);
        for (std::size_t a = 0; a < k; ++a)
            if (v[a] != cplx(0.0, 0.0)) x += v[a] * m.basis[a];
        elems.push_back(std::move(x));
    }
    MatrixSubalgebra out;
    out.ambient_dim = m.ambient_dim;
    out.unit = m.unit;
    out.basis = orthonormalize(elems);
    out.theta_invariant = check_theta_invariant(out, tol().theta);
    return out;
}

MatrixSubalgebra center(const MatrixSubalgebra& a) { return relative_commutant(a, a); }

namespace {
bool projections_valid(const std::vector<CMatrix>& ps, const MatrixSubalgebra& z, const CMatrix& unit) {
    if (ps.size() != z.dim()) return false;
    CMatrix sum(unit.rows());
    for (const auto& p : ps) {
        if (z.distance(p) > 1e-8 * std::max(1.0, p.frob())) return false;
        sum += p;
    }
    return frob_distance(sum, unit) <= 1e-8;
}

std::vector<CMatrix> joint_refinement(const std::vector<CMatrix>& herm, const CMatrix& unit) {
    std::vector<CMatrix> current = {unit};
    for (const auto& h : herm) {
        std::vector<CMatrix> next;
        for (const auto& p : current) {
            auto parts = clusters_under_unit(p * h * p, p);
            for (auto& q : parts) next.push_back(std::move(q));
        }
        current = std::move(next);
    }
    return current;
}
}  // namespace

CentralData center_decomposition(const MatrixSubalgebra& a) {
    const MatrixSubalgebra z = center(a);
    const auto herm = hermitian_basis(z.basis);
    CentralData cd;
    std::vector<CMatrix> ps;
    bool ok = false;
    for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
        auto r = seeded_normals(0x5eed0000ULL + std::uint64_t(attempt), herm.size());
        CMatrix h(a.ambient_dim);
        for (std::size_t k = 0; k < herm.size(); ++k) h += r[k] * herm[k];
        ps = clusters_under_unit(h, a.unit);
        ok = projections_valid(ps, z, a.unit);
    }
    if (!ok) {
        cd.used_fallback = true;
        ps = joint_refinement(herm, a.unit);
        if (!projections_valid(ps, z, a.unit))
            fail("DegenerateGeneric", "could not separate the minimal central projections");
    }
    std::sort(ps.begin(), ps.end(), entries_greater);
    cd.projections = ps;
    std::vector<int> seen(ps.size(), 0);
    for (std::size_t g = 0; g < ps.size(); ++g) {
        if (seen[g]) continue;
        seen[g] = 1;
        std::vector<int> orbit = {int(g)};
        const CMatrix tg = theta(ps[g]);
        if (frob_distance(tg, ps[g]) > 1e-8) {
            bool matched = false;
            for (std::size_t d = 0; d < ps.size(); ++d)
                if (!seen[d] && frob_distance(tg, ps[d]) <= 1e-8) {
                    seen[d] = 1;
                    orbit.push_back(int(d));
                    matched = true;
                    break;
                }
            if (!matched) fail("NotThetaInvariant", "Theta does not permute the central projections");
        }
        cd.orbits.push_back(orbit);
        CMatrix q(a.ambient_dim);
        for (int i : orbit) q += ps[std::size_t(i)];
        cd.q_projections.push_back(q);
    }
    return cd;
}

GradedBasis graded_basis(const MatrixSubalgebra& a) {
    std::vector<CMatrix> ev, od;
    for (const auto& b : a.basis) {
        auto g = graded_parts(b);
        ev.push_back(g.even);
        od.push_back(g.odd);
    }
    GradedBasis out;
    for (auto& e : orthonormalize(ev)) {
        out.elements.push_back(std::move(e));
        out.parity.push_back(0);
    }
    for (auto& o : orthonormalize(od)) {
        out.elements.push_back(std::move(o));
        out.parity.push_back(1);
    }
    return out;
}

bool is_full_matrix_algebra(const MatrixSubalgebra& a) {
    const std::size_t d = a.dim();
    const std::size_t n = std::size_t(std::llround(std::sqrt(double(d))));
    if (n * n != d) return false;
    return center(a).dim() == 1;
}

MatrixUnits matrix_units(const MatrixSubalgebra& a) {
    if (!is_full_matrix_algebra(a)) fail("NotFactor", "algebra is not a full matrix algebra over its unit");
    const std::size_t n = std::size_t(std::llround(std::sqrt(double(a.dim()))));
    MatrixUnits u;
    u.n = n;
    if (n == 1) {
        u.f = {a.unit};
        return u;
    }
    const auto herm = hermitian_basis(a.basis);
    std::vector<CMatrix> es;
    for (int attempt = 0; attempt < 6; ++attempt) {
        auto r = seeded_normals(0xfac70000ULL + std::uint64_t(attempt), herm.size());
        CMatrix h(a.ambient_dim);
        for (std::size_t k = 0; k < herm.size(); ++k) h += r[k] * herm[k];
        es = clusters_under_unit(h, a.unit);
        if (es.size() == n) break;
    }
    if (es.size() != n) fail("NotFactor", "generic element did not split the algebra into n minimal projections");
    const CMatrix& e1 = es[0];
    const double r1 = e1.trace().real();
    std::vector<CMatrix> col(n);  // f_i1
    col[0] = e1;
    for (std::size_t i = 1; i < n; ++i) {
        double best = -1;
        CMatrix pick;
        for (const auto& b : a.basis) {
            CMatrix x = es[i] * b * e1;
            const double nx = x.frob();
            if (nx > best + 1e-12) {
                best = nx;
                pick = std::move(x);
            }
        }
        const double c = (pick.adjoint() * pick).trace().real() / r1;
        pick *= 1.0 / std::sqrt(c);
        col[i] = std::move(pick);
    }
    u.f.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) u.f[i * n + j] = col[i] * col[j].adjoint();
    return u;
}

CMatrix commutant_expectation(const MatrixUnits& u, const CMatrix& x) {
    CMatrix out(x.rows());
    for (std::size_t i = 0; i < u.n; ++i)
        for (std::size_t j = 0; j < u.n; ++j) out += u(i, j) * x * u(j, i);
    out *= 1.0 / double(u.n);
    return out;
}

CMatrix implementing_unitary(const MatrixSubalgebra& a) {
    const MatrixUnits u = matrix_units(a);
    const std::size_t n = u.n;
    const CMatrix& p = a.unit;
    if (frob_distance(theta(p), p) > tol().unit) fail("NoImplementer", "unit is not even");
    const CMatrix v = parity_unitary(modes_of_dim(p.rows()));
    // f_1i V f_j1 = (V_N)_ij * W for V restricted to P = V_N x W
    std::vector<CMatrix> m(n * n);
    std::size_t pivot = 0;
    double best = -1;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            m[i * n + j] = u(0, i) * v * u(j, 0);
            const double nm = m[i * n + j].frob();
            if (nm > best) {
                best = nm;
                pivot = i * n + j;
            }
        }
    if (best <= 1e-12) fail("NoImplementer", "parity has no component on the block");
    CMatrix x(p.rows());
    for (std::size_t k = 0; k < n * n; ++k) {
        const cplx c = hs_inner(m[pivot], m[k]) / (best * best);
        if (c != cplx(0.0, 0.0)) x += c * u.f[k];
    }
    // x = c V_N with V_N^2 = P
    const cplx lam = (x * x).trace() / p.trace();
    x *= 1.0 / std::sqrt(lam);
    // sign: first entry of (nearly) largest magnitude gets positive real part
    const double top = x.max_abs();
    for (const auto& e : x.entries())
        if (std::abs(e) >= top * (1.0 - 1e-9)) {
            if (e.real() < 0 || (e.real() == 0 && e.imag() < 0)) x *= -1.0;
            break;
        }
    const double t = tol().theta;
    double res = frob_distance(x, x.adjoint()) + frob_distance(x * x, p) + oddness(x);
    for (const auto& f : u.f) res = std::max(res, frob_distance(x * f * x, theta(f)));
    if (res > t) fail("NoImplementer", "intertwiner is not an even selfadjoint unitary implementing Theta");
    return x;
}

ComplementResult fermion_complement(const MatrixSubalgebra& n, const MatrixSubalgebra& m) {
    ComplementResult r;
    r.v_n = implementing_unitary(n);
    const MatrixSubalgebra tilde = relative_commutant(n, m);
    std::vector<CMatrix> elems;
    for (const auto& x : tilde.basis) {
        auto g = graded_parts(x);
        elems.push_back(g.even);
        elems.push_back(r.v_n * g.odd);
    }
    r.complement = subalgebra_from_span(elems, m.unit);
    r.dimension_law = n.dim() * r.complement.dim() == m.dim();
    const GradedBasis gn = graded_basis(n);
    const GradedBasis gb = graded_basis(r.complement);
    double worst = 0;
    for (std::size_t i = 0; i < gn.elements.size(); ++i)
        for (std::size_t j = 0; j < gb.elements.size(); ++j) {
            const double sigma = (gn.parity[i] == 1 && gb.parity[j] == 1) ? 1.0 : -1.0;
            const CMatrix& x = gn.elements[i];
            const CMatrix& y = gb.elements[j];
            worst = std::max(worst, (x * y + sigma * (y * x)).frob());
        }
    r.graded_commutation = worst;
    std::vector<CMatrix> both = n.basis;
    for (const auto& b : r.complement.basis) both.push_back(b);
    r.intersection_dim = n.dim() + r.complement.dim() - orthonormalize(both).size();
    return r;
}

std::vector<CMatrix> abelian_minimal_projections(const MatrixSubalgebra& a) {
    for (const auto& x : a.basis)
        for (const auto& y : a.basis)
            if (commutator(x, y).frob() > tol().closure) fail("NotAbelian", "algebra is not abelian");
    const auto herm = hermitian_basis(a.basis);
    std::vector<CMatrix> ps;
    for (int attempt = 0; attempt < 3; ++attempt) {
        auto r = seeded_normals(0xabe10000ULL + std::uint64_t(attempt), herm.size());
        CMatrix h(a.ambient_dim);
        for (std::size_t k = 0; k < herm.size(); ++k) h += r[k] * herm[k];
        ps = clusters_under_unit(h, a.unit);
        if (ps.size() == a.dim()) return ps;
    }
    ps = joint_refinement(herm, a.unit);
    if (ps.size() != a.dim()) fail("DegenerateGeneric", "could not split the abelian algebra");
    return ps;
}

MaximalAbelianCheck maximal_abelian_check(const MatrixSubalgebra& a, const MatrixSubalgebra& m) {
    MaximalAbelianCheck out;
    out.algebra_dim = a.dim();
    const auto ps = abelian_minimal_projections(a);
    for (const auto& b : a.basis)
        if (m.distance(b) > tol().closure * std::max(1.0, b.frob())) fail("NotSubalgebra", "A is not inside M");
    // common eigenbasis of the projections; pinching is block-diagonal there
    const std::size_t d = a.ambient_dim;
    CMatrix h(d);
    std::vector<int> label_of(d, -1);
    for (std::size_t k = 0; k < ps.size(); ++k) h += double(k + 1) * ps[k];
    const HermEig e = herm_eig(h);
    for (std::size_t c = 0; c < d; ++c) {
        const long k = std::lround(e.values[c]) - 1;
        label_of[c] = int(k);  // -1 means outside the unit
    }
    const CMatrix& U = e.vectors;
    const CMatrix Ud = U.adjoint();
    const std::size_t k = m.dim();
    std::vector<std::vector<cplx>> pinched(k);
    for (std::size_t a_ = 0; a_ < k; ++a_) {
        const CMatrix t = Ud * m.basis[a_] * U;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                if (label_of[i] >= 0 && label_of[i] == label_of[j]) pinched[a_].push_back(t(i, j));
    }
    CMatrix g(k);
    for (std::size_t x = 0; x < k; ++x)
        for (std::size_t y = x; y < k; ++y) {
            cplx s = 0;
            for (std::size_t t = 0; t < pinched[x].size(); ++t) s += std::conj(pinched[x][t]) * pinched[y][t];
            g(x, y) = (x == y ? 1.0 : 0.0) - s;
            g(y, x) = std::conj(g(x, y));
        }
    out.commutant_dim = nullspace_from_gram(g, 1.0).size();
    out.maximal = out.commutant_dim == out.algebra_dim;
    return out;
}

bool is_maximal_abelian(const MatrixSubalgebra& a, const MatrixSubalgebra& m) { return maximal_abelian_check(a, m).maximal; }

double subspace_distance(const MatrixSubalgebra& a, const MatrixSubalgebra& b) {
    double d = 0;
    for (const auto& x : a.basis) d = std::max(d, b.distance(x));
    for (const auto& y : b.basis) d = std::max(d, a.distance(y));
    if (a.dim() != b.dim()) d = std::max(d, 1.0);
    return d;
}

}  // namespace fermichain
