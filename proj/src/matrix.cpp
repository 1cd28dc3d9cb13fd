#include "fermichain/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "fermichain/errors.hpp"
#include "fermichain/tolerance.hpp"

namespace fermichain {

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
    : r_(rows), c_(cols), a_(std::move(data)) {
    if (a_.size() != r_ * c_) fail("BadShape", "entry count does not match shape");
}

CMatrix CMatrix::identity(std::size_t n) {
    CMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

CMatrix CMatrix::diag(const std::vector<cplx>& d) {
    CMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

CMatrix CMatrix::diag_real(const std::vector<double>& d) {
    CMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

CMatrix CMatrix::unit(std::size_t n, std::size_t i, std::size_t j) {
    CMatrix m(n);
    m(i, j) = 1.0;
    return m;
}

CMatrix& CMatrix::operator+=(const CMatrix& o) {
    if (r_ != o.r_ || c_ != o.c_) fail("BadShape", "operator+= shape mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
    if (r_ != o.r_ || c_ != o.c_) fail("BadShape", "operator-= shape mismatch");
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
    for (auto& x : a_) x *= s;
    return *this;
}

CMatrix& CMatrix::operator*=(double s) {
    for (auto& x : a_) x *= s;
    return *this;
}

CMatrix CMatrix::adjoint() const {
    CMatrix m(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t j = 0; j < c_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
}

CMatrix CMatrix::transpose() const {
    CMatrix m(c_, r_);
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
    return m;
}

CMatrix CMatrix::conj() const {
    CMatrix m = *this;
    for (auto& x : m.a_) x = std::conj(x);
    return m;
}

cplx CMatrix::trace() const {
    cplx t = 0;
    for (std::size_t i = 0; i < std::min(r_, c_); ++i) t += (*this)(i, i);
    return t;
}

double CMatrix::frob() const {
    double s = 0;
    for (const auto& x : a_) s += std::norm(x);
    return std::sqrt(s);
}

double CMatrix::max_abs() const {
    double m = 0;
    for (const auto& x : a_) m = std::max(m, std::abs(x));
    return m;
}

bool CMatrix::is_hermitian(double tol) const {
    if (!square()) return false;
    double scale = std::max(frob(), 1.0);
    double d = 0;
    for (std::size_t i = 0; i < r_; ++i)
        for (std::size_t j = i; j < c_; ++j) d += std::norm((*this)(i, j) - std::conj((*this)(j, i)));
    return std::sqrt(d) <= tol * scale;
}

bool CMatrix::is_unitary(double tol) const {
    if (!square()) return false;
    return frob_distance(adjoint() * (*this), identity(r_)) <= tol;
}

bool CMatrix::is_projection(double tol) const {
    if (!is_hermitian(tol)) return false;
    return frob_distance((*this) * (*this), *this) <= tol * std::max(1.0, frob());
}

bool CMatrix::is_psd(double tol) const {
    if (!is_hermitian(tol)) return false;
    auto ev = herm_eigenvalues(hermitian_part(*this));
    return ev.empty() || ev.front() >= -tol;
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }
CMatrix operator*(double s, CMatrix a) { return a *= s; }
CMatrix operator-(CMatrix a) { return a *= -1.0; }

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols() != b.rows()) fail("BadShape", "matrix product shape mismatch");
    const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
    CMatrix c(n, p);
    cplx* cd = c.data();
    const cplx* ad = a.data();
    const cplx* bd = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        cplx* crow = cd + i * p;
        for (std::size_t k = 0; k < m; ++k) {
            const cplx aik = ad[i * m + k];
            if (aik == cplx(0.0, 0.0)) continue;
            const cplx* brow = bd + k * p;
            for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
    const std::size_t ar = a.rows(), ac = a.cols(), br = b.rows(), bc = b.cols();
    CMatrix k(ar * br, ac * bc);
    for (std::size_t i = 0; i < ar; ++i)
        for (std::size_t j = 0; j < ac; ++j) {
            const cplx x = a(i, j);
            if (x == cplx(0.0, 0.0)) continue;
            for (std::size_t p = 0; p < br; ++p)
                for (std::size_t q = 0; q < bc; ++q) k(i * br + p, j * bc + q) = x * b(p, q);
        }
    return k;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

cplx hs_inner(const CMatrix& a, const CMatrix& b) {
    cplx s = 0;
    const auto& x = a.entries();
    const auto& y = b.entries();
    for (std::size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
    return s;
}

cplx trace_of_product(const CMatrix& a, const CMatrix& b) {
    cplx s = 0;
    const std::size_t n = a.rows(), m = a.cols();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) s += a(i, k) * b(k, i);
    return s;
}

double frob_distance(const CMatrix& a, const CMatrix& b) {
    double s = 0;
    const auto& x = a.entries();
    const auto& y = b.entries();
    for (std::size_t i = 0; i < x.size(); ++i) s += std::norm(x[i] - y[i]);
    return std::sqrt(s);
}

CMatrix hermitian_part(const CMatrix& a) {
    CMatrix h(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) h(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
    return h;
}

std::vector<cplx> vec(const CMatrix& a) {
    std::vector<cplx> v(a.rows() * a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) v[i + j * a.rows()] = a(i, j);
    return v;
}

CMatrix unvec(const std::vector<cplx>& v, std::size_t rows, std::size_t cols) {
    CMatrix a(rows, cols);
    for (std::size_t j = 0; j < cols; ++j)
        for (std::size_t i = 0; i < rows; ++i) a(i, j) = v[i + j * rows];
    return a;
}

// ---------------------------------------------------------------- Jacobi

namespace {

// In-place cyclic Jacobi on a column-major Hermitian block w (n x n).
// u receives the accumulated rotations (column-major, starts at I); an
// empty u skips them.
void jacobi_block(std::vector<cplx>& w, std::vector<cplx>& u, std::size_t n) {
    auto A = [&](std::size_t i, std::size_t j) -> cplx& { return w[j * n + i]; };
    double total = 0;
    for (const auto& x : w) total += std::norm(x);
    total = std::sqrt(total);
    if (total == 0.0) return;
    const double stop = tol().jacobi_offdiag * total;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0;
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i)
                if (i != j) off += std::norm(A(i, j));
        off = std::sqrt(off);
        if (off < stop) return;
        // early sweeps skip entries that are small compared to the mean
        const double skip = sweep < 3 ? 0.2 * off / double(n * n) : 0.0;
        std::size_t rotations = 0;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cplx apq = A(p, q);
                const double r = std::abs(apq);
                if (r == 0.0 || r < skip) continue;
                const double app = A(p, p).real(), aqq = A(q, q).real();
                // below rounding of the diagonal: dropping it moves nothing, and
                // dividing by a denormal r would make the rotation non-unitary
                if (r <= 1e-17 * (std::abs(app) + std::abs(aqq)) || r < 1e-280) {
                    A(p, q) = 0.0;
                    A(q, p) = 0.0;
                    continue;
                }
                ++rotations;
                const double tau = (aqq - app) / (2.0 * r);
                const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const cplx e = std::polar(1.0, -std::arg(apq));

                cplx* cp = &w[p * n];
                cplx* cq = &w[q * n];
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const cplx xp = cp[i], xq = cq[i];
                    cp[i] = c * xp - s * e * xq;
                    cq[i] = s * xp + c * e * xq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    A(p, i) = std::conj(cp[i]);
                    A(q, i) = std::conj(cq[i]);
                }
                A(p, p) = app - t * r;
                A(q, q) = aqq + t * r;
                A(p, q) = 0.0;
                A(q, p) = 0.0;

                if (u.empty()) continue;  // eigenvalues only
                cplx* up = &u[p * n];
                cplx* uq = &u[q * n];
                for (std::size_t i = 0; i < n; ++i) {
                    const cplx xp = up[i], xq = uq[i];
                    up[i] = c * xp - s * e * xq;
                    uq[i] = s * xp + c * e * xq;
                }
            }
        }
        if (rotations == 0 && sweep >= 3) return;
    }
}

// Jacobi is kept for blocks up to this size. Larger blocks (Choi
// matrices of three-mode sites, ten-mode windows) go through Eigen's
// tridiagonal QR, which is deterministic as well but far cheaper there.
constexpr std::size_t kJacobiMaxDim = 256;

void dense_fallback(std::vector<cplx>& w, std::vector<cplx>& u, std::size_t n) {
    Eigen::MatrixXcd m(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) m(Eigen::Index(i), Eigen::Index(j)) = w[j * n + i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, u.empty() ? Eigen::EigenvaluesOnly : Eigen::ComputeEigenvectors);
    if (es.info() != Eigen::Success) fail("NoConvergence", "dense Hermitian eigensolver failed");
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            w[j * n + i] = i == j ? cplx(es.eigenvalues()(Eigen::Index(j)), 0.0) : cplx(0.0, 0.0);
            if (!u.empty()) u[j * n + i] = es.eigenvectors()(Eigen::Index(i), Eigen::Index(j));
        }
    }
}

// connected components of the nonzero pattern
std::vector<std::vector<std::size_t>> components(const CMatrix& a) {
    const std::size_t n = a.rows();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (a(i, j) != cplx(0.0, 0.0) || a(j, i) != cplx(0.0, 0.0)) {
                auto ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
    std::vector<std::vector<std::size_t>> comps;
    std::vector<long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = find(i);
        if (slot[r] < 0) {
            slot[r] = long(comps.size());
            comps.emplace_back();
        }
        comps[std::size_t(slot[r])].push_back(i);
    }
    return comps;
}

}  // namespace

namespace {

HermEig herm_eig_impl(const CMatrix& a, bool with_vectors) {
    if (!a.square()) fail("NotHermitian", "herm_eig needs a square matrix");
    if (!a.is_hermitian(tol().hermitian))
        fail("NotHermitian", "input deviates from its adjoint beyond tolerance");
    const std::size_t n = a.rows();
    const CMatrix h = hermitian_part(a);

    std::vector<double> vals(n);
    CMatrix vecs(with_vectors ? n : 0);
    for (const auto& comp : components(h)) {
        const std::size_t m = comp.size();
        std::vector<cplx> w(m * m), u(with_vectors ? m * m : 0);
        for (std::size_t jj = 0; jj < m; ++jj) {
            if (with_vectors) u[jj * m + jj] = 1.0;
            for (std::size_t ii = 0; ii < m; ++ii) w[jj * m + ii] = h(comp[ii], comp[jj]);
        }
        if (m > kJacobiMaxDim) {
            dense_fallback(w, u, m);
        } else if (m > 1) {
            jacobi_block(w, u, m);
        }
        for (std::size_t jj = 0; jj < m; ++jj) {
            vals[comp[jj]] = w[jj * m + jj].real();
            if (with_vectors)
                for (std::size_t ii = 0; ii < m; ++ii) vecs(comp[ii], comp[jj]) = u[jj * m + ii];
        }
    }
    // ascending, ties broken by original column index
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return vals[x] < vals[y]; });
    HermEig out;
    out.values.resize(n);
    if (with_vectors) out.vectors = CMatrix(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = vals[order[k]];
        if (with_vectors)
            for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = vecs(i, order[k]);
    }
    return out;
}

}  // namespace

HermEig herm_eig(const CMatrix& a) { return herm_eig_impl(a, true); }

std::vector<double> herm_eigenvalues(const CMatrix& a) { return herm_eig_impl(a, false).values; }

CMatrix spectral_apply(const CMatrix& a, const std::function<cplx(double)>& f) {
    const HermEig e = herm_eig(a);
    const std::size_t n = a.rows();
    std::vector<cplx> fv(n);
    for (std::size_t k = 0; k < n; ++k) fv[k] = f(e.values[k]);
    CMatrix out(n);
    const CMatrix& U = e.vectors;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k) {
            const cplx uik = U(i, k) * fv[k];
            if (uik == cplx(0.0, 0.0)) continue;
            for (std::size_t j = 0; j < n; ++j) out(i, j) += uik * std::conj(U(j, k));
        }
    return out;
}

CMatrix mat_func(const CMatrix& a, MatFunc f, double t) {
    const double floor = tol().psd * std::max(1.0, a.frob());
    switch (f) {
        case MatFunc::Log: {
            auto ev = herm_eigenvalues(a);
            if (!ev.empty() && ev.front() <= 0.0)
                fail("NegativeSpectrum", "log needs a positive definite input (min eigenvalue " +
                                             std::to_string(ev.front()) + ")");
            return spectral_apply(a, [](double x) { return cplx(std::log(x), 0.0); });
        }
        case MatFunc::XLogX:
            return spectral_apply(a, [floor](double x) {
                if (x < -floor) fail("NegativeSpectrum", "x log x needs a PSD input");
                return x <= 0.0 ? cplx(0.0, 0.0) : cplx(x * std::log(x), 0.0);
            });
        case MatFunc::PowerIt:
            return spectral_apply(a, [floor, t](double x) {
                if (x < -floor) fail("NegativeSpectrum", "x^{it} needs a PSD input");
                if (x <= floor) return cplx(0.0, 0.0);
                return std::polar(1.0, t * std::log(x));
            });
    }
    return {};
}

std::vector<SpectralCluster> spectral_clusters(const CMatrix& a) {
    const HermEig e = herm_eig(a);
    const std::size_t n = a.rows();
    const double gap = tol().eig_cluster * (1.0 + a.frob());
    std::vector<SpectralCluster> out;
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && e.values[end] - e.values[end - 1] <= gap) ++end;
        SpectralCluster c;
        c.rank = end - start;
        c.value = 0;
        c.projection = CMatrix(n);
        for (std::size_t k = start; k < end; ++k) {
            c.value += e.values[k];
            for (std::size_t i = 0; i < n; ++i) {
                const cplx uik = e.vectors(i, k);
                if (uik == cplx(0.0, 0.0)) continue;
                for (std::size_t j = 0; j < n; ++j) c.projection(i, j) += uik * std::conj(e.vectors(j, k));
            }
        }
        c.value /= double(c.rank);
        out.push_back(std::move(c));
        start = end;
    }
    return out;
}

std::vector<std::vector<cplx>> nullspace_from_gram(const CMatrix& gram, double scale) {
    const HermEig e = herm_eig(gram);
    const std::size_t n = gram.rows();
    double top = e.values.empty() ? 0.0 : std::max(std::abs(e.values.back()), scale);
    // eigenvalues of the Gram matrix are squared singular values; its
    // rounding floor sits near 1e-16 * top, so the cut is placed well above it
    const double cut = 1e-12 * std::max(top, 1e-300);
    std::vector<std::vector<cplx>> basis;
    for (std::size_t k = 0; k < n; ++k) {
        if (e.values[k] > cut) break;
        std::vector<cplx> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = e.vectors(i, k);
        basis.push_back(std::move(v));
    }
    return basis;
}

std::vector<std::vector<cplx>> nullspace(const std::vector<std::vector<cplx>>& rows, std::size_t n) {
    CMatrix g(n);
    double scale = 0;
    for (const auto& r : rows) {
        if (r.size() != n) fail("BadShape", "constraint length differs from unknown count");
        for (std::size_t j = 0; j < n; ++j) {
            if (r[j] == cplx(0.0, 0.0)) continue;
            const cplx cj = std::conj(r[j]);
            for (std::size_t k = 0; k < n; ++k) g(j, k) += cj * r[k];
        }
    }
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, g(j, j).real());
    if (rows.empty() || scale == 0.0) {
        std::vector<std::vector<cplx>> all;
        for (std::size_t j = 0; j < n; ++j) {
            std::vector<cplx> v(n);
            v[j] = 1.0;
            all.push_back(std::move(v));
        }
        return all;
    }
    return nullspace_from_gram(g, scale);
}

CMatrix solve(const CMatrix& a, const CMatrix& b) {
    if (!a.square() || a.rows() != b.rows()) fail("BadShape", "solve shape mismatch");
    const std::size_t n = a.rows(), m = b.cols();
    CMatrix A = a, B = b;
    const double scale = std::max(a.max_abs(), 1e-300);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(A(k, k));
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A(i, k)) > best) {
                best = std::abs(A(i, k));
                piv = i;
            }
        if (best <= 1e-13 * scale) fail("Singular", "linear system is singular to working precision");
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            for (std::size_t j = 0; j < m; ++j) std::swap(B(k, j), B(piv, j));
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            const cplx f = A(i, k) / A(k, k);
            if (f == cplx(0.0, 0.0)) continue;
            for (std::size_t j = k; j < n; ++j) A(i, j) -= f * A(k, j);
            for (std::size_t j = 0; j < m; ++j) B(i, j) -= f * B(k, j);
        }
    }
    CMatrix X(n, m);
    for (std::size_t jj = 0; jj < m; ++jj)
        for (std::size_t ii = n; ii-- > 0;) {
            cplx s = B(ii, jj);
            for (std::size_t k = ii + 1; k < n; ++k) s -= A(ii, k) * X(k, jj);
            X(ii, jj) = s / A(ii, ii);
        }
    return X;
}

CMatrix inverse(const CMatrix& a) { return solve(a, CMatrix::identity(a.rows())); }

std::vector<CMatrix> orthonormalize(const std::vector<CMatrix>& xs, double rel_tol) {
    std::vector<CMatrix> out;
    // rounding debris (e.g. the odd part of an even element) must not
    // survive just because it is orthogonal to everything kept so far
    double top = 0;
    for (const auto& x : xs) top = std::max(top, x.frob());
    std::vector<CMatrix> rest;
    std::vector<double> n0;
    for (const auto& x : xs) {
        const double n = x.frob();
        if (n <= rel_tol * top) continue;
        rest.push_back(x);
        n0.push_back(n);
    }
    // Pivoted: a nearly dependent element taken early would turn its
    // rounding noise into a spurious direction. Among the candidates whose
    // relative residual is within a factor 2 of the best, the first one in
    // input order is taken, so well conditioned inputs keep their order.
    while (!rest.empty()) {
        std::vector<double> r(rest.size());
        double best = 0;
        for (std::size_t i = 0; i < rest.size(); ++i) best = std::max(best, r[i] = rest[i].frob() / n0[i]);
        if (best <= rel_tol) break;
        std::size_t pick = 0;
        while (r[pick] < 0.5 * best) ++pick;
        CMatrix y = std::move(rest[pick]);
        const double n = n0[pick];
        rest.erase(rest.begin() + std::ptrdiff_t(pick));
        n0.erase(n0.begin() + std::ptrdiff_t(pick));
        for (const auto& b : out) {
            const cplx c = hs_inner(b, y);
            if (c != cplx(0.0, 0.0)) y -= c * b;
        }
        const double n1 = y.frob();
        if (n1 <= rel_tol * n) continue;
        y *= 1.0 / n1;
        for (auto& z : rest) {
            const cplx c = hs_inner(y, z);
            if (c != cplx(0.0, 0.0)) z -= c * y;
        }
        out.push_back(std::move(y));
    }
    return out;
}

}  // namespace fermichain
