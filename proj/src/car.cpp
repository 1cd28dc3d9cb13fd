#include "fermichain/car.hpp"

#include <algorithm>
#include <cmath>

#include "fermichain/errors.hpp"
#include "fermichain/tolerance.hpp"

namespace fermichain {

ChainWindow::ChainWindow(std::vector<SiteSpec> sites) : sites_(std::move(sites)) {
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        if (sites_[i].modes <= 0) fail("BadWindow", "every site needs at least one mode");
        if (i > 0 && sites_[i].index <= sites_[i - 1].index)
            fail("BadWindow", "site indices must be strictly increasing");
        offsets_.push_back(total_);
        total_ += sites_[i].modes;
    }
    if (total_ > 30) fail("WindowTooLarge", "more than 30 modes cannot be materialized");
}

ChainWindow ChainWindow::uniform(int first, int last, int d) {
    std::vector<SiteSpec> s;
    for (int i = first; i <= last; ++i) s.push_back({i, d});
    return ChainWindow(std::move(s));
}

int ChainWindow::position_of(int site_index) const {
    for (std::size_t i = 0; i < sites_.size(); ++i)
        if (sites_[i].index == site_index) return int(i);
    fail("SiteOutOfRange", "site " + std::to_string(site_index) + " is not in the window");
}

int ChainWindow::global_mode(int site_index, int mode) const {
    const int pos = position_of(site_index);
    if (mode < 0 || mode >= sites_[std::size_t(pos)].modes)
        fail("ModeOutOfRange", "mode " + std::to_string(mode) + " not on site " + std::to_string(site_index));
    return offsets_[std::size_t(pos)] + mode;
}

std::vector<bool> ChainWindow::mode_mask(const std::vector<int>& positions) const {
    std::vector<bool> mask(std::size_t(total_), false);
    for (int p : positions) {
        if (p < 0 || p >= site_count()) fail("SiteOutOfRange", "site position outside window");
        for (int k = 0; k < modes_of(p); ++k) mask[std::size_t(mode_offset(p) + k)] = true;
    }
    return mask;
}

CMatrix pauli_z() { return CMatrix::diag_real({1.0, -1.0}); }

CMatrix local_annihilator() {
    CMatrix a(2);
    a(0, 1) = 1.0;
    return a;
}

CMatrix local_unit(int k, int l) { return CMatrix::unit(2, std::size_t(k - 1), std::size_t(l - 1)); }

namespace {
CMatrix ident(int modes) { return CMatrix::identity(std::size_t(1) << modes); }

CMatrix z_string(int modes) {
    std::vector<double> d(std::size_t(1) << modes);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (__builtin_popcountll(i) & 1) ? -1.0 : 1.0;
    return CMatrix::diag_real(d);
}

std::uint64_t spread_bits(std::uint64_t x) {
    std::uint64_t r = 0;
    for (int k = 0; x; ++k, x >>= 1)
        if (x & 1) r |= std::uint64_t(1) << (2 * k);
    return r;
}
}  // namespace

int modes_of_dim(std::size_t dim) {
    int m = 0;
    while ((std::size_t(1) << m) < dim) ++m;
    if ((std::size_t(1) << m) != dim) fail("BadShape", "dimension is not a power of two");
    return m;
}

CMatrix matrix_unit(int total_modes, int q, int k, int l) {
    if (q < 0 || q >= total_modes) fail("ModeOutOfRange", "mode index outside window");
    return kron(kron(ident(q), local_unit(k, l)), ident(total_modes - q - 1));
}

CMatrix matrix_unit(const ChainWindow& w, int site_index, int mode, int k, int l) {
    return matrix_unit(w.total_modes(), w.global_mode(site_index, mode), k, l);
}

CMatrix annihilator(int total_modes, int q) {
    if (q < 0 || q >= total_modes) fail("ModeOutOfRange", "mode index outside window");
    return kron(kron(z_string(q), local_annihilator()), ident(total_modes - q - 1));
}

CMatrix annihilator(const ChainWindow& w, int site_index, int mode) {
    return annihilator(w.total_modes(), w.global_mode(site_index, mode));
}

CMatrix creator(const ChainWindow& w, int site_index, int mode) { return annihilator(w, site_index, mode).adjoint(); }

std::vector<int> parity_signs(int total_modes) {
    std::vector<int> s(std::size_t(1) << total_modes);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (__builtin_popcountll(i) & 1) ? -1 : 1;
    return s;
}

CMatrix parity_unitary(int total_modes) { return z_string(total_modes); }
CMatrix parity_unitary(const ChainWindow& w) { return z_string(w.total_modes()); }

CMatrix theta(const CMatrix& x) {
    CMatrix y = x;
    const std::size_t n = x.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if ((__builtin_popcountll(i ^ j) & 1) != 0) y(i, j) = -y(i, j);
    return y;
}

GradedParts graded_parts(const CMatrix& x) {
    GradedParts g{CMatrix(x.rows()), CMatrix(x.rows())};
    const std::size_t n = x.rows();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if ((__builtin_popcountll(i ^ j) & 1) == 0)
                g.even(i, j) = x(i, j);
            else
                g.odd(i, j) = x(i, j);
        }
    return g;
}

double oddness(const CMatrix& x) { return graded_parts(x).odd.frob(); }
CMatrix even_part(const CMatrix& x) { return graded_parts(x).even; }

int homogeneous_parity(const CMatrix& x, double tol) {
    auto g = graded_parts(x);
    const double scale = std::max(x.frob(), 1e-300);
    if (g.odd.frob() <= tol * scale) return 0;
    if (g.even.frob() <= tol * scale) return 1;
    return -1;
}

// ---------------------------------------------------------------- monomials

std::vector<cplx> monomial_coefficients(const CMatrix& x) {
    const int m = modes_of_dim(x.rows());
    const std::size_t n = x.rows();
    std::vector<cplx> c(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t si = spread_bits(i) << 1;
        for (std::size_t j = 0; j < n; ++j) c[si | spread_bits(j)] = x(i, j);
    }
    // per-mode 4-point transform: (x11, x12, x21, x22) -> (I, Z, e12, e21)
    for (int q = 0; q < m; ++q) {
        const std::size_t stride = std::size_t(1) << (2 * (m - 1 - q));
        for (std::size_t base = 0; base < c.size(); ++base) {
            if ((base / stride) % 4 != 0) continue;
            cplx& v0 = c[base];
            cplx& v1 = c[base + stride];
            cplx& v2 = c[base + 2 * stride];
            cplx& v3 = c[base + 3 * stride];
            const cplx x11 = v0, x12 = v1, x21 = v2, x22 = v3;
            v0 = 0.5 * (x11 + x22);
            v1 = 0.5 * (x11 - x22);
            v2 = x12;
            v3 = x21;
        }
    }
    return c;
}

CMatrix from_monomial_coefficients(const std::vector<cplx>& coeffs, int m) {
    std::vector<cplx> c = coeffs;
    const std::size_t n = std::size_t(1) << m;
    if (c.size() != n * n) fail("BadShape", "coefficient count does not match mode count");
    for (int q = 0; q < m; ++q) {
        const std::size_t stride = std::size_t(1) << (2 * (m - 1 - q));
        for (std::size_t base = 0; base < c.size(); ++base) {
            if ((base / stride) % 4 != 0) continue;
            cplx& v0 = c[base];
            cplx& v1 = c[base + stride];
            cplx& v2 = c[base + 2 * stride];
            cplx& v3 = c[base + 3 * stride];
            const cplx ci = v0, cz = v1, c12 = v2, c21 = v3;
            v0 = ci + cz;
            v1 = c12;
            v2 = c21;
            v3 = ci - cz;
        }
    }
    CMatrix x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t si = spread_bits(i) << 1;
        for (std::size_t j = 0; j < n; ++j) x(i, j) = c[si | spread_bits(j)];
    }
    return x;
}

std::vector<int> monomial_digits(std::size_t index, int m) {
    std::vector<int> d(static_cast<std::size_t>(m));
    for (int q = m - 1; q >= 0; --q) {
        d[std::size_t(q)] = int(index & 3);
        index >>= 2;
    }
    return d;
}

std::size_t monomial_index(const std::vector<int>& digits) {
    std::size_t idx = 0;
    for (int d : digits) idx = idx * 4 + std::size_t(d);
    return idx;
}

namespace {
CMatrix digit_matrix(int d) {
    switch (d) {
        case 0: return CMatrix::identity(2);
        case 1: return pauli_z();
        case 2: return local_unit(1, 2);
        default: return local_unit(2, 1);
    }
}
}  // namespace

CMatrix tensor_monomial(const std::vector<int>& digits) {
    CMatrix x = CMatrix::identity(1);
    for (int d : digits) x = kron(x, digit_matrix(d));
    return x;
}

double monomial_norm2(const std::vector<int>& digits) {
    double r = 1.0;
    for (int d : digits)
        if (d >= 2) r *= 0.5;
    return r;
}

std::pair<std::vector<int>, int> fermionic_to_tensor(const std::vector<int>& f) {
    std::vector<int> t(f.size());
    int sign = 1;
    int later_odd = 0;
    for (std::size_t qq = f.size(); qq-- > 0;) {
        const int d = f[qq];
        // local factor times Z^{later_odd} on the right
        if (later_odd == 0) {
            t[qq] = d;
        } else {
            switch (d) {
                case 0: t[qq] = 1; break;  // I Z = Z
                case 1: t[qq] = 0; break;  // Z Z = I
                case 2: t[qq] = 2; sign = -sign; break;  // e12 Z = -e12
                default: t[qq] = 3; break;  // e21 Z = e21
            }
        }
        if (d >= 2) later_odd ^= 1;
    }
    return {t, sign};
}

CMatrix fermionic_monomial(const std::vector<int>& f) {
    auto [t, s] = fermionic_to_tensor(f);
    CMatrix x = tensor_monomial(t);
    if (s < 0) x *= -1.0;
    return x;
}

// ---------------------------------------------------------------- localization

LocalProjection project_local(const CMatrix& x, const ChainWindow& w, const std::vector<int>& positions) {
    if (x.rows() != w.dim()) fail("BadShape", "operator does not match window dimension");
    const std::vector<bool> in = w.mode_mask(positions);
    const int m = w.total_modes();
    auto c = monomial_coefficients(x);
    for (std::size_t idx = 0; idx < c.size(); ++idx) {
        if (c[idx] == cplx(0.0, 0.0)) continue;
        std::size_t rest = idx;
        // scan modes right to left tracking the parity of odd factors in the region
        int later_odd = 0;
        bool keep = true;
        for (int q = m - 1; q >= 0 && keep; --q) {
            const int d = int(rest & 3);
            rest >>= 2;
            if (in[std::size_t(q)]) {
                if (d >= 2) later_odd ^= 1;
            } else if (d != (later_odd ? 1 : 0)) {
                keep = false;
            }
        }
        if (!keep) c[idx] = 0.0;
    }
    LocalProjection out;
    out.projected = from_monomial_coefficients(c, m);
    out.distance = frob_distance(x, out.projected);
    return out;
}

LocalProjection project_local_interval(const CMatrix& x, const ChainWindow& w, int first_site, int last_site) {
    std::vector<int> pos;
    for (int s = first_site; s <= last_site; ++s) pos.push_back(w.position_of(s));
    return project_local(x, w, pos);
}

// ---------------------------------------------------------------- traces

cplx tr(const CMatrix& x) { return x.trace(); }
cplx tau(const CMatrix& x) { return x.trace() / double(x.rows()); }

CMatrix adjusted_density(const CMatrix& t) {
    if (std::abs(t.trace() - 1.0) > tol().state_trace)
        fail("NotAState", "trace of the density deviates from 1");
    return double(t.rows()) * t;
}

CMatrix tr_density_from_adjusted(const CMatrix& t) {
    if (std::abs(tau(t) - 1.0) > tol().state_trace)
        fail("NotAState", "normalized trace of the adjusted density deviates from 1");
    return (1.0 / double(t.rows())) * t;
}

bool density_is_even(const CMatrix& t, double tol_) { return oddness(t) <= tol_ * std::max(1.0, t.frob()); }

bool density_is_faithful(const CMatrix& t, double tol_) {
    auto ev = herm_eigenvalues(t);
    return !ev.empty() && ev.front() > tol_;
}

CMatrix product_state(const CMatrix& t1, const CMatrix& t2) {
    const double th = tol().theta;
    const bool e1 = density_is_even(t1, th), e2 = density_is_even(t2, th);
    if (!e1 && !e2) fail("NeitherEven", "product state extension needs one even factor");
    CMatrix t = t1 * t2;
    if (frob_distance(t, t2 * t1) > th * std::max(1.0, t.frob()))
        fail("NotCommuting", "densities of disjoint regions do not commute");
    return t;
}

// ---------------------------------------------------------------- embeddings

CMatrix embed_modes(const CMatrix& u, int first_mode, int total_modes, int parity) {
    const int k = modes_of_dim(u.rows());
    if (first_mode < 0 || first_mode + k > total_modes) fail("ModeOutOfRange", "embedding exceeds window");
    const CMatrix left = parity ? z_string(first_mode) : ident(first_mode);
    return kron(kron(left, u), ident(total_modes - first_mode - k));
}

CMatrix embed_sites(const CMatrix& u, const ChainWindow& w, int first_pos, int parity) {
    return embed_modes(u, w.mode_offset(first_pos), w.total_modes(), parity);
}

}  // namespace fermichain
