#include "fermichain/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fermichain/car.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/tolerance.hpp"

namespace fermichain {

double von_neumann_entropy(const CMatrix& t) {
    if (!t.square() || t.rows() == 0) fail("NotDensity", "density must be a nonempty square matrix");
    if (!t.is_hermitian(tol().hermitian * std::max(1.0, t.frob()))) fail("NotDensity", "density is not Hermitian");
    if (std::abs(t.trace() - cplx(1.0)) > tol().state_trace) fail("NotDensity", "trace differs from one");
    const auto ev = herm_eigenvalues(hermitian_part(t));
    if (ev.front() < -tol().psd) fail("NotDensity", "negative eigenvalue " + std::to_string(ev.front()));
    double s = 0;
    for (double l : ev)
        if (l > 0) s -= l * std::log(l);
    return s;
}

// ---------------------------------------------------------------- entropy

EntropyIncrements entropy_increments(const LocalState& state, int n_max, int first_site) {
    if (!state.homogeneous()) fail("NotHomogeneous", "entropy increments need a translation invariant state");
    if (n_max < 1) fail("SiteOutOfRange", "n_max must be at least 1");
    EntropyIncrements out;
    out.first_site = first_site;
    // largest window first, so a window beyond the budget fails before any work
    out.window_entropy.resize(std::size_t(n_max) + 1);
    for (int n = n_max; n >= 0; --n) out.window_entropy[std::size_t(n)] = state.window_entropy(first_site, first_site + n);
    for (int n = 1; n <= n_max; ++n)
        out.increments.push_back(out.window_entropy[std::size_t(n)] - out.window_entropy[std::size_t(n - 1)]);
    for (double d : out.increments) out.flatness = std::max(out.flatness, std::abs(d - out.increments.front()));
    return out;
}

MeanEntropy mean_entropy(const LocalState& state, int n_max) {
    if (!state.homogeneous()) fail("NotHomogeneous", "mean entropy needs a translation invariant state");
    MeanEntropy out;
    std::vector<double> s;
    for (int n = 0; n <= std::max(n_max, 1); ++n) s.push_back(state.window_entropy(0, n));
    out.s = s[1] - s[0];
    for (int n = 0; n <= n_max; ++n) out.empirical.push_back(s[std::size_t(n)] / double(n + 1));
    return out;
}

// ---------------------------------------------------------------- cocycles

namespace {

ChainWindow window_of(const LocalState& state, int k, int l) {
    std::vector<SiteSpec> s;
    for (int j = k; j <= l; ++j) s.push_back({j, state.site_modes(j)});
    return ChainWindow(s);
}

// spectral data of a faithful tr-density
struct Spectral {
    HermEig e;
    CMatrix power(double t) const {
        const std::size_t n = e.values.size();
        CMatrix scaled = e.vectors;
        for (std::size_t j = 0; j < n; ++j) {
            const cplx f = std::exp(cplx(0, t * std::log(e.values[j])));
            for (std::size_t i = 0; i < n; ++i) scaled(i, j) *= f;
        }
        return scaled * e.vectors.adjoint();
    }
};

Spectral faithful_spectral(const CMatrix& adjusted, const char* what) {
    const CMatrix d = (1.0 / double(adjusted.rows())) * hermitian_part(adjusted);
    Spectral s{herm_eig(d)};
    if (s.e.values.front() <= tol().faithful_density)
        fail("NotFaithful", std::string(what) + " has minimum eigenvalue " + std::to_string(s.e.values.front()));
    return s;
}

CocycleReport cocycle_from(const Spectral& big, const Spectral& small, std::size_t tail, const ChainWindow& w, int k,
                           int n, double t) {
    CocycleReport r;
    r.k = k;
    r.n = n;
    r.t = t;
    r.w = big.power(t) * kron(small.power(-t), CMatrix::identity(tail));
    const int last = w.site_count() - 1;
    r.localization_distance = project_local(r.w, w, {last - 1, last}).distance;
    r.evenness_distance = graded_parts(r.w).odd.frob();
    r.unitarity_residual = frob_distance(r.w * r.w.adjoint(), CMatrix::identity(r.w.rows()));
    return r;
}

}  // namespace

CocycleReport transition_cocycle(const LocalState& state, int k, int n, double t) {
    if (n < k) fail("SiteOutOfRange", "cocycle needs n >= k");
    const Spectral big = faithful_spectral(state.window_density(k, n + 1), "marginal on [k, n+1]");
    const Spectral small = faithful_spectral(state.window_density(k, n), "marginal on [k, n]");
    const auto tail = std::size_t(1) << state.site_modes(n + 1);
    return cocycle_from(big, small, tail, window_of(state, k, n + 1), k, n, t);
}

MarkovTestReport markov_property_test(const LocalState& state, int k, int l, const std::vector<double>& t_grid) {
    if (l <= k) fail("SiteOutOfRange", "the test window needs at least two sites");
    if (t_grid.empty()) fail("InvalidArgument", "empty t grid");
    MarkovTestReport out;
    out.tolerance = tol().markov_test;
    out.k = k;
    out.l = l;
    out.t_grid = t_grid;
    std::vector<Spectral> spec;
    for (int n = k; n <= l; ++n) spec.push_back(faithful_spectral(state.window_density(k, n), "window marginal"));
    double worst = -1;
    for (int n = k; n < l; ++n) {
        const ChainWindow w = window_of(state, k, n + 1);
        const auto tail = std::size_t(1) << state.site_modes(n + 1);
        for (double t : t_grid) {
            const auto r = cocycle_from(spec[std::size_t(n + 1 - k)], spec[std::size_t(n - k)], tail, w, k, n, t);
            ++out.cocycles;
            out.worst_localization = std::max(out.worst_localization, r.localization_distance);
            out.worst_evenness = std::max(out.worst_evenness, r.evenness_distance);
            out.worst_unitarity = std::max(out.worst_unitarity, r.unitarity_residual);
            const double m = std::max(r.localization_distance, r.evenness_distance);
            if (m > worst) {
                worst = m;
                out.worst_n = n;
                out.worst_t = t;
            }
        }
    }
    out.passes = out.worst_localization <= out.tolerance && out.worst_evenness <= out.tolerance;
    return out;
}

// ---------------------------------------------------------------- modular flow

ModularFlow::ModularFlow(const CMatrix& density) {
    eig_ = herm_eig(hermitian_part(density));
    if (eig_.values.front() <= tol().faithful_density)
        fail("NotFaithful", "density has minimum eigenvalue " + std::to_string(eig_.values.front()));
    modes_ = modes_of_dim(density.rows());
}

CMatrix ModularFlow::power(double t) const { return Spectral{eig_}.power(t); }

CMatrix ModularFlow::operator()(double t, const CMatrix& x) const { return power(-t) * x * power(t); }

double ModularFlow::group_law_residual(double t, double s) const {
    double r = 0;
    for (int q = 0; q < modes_; ++q)
        for (int a = 1; a <= 2; ++a)
            for (int b = 1; b <= 2; ++b) {
                const CMatrix x = matrix_unit(modes_, q, a, b);
                r = std::max(r, frob_distance((*this)(t, (*this)(s, x)), (*this)(t + s, x)));
            }
    return r;
}

double ModularFlow::homomorphism_residual(double t) const {
    std::vector<CMatrix> gens;
    for (int q = 0; q < modes_; ++q)
        for (int a = 1; a <= 2; ++a)
            for (int b = 1; b <= 2; ++b) gens.push_back(matrix_unit(modes_, q, a, b));
    std::vector<CMatrix> img;
    for (const auto& g : gens) img.push_back((*this)(t, g));
    double r = 0;
    for (std::size_t i = 0; i < gens.size(); ++i)
        for (std::size_t j = 0; j < gens.size(); ++j)
            r = std::max(r, frob_distance((*this)(t, gens[i] * gens[j]), img[i] * img[j]));
    return r;
}

// ---------------------------------------------------------------- odd-odd correlations

namespace {

// row -> (column, value) form of a tensor monomial; column npos marks a zero row
struct SparseMonomial {
    std::vector<std::size_t> col;
    std::vector<cplx> val;
};
constexpr std::size_t kNone = std::size_t(-1);

SparseMonomial sparse_of(const std::vector<int>& tdigits, double scale) {
    const int m = int(tdigits.size());
    const std::size_t dim = std::size_t(1) << m;
    SparseMonomial s{std::vector<std::size_t>(dim, kNone), std::vector<cplx>(dim, 0.0)};
    for (std::size_t row = 0; row < dim; ++row) {
        std::size_t c = 0;
        double v = scale;
        bool zero = false;
        for (int q = 0; q < m && !zero; ++q) {
            const int bit = int((row >> (m - 1 - q)) & 1u);
            int cb = bit;
            switch (tdigits[std::size_t(q)]) {
                case 1: if (bit) v = -v; break;
                case 2: if (bit) zero = true; else cb = 1; break;
                case 3: if (!bit) zero = true; else cb = 0; break;
                default: break;
            }
            c = (c << 1) | std::size_t(cb);
        }
        if (zero) continue;
        s.col[row] = c;
        s.val[row] = v;
    }
    return s;
}

struct OddElement {
    std::vector<int> fdigits;
    SparseMonomial m;
};

// odd fermionic monomials supported on the given modes, tau-normalized
std::vector<OddElement> odd_basis(const std::vector<int>& modes, int total) {
    std::vector<OddElement> out;
    const std::size_t count = std::size_t(1) << (2 * modes.size());
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::vector<int> f(std::size_t(total), 0);
        int odd = 0;
        for (std::size_t i = 0; i < modes.size(); ++i) {
            const int d = int((idx >> (2 * (modes.size() - 1 - i))) & 3u);
            f[std::size_t(modes[i])] = d;
            if (d >= 2) ++odd;
        }
        if (odd % 2 == 0) continue;
        const auto [tdig, sign] = fermionic_to_tensor(f);
        const double scale = double(sign) / std::sqrt(monomial_norm2(tdig));
        out.push_back({f, sparse_of(tdig, scale)});
    }
    return out;
}

std::string label_of(const std::vector<int>& f, const ChainWindow& w) {
    static const char* names[] = {"", "U", "a", "a+"};
    std::string s;
    for (int pos = 0; pos < w.site_count(); ++pos)
        for (int mo = 0; mo < w.modes_of(pos); ++mo) {
            const int d = f[std::size_t(w.mode_offset(pos) + mo)];
            if (d == 0) continue;
            if (!s.empty()) s += ' ';
            s += std::string(names[d]) + "(" + std::to_string(w.sites()[std::size_t(pos)].index) + "," +
                 std::to_string(mo) + ")";
        }
    return s;
}

std::vector<int> modes_of_region(const ChainWindow& w, const std::vector<int>& region) {
    std::vector<int> out;
    for (int site : region) {
        const int pos = w.position_of(site);
        for (int mo = 0; mo < w.modes_of(pos); ++mo) out.push_back(w.mode_offset(pos) + mo);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

EntanglementCertificate moriya_certificate(const LocalState& state, int k, int l, const std::vector<int>& region1,
                                           const std::vector<int>& region2) {
    if (region1.empty() || region2.empty()) fail("SiteOutOfRange", "regions must be nonempty");
    const std::set<int> s1(region1.begin(), region1.end());
    for (int x : region2)
        if (s1.count(x)) fail("OverlappingRegions", "site " + std::to_string(x) + " is in both regions");
    for (int x : region1)
        if (x < k || x > l) fail("SiteOutOfRange", "region site outside the window");
    for (int x : region2)
        if (x < k || x > l) fail("SiteOutOfRange", "region site outside the window");

    const ChainWindow w = window_of(state, k, l);
    const auto b1 = odd_basis(modes_of_region(w, region1), w.total_modes());
    const auto b2 = odd_basis(modes_of_region(w, region2), w.total_modes());
    const std::size_t dim = w.dim();
    if (double(b1.size()) * double(b2.size()) * double(dim) > 4e9)
        fail("WindowTooLarge", "too many odd pairs for an exhaustive search");
    const CMatrix t = (1.0 / double(dim)) * state.window_density(k, l);

    EntanglementCertificate out;
    out.k = k;
    out.l = l;
    out.region1 = region1;
    out.region2 = region2;
    out.threshold = tol().moriya;
    std::size_t bx = 0, by = 0;
    for (std::size_t i = 0; i < b1.size(); ++i)
        for (std::size_t j = 0; j < b2.size(); ++j) {
            const auto& x = b1[i].m;
            const auto& y = b2[j].m;
            // tr(T x y) = sum_row (xy)(row, c) T(c, row)
            cplx acc = 0;
            for (std::size_t row = 0; row < dim; ++row) {
                const std::size_t c1 = x.col[row];
                if (c1 == kNone) continue;
                const std::size_t c2 = y.col[c1];
                if (c2 == kNone) continue;
                acc += x.val[row] * y.val[c1] * t(c2, row);
            }
            ++out.pairs_tested;
            if (std::abs(acc) > out.max_abs) {
                out.max_abs = std::abs(acc);
                out.correlation = acc;
                bx = i;
                by = j;
            }
        }
    out.x_digits = b1[bx].fdigits;
    out.y_digits = b2[by].fdigits;
    out.x_label = label_of(out.x_digits, w);
    out.y_label = label_of(out.y_digits, w);
    out.entangled = out.max_abs > out.threshold;
    out.note = out.entangled
                   ? "nonzero odd-odd correlation: the state is not separable across the two regions"
                   : "no certificate: vanishing odd-odd correlations do not show separability";
    return out;
}

// ---------------------------------------------------------------- fault state

SecondOrderClassicalState::SecondOrderClassicalState(double flip, int mode_budget) : flip_(flip), budget_(mode_budget) {
    if (!(flip > 0.0 && flip < 1.0)) fail("InvalidArgument", "flip probability must lie in (0, 1)");
}

CMatrix SecondOrderClassicalState::window_density(int k, int l) const {
    if (k < 0 || l < k) fail("SiteOutOfRange", "empty window");
    const int m = l - k + 1;
    if (m > budget_) fail("WindowTooLarge", std::to_string(m) + " modes exceed the budget");
    const std::size_t dim = std::size_t(1) << m;
    std::vector<double> p(dim);
    for (std::size_t idx = 0; idx < dim; ++idx) {
        auto bit = [&](int i) { return int((idx >> (m - 1 - i)) & 1u); };
        // the pair law is uniform, so any window starts with weight 1/2 or 1/4
        double w = m == 1 ? 0.5 : 0.25;
        for (int i = 2; i < m; ++i) w *= bit(i) == (bit(i - 1) ^ bit(i - 2)) ? 1.0 - flip_ : flip_;
        p[idx] = double(dim) * w;
    }
    return CMatrix::diag_real(p);
}

}  // namespace fermichain
