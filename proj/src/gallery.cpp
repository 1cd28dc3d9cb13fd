#include "fermichain/gallery.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fermichain/algebra.hpp"
#include "fermichain/car.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/tolerance.hpp"

namespace fermichain {

namespace {

const std::vector<std::string> kIds = {"1",  "2",  "3",  "4a", "4b", "5a", "5b", "5c", "5d", "6a",
                                       "6b", "7a", "7b", "8a", "8b", "9",  "10a", "10b"};

// two-site window of d + d modes
struct Ops {
    int d = 1;
    std::size_t d0 = 2, d1 = 2;
    CMatrix i0, i1;

    explicit Ops(int modes) : d(modes), d0(std::size_t(1) << modes), d1(d0), i0(CMatrix::identity(d0)), i1(i0) {}
    CMatrix e(int j, int k, int l) const { return matrix_unit(d, j - 1, k, l); }  // e_kl(j), site 0
    CMatrix a(int j) const { return annihilator(d, j - 1); }
    CMatrix emb0(const CMatrix& x) const { return kron(x, i1); }
    CMatrix restrict0(const CMatrix& x) const { return (1.0 / double(d1)) * partial_trace_last(x, d0, d1); }
    // phi(y) for a next-site density r and y localized on the next site
    cplx phi1(const CMatrix& r, const CMatrix& y) const { return trace_of_product(kron(i0, r), y) / double(d0); }
    // Tr(x e) on site 0 for x localized on site 0
    cplx tr0(const CMatrix& x, const CMatrix& e) const { return trace_of_product(x, emb0(e)) / double(d1); }
};

// w = x y with x, y window-embedded; digits of the two factors
struct PairXY {
    CMatrix x, y, w;
    std::vector<int> xd, yd;
};
using Formula = std::function<CMatrix(const PairXY&)>;

enum class Split { Fermionic, Tensor };

struct Part {
    TransitionBlockSpec block;
    Formula f;
};

struct CaseDef {
    int d = 2;
    std::vector<Part> parts;
    Split split = Split::Fermionic;
    int split_mode = 0;  // fermionic split: x on modes [0, split_mode)
    Formula whole;       // overrides the sum of the part formulas
    std::optional<std::size_t> center, orbits;
    std::string description;
};

// reads named block states, fills defaults, records slots
class Slots {
public:
    Slots(const Ops& o, const std::map<std::string, CMatrix>& given) : o_(o), given_(given) {}

    CMatrix site(const std::string& name) {
        StateSlot s{name, SlotKind::Site, {}, true, false};
        return take(s, (1.0 / double(o_.d1)) * o_.i1, o_.d1);
    }
    CMatrix tensor(const std::string& name) {
        StateSlot s{name, SlotKind::Tensor, {}, false, false};
        return take(s, (1.0 / double(o_.d1)) * o_.i1, o_.d1);
    }
    CMatrix corner(const std::string& name, const CMatrix& p0, bool even, bool faithful = false) {
        const CMatrix pp = o_.emb0(p0);
        StateSlot s{name, SlotKind::Corner, pp, even, faithful};
        return take(s, (1.0 / pp.trace().real()) * pp, o_.d0 * o_.d1);
    }

    std::vector<StateSlot> slots;
    std::map<std::string, CMatrix> used;
    std::vector<std::string> defaulted;

private:
    CMatrix take(const StateSlot& s, const CMatrix& dflt, std::size_t dim) {
        slots.push_back(s);
        auto it = given_.find(s.name);
        if (it == given_.end()) {
            used[s.name] = dflt;
            defaulted.push_back(s.name);
            return dflt;
        }
        const CMatrix& r = it->second;
        const std::string what = "block state '" + s.name + "'";
        if (r.rows() != dim || !r.square()) fail("BadParams", what + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
        if (!r.is_hermitian(tol().hermitian * std::max(1.0, r.frob()))) fail("BadParams", what + " is not Hermitian");
        if (std::abs(r.trace() - cplx(1.0)) > tol().state_trace) fail("BadParams", what + " does not have trace 1");
        if (herm_eigenvalues(hermitian_part(r)).front() < -tol().psd) fail("BadParams", what + " is not positive");
        if (s.even && oddness(r) > tol().theta) fail("BadParams", what + " is not even");
        if (s.kind == SlotKind::Corner) {
            if (frob_distance(s.support * r * s.support, r) > tol().unit)
                fail("BadParams", what + " is not supported on its corner");
            if (s.faithful) {
                const CMatrix shifted = r + (CMatrix::identity(dim) - s.support);
                if (herm_eigenvalues(hermitian_part(shifted)).front() <= tol().faithful_density)
                    fail("BadParams", what + " is not faithful on its corner");
            }
        }
        used[s.name] = r;
        return r;
    }

    const Ops& o_;
    const std::map<std::string, CMatrix>& given_;
};

// ---- the four shapes that recur through the cases

// Tr(x e) phi(y) e, e a minimal even projection
Part trace_term(const Ops& o, const CMatrix& e, const CMatrix& r) {
    return {{OrbitKind::Single, e, scalars(e), kron(e, r)},
            [o, e, r](const PairXY& p) { return (o.tr0(p.x, e) * o.phi1(r, p.y)) * e; }};
}

// phi(y) P x P
Part compress_term(const Ops& o, const CMatrix& pr, const CMatrix& r) {
    return {{OrbitKind::Single, pr, full_corner(pr), (1.0 / pr.trace().real()) * kron(pr, r)},
            [o, pr, r](const PairXY& p) { return o.phi1(r, p.y) * (pr * o.restrict0(p.x) * pr); }};
}

// phi(P w P) P
Part corner_single(const CMatrix& pr, const CMatrix& phi) {
    return {{OrbitKind::Single, pr, scalars(pr), phi},
            [pr, phi](const PairXY& p) { return trace_of_product(phi, p.w) * pr; }};
}

// phi(P w P) P + phi(P Theta(w) P) Theta(P)
Part corner_double(const CMatrix& pr, const CMatrix& phi) {
    const CMatrix tp = theta(pr);
    return {{OrbitKind::Double, pr, scalars(pr), phi}, [pr, tp, phi](const PairXY& p) {
                return trace_of_product(phi, p.w) * pr + trace_of_product(phi, theta(p.w)) * tp;
            }};
}

CMatrix half_projection(const CMatrix& a, cplx chi) {
    const CMatrix id = CMatrix::identity(a.rows());
    return 0.5 * (id + chi * a + std::conj(chi) * a.adjoint());
}

CaseDef define_case(const std::string& id, const Ops& o, Slots& s, cplx chi, cplx eta, const CMatrix* eta_state) {
    CaseDef c;
    c.d = o.d;
    if (id == "1") {
        const CMatrix q = half_projection(o.a(1), chi);
        CMatrix st = eta_state ? *eta_state : s.corner("eta", q, false, true);
        if (eta_state) {
            s.slots.push_back({"eta", SlotKind::Corner, o.emb0(q), false, true});
            s.used["eta"] = st;
        }
        c.parts.push_back(corner_double(q, st));
        c.center = 2;
        c.orbits = 1;
        c.description = "one mode per site, range center C^2 swapped by Theta";
    } else if (id == "2") {
        for (int i = 1; i <= 2; ++i)
            for (int j = 1; j <= 2; ++j) {
                const CMatrix e = o.e(1, i, i) * o.e(2, j, j);
                c.parts.push_back(trace_term(o, e, s.site("phi_" + std::to_string(i) + std::to_string(j))));
            }
        c.center = 4;
        c.orbits = 4;
        c.description = "range center C^4 spanned by the diagonal matrix units, each fixed by Theta";
    } else if (id == "3") {
        const CMatrix q = half_projection(o.a(2), chi);
        for (int j = 1; j <= 2; ++j)
            c.parts.push_back(trace_term(o, o.e(1, 1, 1) * o.e(2, j, j), s.site("phi_" + std::to_string(j))));
        const CMatrix p1 = o.e(1, 2, 2) * q;
        c.parts.push_back(corner_double(p1, s.corner("phi", p1, false)));
        c.center = 4;
        c.orbits = 3;
        c.description = "range center C^4 with one Theta-swapped pair e22(1)Q_{+-chi}";
    } else if (id == "4a") {
        const CMatrix q = half_projection(o.a(2), chi);
        for (int i = 1; i <= 2; ++i) {
            const CMatrix p1 = o.e(1, i, i) * q;
            c.parts.push_back(corner_double(p1, s.corner("phi_" + std::to_string(i), p1, false)));
        }
        c.center = 4;
        c.orbits = 2;
        c.description = "range center C^4 generated by e_ii(1)Q_{+-chi}, two Theta-swapped pairs";
    } else if (id == "4b") {
        const CMatrix v = o.a(1).adjoint() * o.a(1) - o.a(1) * o.a(1).adjoint();
        auto pce = [&](cplx x, cplx y) {
            const CMatrix id0 = o.i0;
            const CMatrix f1 = id0 + x * o.a(1) + std::conj(x) * o.a(1).adjoint();
            const CMatrix f2 = id0 + y * (v * o.a(2)) + std::conj(y) * (v * o.a(2).adjoint());
            return 0.25 * (f1 * f2);
        };
        const CMatrix pp = pce(chi, eta), pm = pce(-chi, eta);
        c.parts.push_back(corner_double(pp, s.corner("phi_plus", pp, false)));
        c.parts.push_back(corner_double(pm, s.corner("phi_minus", pm, false)));
        c.center = 4;
        c.orbits = 2;
        c.description = "range center C^4 generated by P_{+-chi,+-eta}, two Theta-swapped pairs";
    } else if (id == "5a" || id == "5b" || id == "5c" || id == "5d") {
        const bool p_variant = id == "5c" || id == "5d";
        for (int j = 1; j <= 2; ++j) {
            const CMatrix e = p_variant ? o.e(1, j, j) * o.e(2, j, j) : o.e(1, 1, 1) * o.e(2, j, j);
            c.parts.push_back(trace_term(o, e, s.site("phi_" + std::to_string(j))));
        }
        const CMatrix pr = p_variant ? o.e(1, 1, 1) * o.e(2, 2, 2) + o.e(1, 2, 2) * o.e(2, 1, 1) : o.e(1, 2, 2);
        if (id == "5a" || id == "5c")
            c.parts.push_back(compress_term(o, pr, s.site("phi")));
        else
            c.parts.push_back(corner_single(pr, s.corner("phi", pr, true)));
        c.center = 3;
        c.orbits = 3;
        c.description = p_variant ? "range center C^3 fixed by Theta, third block P = e_(12)(12) + e_(21)(21) (even range)"
                                  : "range center C^3 fixed by Theta, third block e22(1)";
    } else if (id == "6a" || id == "6b") {
        const CMatrix q = half_projection(o.a(2), chi);
        const CMatrix p1 = o.e(1, 1, 1) * q;
        c.parts.push_back(corner_double(p1, s.corner("phi", p1, false)));
        const CMatrix e22 = o.e(1, 2, 2);
        if (id == "6a")
            c.parts.push_back(compress_term(o, e22, s.site("psi")));
        else
            c.parts.push_back(corner_single(e22, s.corner("psi", e22, true)));
        c.center = 3;
        c.orbits = 2;
        c.description = "range center C^3: Theta-swapped pair e11(1)Q_{+-chi} and fixed e22(1)";
    } else if (id == "7a" || id == "7b") {
        const CMatrix p = o.e(1, 1, 1) * o.e(2, 1, 1);
        const CMatrix pp = o.i0 - p;
        c.parts.push_back(trace_term(o, p, s.site("phi")));
        if (id == "7a")
            c.parts.push_back(compress_term(o, pp, s.site("psi")));
        else
            c.parts.push_back(corner_single(pp, s.corner("psi", pp, true)));
        c.center = 2;
        c.orbits = 2;
        c.description = "range center C^2 = span{p, p^perp}, p = e_(11)(11)";
    } else if (id == "8a") {
        const CMatrix q = half_projection(o.a(2), chi);
        c.parts.push_back(corner_double(q, s.corner("phi", q, false)));
        c.center = 2;
        c.orbits = 1;
        c.description = "range center C^2 = span{Q_chi, Q_-chi}, one orbit, scalar blocks";
    } else if (id == "8b") {
        const CMatrix q = half_projection(o.a(2), chi);
        const CMatrix qm = theta(q);
        const CMatrix r = s.tensor("phi");
        c.parts.push_back({{OrbitKind::Double, q, full_corner(q), (1.0 / q.trace().real()) * kron(q, r)}, nullptr});
        c.split = Split::Tensor;
        c.whole = [o, q, qm, r](const PairXY& p) {
            const CMatrix x = o.restrict0(p.x);
            return o.phi1(r, p.y) * (q * x * q) + o.phi1(r, theta(p.y)) * (qm * x * qm);
        };
        c.center = 2;
        c.orbits = 1;
        c.description = "range center C^2 = span{Q_chi, Q_-chi}, blocks Q A_0 Q with a state on the tensor completion";
    } else if (id == "9") {
        const CMatrix phi = s.corner("phi", o.i0, true);
        c.parts.push_back({{OrbitKind::Single, o.i0, algebra_closure({o.a(1)}, o.i0), phi}, nullptr});
        c.split_mode = 1;
        c.whole = [o, phi](const PairXY& p) { return trace_of_product(phi, p.y) * o.restrict0(p.x); };
        c.center = 1;
        c.orbits = 1;
        c.description = "trivial range center, range alg(a_1)";
    } else if (id == "10a") {
        std::vector<CMatrix> pr, phis;
        for (int i = 1; i <= 2; ++i) {
            pr.push_back(o.e(1, i, i));
            phis.push_back(s.corner("phi_" + std::to_string(i), pr.back(), true));
            c.parts.push_back({{OrbitKind::Single, pr.back(), algebra_closure({pr.back() * o.a(2)}, pr.back()), phis.back()},
                               nullptr});
        }
        c.split_mode = 2;
        c.whole = [o, pr, phis](const PairXY& p) {
            const CMatrix x = o.restrict0(p.x);
            CMatrix out(o.d0);
            for (std::size_t i = 0; i < 2; ++i) out += trace_of_product(phis[i], p.y) * (pr[i] * x * pr[i]);
            return out;
        };
        c.description = "three modes per site, blocks alg(e_ii(1)a_2) for i = 1, 2";
    } else if (id == "10b") {
        const CMatrix pc = half_projection(o.a(1), chi);
        std::vector<CMatrix> gens;
        for (int k = 1; k <= 2; ++k)
            for (int l = 1; l <= 2; ++l) gens.push_back(pc * o.e(2, k, l));
        const CMatrix phi = s.corner("phi", pc, false);
        c.parts.push_back({{OrbitKind::Double, pc, algebra_closure(gens, pc), phi}, nullptr});
        c.split = Split::Tensor;
        // P_s w P_s = <xi_s, b_0 xi_s> (P_s b_1) (P_s b_2 (x) b_next) for w = b_0 b_1 b_2 (x) b_next
        c.whole = [o, pc, phi, chi](const PairXY& p) {
            CMatrix out(o.d0);
            for (int s = 0; s < 2; ++s) {
                const cplx sg = s == 0 ? chi : -chi;
                const CMatrix q1 = half_projection(local_annihilator(), sg);
                const cplx c0 = trace_of_product(q1, tensor_monomial({p.xd[0]}));
                const CMatrix ps = s == 0 ? pc : theta(pc);
                const CMatrix xs = ps * tensor_monomial({0, p.xd[1], 0});
                const CMatrix ys = kron(ps * tensor_monomial({0, 0, p.xd[2]}), tensor_monomial(p.yd));
                const cplx val = s == 0 ? trace_of_product(phi, ys) : trace_of_product(phi, theta(ys));
                out += (c0 * val) * xs;
            }
            return out;
        };
        c.description = "three modes per site, blocks alg(P_{+-chi} e_ij(2)) swapped by Theta";
    } else {
        fail("BadParams", "unknown case '" + id + "'");
    }
    return c;
}

std::vector<std::vector<int>> digit_strings(int modes) {
    std::vector<std::vector<int>> out;
    const std::size_t n = std::size_t(1) << (2 * modes);
    for (std::size_t i = 0; i < n; ++i) out.push_back(monomial_digits(i, modes));
    return out;
}

std::vector<int> concat(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

// max ||eps(x y) - formula(x, y)||_F over a product basis of the window
double formula_residual(const TransitionExpectation& eps, const CaseDef& c, std::size_t& count) {
    const int total = 2 * c.d;
    Formula f = c.whole;
    if (!f) {
        std::vector<Formula> fs;
        for (const auto& p : c.parts) fs.push_back(p.f);
        f = [fs](const PairXY& p) {
            CMatrix out;
            for (const auto& g : fs) {
                CMatrix v = g(p);
                if (out.empty()) out = std::move(v);
                else out += v;
            }
            return out;
        };
    }
    const int k = c.split == Split::Tensor ? c.d : (c.split_mode > 0 ? c.split_mode : c.d);
    const auto xs = digit_strings(k), ys = digit_strings(total - k);
    std::vector<CMatrix> xm, ym;
    const std::vector<int> zx(std::size_t(total - k), 0), zy(std::size_t(k), 0);
    for (const auto& x : xs)
        xm.push_back(c.split == Split::Tensor ? tensor_monomial(concat(x, zx)) : fermionic_monomial(concat(x, zx)));
    for (const auto& y : ys)
        ym.push_back(c.split == Split::Tensor ? tensor_monomial(concat(zy, y)) : fermionic_monomial(concat(zy, y)));
    double worst = 0;
    count = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j) {
            PairXY p;
            p.xd = xs[i];
            p.yd = ys[j];
            p.x = xm[i];
            p.y = ym[j];
            const auto all = concat(xs[i], ys[j]);
            p.w = c.split == Split::Tensor ? tensor_monomial(all) : fermionic_monomial(all);
            worst = std::max(worst, frob_distance(eps.apply(p.w), f(p)));
            ++count;
        }
    return worst;
}

}  // namespace

std::vector<std::string> gallery_case_ids() { return kIds; }

std::string canonical_case_id(const std::string& id) {
    for (const auto& k : kIds)
        if (k == id) return id;
    for (const char* bare : {"4", "5", "6", "7", "8", "10"})
        if (id == bare) return id + "a";
    fail("BadParams", "unknown case '" + id + "' (expected 1, 2, 3, 4a..10b)");
}

int case_site_modes(const std::string& id) {
    const std::string c = canonical_case_id(id);
    if (c == "1") return 1;
    if (c == "10a" || c == "10b") return 3;
    return 2;
}

bool CaseResult::header_matches() const {
    if (expected_center_dim && *expected_center_dim != center_dim) return false;
    if (expected_orbits && *expected_orbits != orbits) return false;
    return true;
}

AutoEta eta_with_nonzero_delta(cplx chi) {
    if (std::abs(std::abs(chi) - 1.0) > 1e-12) fail("BadParams", "chi must lie on the unit circle");
    const Ops o(1);
    const CMatrix q1 = half_projection(o.a(1), chi);
    // xi, xi_perp: unit vectors of q_chi, q_-chi
    const HermEig e = herm_eig(q1);
    CMatrix xi(2, 1), xp(2, 1);
    for (std::size_t i = 0; i < 2; ++i) {
        xi(i, 0) = e.vectors(i, 1);
        xp(i, 0) = e.vectors(i, 0);
    }
    const CMatrix w = xi * xp.adjoint();
    const CMatrix a1 = annihilator(2, 1);
    const CMatrix odd1 = chi * a1 + std::conj(chi) * a1.adjoint();
    const CMatrix big = kron(w, o.i1) * odd1 * o.emb0(q1);  // W (chi a_1 + chi* a_1^+) q_chi
    const CMatrix x = 0.5 * big;

    // X on the corner q (x) I, basis xi (x) e_k
    CMatrix b(4, 2);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < 2; ++i) b(i * 2 + k, k) = xi(i, 0);
    const CMatrix m = b.adjoint() * x * b;
    const CMatrix h = hermitian_part(m);
    const CMatrix k = cplx(0, -0.5) * (m - m.adjoint());
    const HermEig eh = herm_eig(h.frob() >= k.frob() ? h : k);
    const std::size_t top = std::abs(eh.values[1]) >= std::abs(eh.values[0]) ? 1 : 0;
    const CMatrix v = b * CMatrix(2, 1, {eh.vectors(0, top), eh.vectors(1, top)});
    const CMatrix u = b * CMatrix(2, 1, {eh.vectors(0, 1 - top), eh.vectors(1, 1 - top)});
    const CMatrix e0 = v * v.adjoint(), e1 = u * u.adjoint();

    AutoEta out;
    out.beta = 0.5;
    auto mix = [&](double beta) { return beta * e0 + (1.0 - beta) * e1; };
    CMatrix eta = mix(out.beta);
    if (std::abs(trace_of_product(eta, x)) <= 1e-12) {
        out.beta = 1.0 / 3.0;
        eta = mix(out.beta);
    }
    out.eta = hermitian_part(eta);
    out.eta_x = trace_of_product(out.eta, x);
    out.delta = trace_of_product(out.eta, big);
    out.min_eigenvalue = std::min(out.beta, 1.0 - out.beta);
    return out;
}

std::vector<StateSlot> case_state_slots(const CaseParams& params) {
    const std::string id = canonical_case_id(params.case_id);
    const Ops o(case_site_modes(id));
    const std::map<std::string, CMatrix> none;
    Slots s(o, none);
    define_case(id, o, s, params.chi, params.eta, nullptr);
    return s.slots;
}

CaseResult build_case(const CaseParams& params) {
    const std::string id = canonical_case_id(params.case_id);
    if (std::abs(std::abs(params.chi) - 1.0) > 1e-12) fail("BadParams", "chi must lie on the unit circle");
    if (std::abs(std::abs(params.eta) - 1.0) > 1e-12) fail("BadParams", "eta must lie on the unit circle");
    if (params.auto_eta && id != "1") fail("BadParams", "automatic eta only exists for Case 1");
    const Ops o(case_site_modes(id));

    CaseResult r;
    r.case_id = id;
    r.site_modes = o.d;
    std::optional<AutoEta> ae;
    if (params.auto_eta) {
        if (params.states.count("eta")) fail("BadParams", "give either an explicit eta or the automatic one");
        ae = eta_with_nonzero_delta(params.chi);
    }
    Slots s(o, params.states);
    const CaseDef c = define_case(id, o, s, params.chi, params.eta, ae ? &ae->eta : nullptr);
    for (const auto& kv : params.states) {
        bool known = false;
        for (const auto& sl : s.slots) known = known || sl.name == kv.first;
        if (!known) fail("BadParams", "case " + id + " has no block state named '" + kv.first + "'");
    }
    r.states = s.used;
    r.defaulted = s.defaulted;
    r.auto_eta = ae;

    std::vector<BuiltBlock> blocks;
    try {
        for (const auto& p : c.parts) blocks.push_back(build_block(p.block, o.d));
    } catch (const FermiError& e) {
        fail("BadParams", std::string("block construction failed: ") + e.what());
    }
    r.eps = assemble(blocks, o.d, o.d);
    if (!r.eps.structure_error().empty()) fail("BadParams", r.eps.structure_error());
    r.formula_residual = formula_residual(r.eps, c, r.formula_basis);
    r.verification = verify_conditional_expectation(r.eps);
    r.center_dim = r.eps.central().projections.size();
    r.orbits = r.eps.central().orbits.size();
    r.expected_center_dim = c.center;
    r.expected_orbits = c.orbits;
    r.chain_class = classify(r.eps);
    r.description = c.description;

    if (id == "1") {
        // marginals with rho = tau
        r.spec = homogeneous_spec(r.eps, 0.5 * o.i0);
        const CMatrix q1 = half_projection(o.a(1), params.chi);
        const HermEig e = herm_eig(q1);
        CMatrix xi(2, 1), xp(2, 1);
        for (std::size_t i = 0; i < 2; ++i) {
            xi(i, 0) = e.vectors(i, 1);
            xp(i, 0) = e.vectors(i, 0);
        }
        const CMatrix a1 = annihilator(2, 1);
        const CMatrix big = kron(xi * xp.adjoint(), o.i1) * (params.chi * a1 + std::conj(params.chi) * a1.adjoint()) *
                            o.emb0(q1);
        r.delta = trace_of_product(r.states.at("eta"), big);
    } else {
        r.spec = homogeneous_spec(r.eps, std::nullopt);
    }
    const CMatrix pushed = partial_trace_first(r.eps.dual(r.spec.rho), o.d0, o.d1);
    r.stationary_residual = frob_distance(pushed, r.spec.rho);
    if (id == "1" && r.stationary_residual <= tol().state_trace) r.spec.stationary_initial = true;
    return r;
}

}  // namespace fermichain
