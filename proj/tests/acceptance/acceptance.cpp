// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// line fails. Usage: acceptance [path-to-fermichain-binary [criterion ...]]
//
// Random instances come from a fixed seed, so every run checks the same
// matrices.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "fermichain/algebra.hpp"
#include "fermichain/car.hpp"
#include "fermichain/diagnostics.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/gallery.hpp"
#include "fermichain/markov.hpp"
#include "fermichain/matrix.hpp"
#include "fermichain/transition.hpp"

using namespace fermichain;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

// ---------------------------------------------------------------- random

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen); }
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(gen); }
    cplx phase() { return std::polar(1.0, 2 * M_PI * uniform()); }
    CMatrix gaussian(std::size_t n) {
        CMatrix g(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) g(i, j) = cplx(normal(), normal());
        return g;
    }
    CMatrix hermitian(std::size_t n) { return hermitian_part(gaussian(n)); }
    CMatrix even_unitary(std::size_t n) {
        const CMatrix h = even_part(hermitian(n));
        return even_part(spectral_apply(h, [](double x) { return std::polar(1.0, x); }));
    }
    // faithful tr-density under the projection s
    CMatrix density_under(const CMatrix& s, bool even) {
        const CMatrix g = gaussian(s.rows());
        CMatrix r = s * g * g.adjoint() * s + 0.2 * s;
        r = hermitian_part(r);
        if (even) r = even_part(r);
        return (1.0 / tr(r).real()) * r;
    }
};

// ---------------------------------------------------------------- 1: CAR

// rows of (column, value); every operator here has few entries per row
struct Sparse {
    std::size_t n = 0;
    std::vector<std::vector<std::pair<std::size_t, cplx>>> rows;
};

Sparse sparse(const CMatrix& a) {
    Sparse s{a.rows(), std::vector<std::vector<std::pair<std::size_t, cplx>>>(a.rows())};
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (a(i, j) != cplx(0)) s.rows[i].push_back({j, a(i, j)});
    return s;
}

Sparse mul(const Sparse& a, const Sparse& b) {
    Sparse c{a.n, std::vector<std::vector<std::pair<std::size_t, cplx>>>(a.n)};
    for (std::size_t i = 0; i < a.n; ++i) {
        std::map<std::size_t, cplx> acc;
        for (const auto& [k, v] : a.rows[i])
            for (const auto& [j, w] : b.rows[k]) acc[j] += v * w;
        for (const auto& [j, v] : acc) c.rows[i].push_back({j, v});
    }
    return c;
}

Sparse lin(cplx x, const Sparse& a, cplx y, const Sparse& b) {
    Sparse c{a.n, std::vector<std::vector<std::pair<std::size_t, cplx>>>(a.n)};
    for (std::size_t i = 0; i < a.n; ++i) {
        std::map<std::size_t, cplx> acc;
        for (const auto& [j, v] : a.rows[i]) acc[j] += x * v;
        for (const auto& [j, v] : b.rows[i]) acc[j] += y * v;
        for (const auto& [j, v] : acc) c.rows[i].push_back({j, v});
    }
    return c;
}

double max_abs(const Sparse& a) {
    double m = 0;
    for (const auto& r : a.rows)
        for (const auto& e : r) m = std::max(m, std::abs(e.second));
    return m;
}

Sparse sparse_identity(std::size_t n) {
    Sparse s{n, std::vector<std::vector<std::pair<std::size_t, cplx>>>(n)};
    for (std::size_t i = 0; i < n; ++i) s.rows[i].push_back({i, 1.0});
    return s;
}

Sparse adjoint(const Sparse& a) {
    Sparse c{a.n, std::vector<std::vector<std::pair<std::size_t, cplx>>>(a.n)};
    for (std::size_t i = 0; i < a.n; ++i)
        for (const auto& [j, v] : a.rows[i]) c.rows[j].push_back({i, std::conj(v)});
    for (auto& r : c.rows) std::sort(r.begin(), r.end(), [](auto& x, auto& y) { return x.first < y.first; });
    return c;
}

Outcome criterion_car() {
    double worst = 0;
    for (int m = 1; m <= 8; ++m) {
        const std::size_t n = std::size_t(1) << m;
        const Sparse id = sparse_identity(n);
        std::vector<Sparse> a, ad;
        for (int q = 0; q < m; ++q) {
            a.push_back(sparse(annihilator(m, q)));
            ad.push_back(adjoint(a.back()));
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                Sparse ac = lin(1, mul(a[i], ad[j]), 1, mul(ad[j], a[i]));
                if (i == j) ac = lin(1, ac, -1, id);
                worst = std::max(worst, max_abs(ac));
                worst = std::max(worst, max_abs(lin(1, mul(a[i], a[j]), 1, mul(a[j], a[i]))));
            }
        // matrix units from the generators: e11 = a a+, e22 = a+ a,
        // e12 = S a, e21 = a+ S with S the product of the earlier U_p
        std::vector<std::array<Sparse, 4>> e(static_cast<std::size_t>(m));
        Sparse string = id;
        for (int q = 0; q < m; ++q) {
            e[q][0] = mul(a[q], ad[q]);
            e[q][1] = mul(string, a[q]);
            e[q][2] = mul(ad[q], string);
            e[q][3] = mul(ad[q], a[q]);
            for (int k = 0; k < 4; ++k) {
                const Sparse ref = sparse(matrix_unit(m, q, k / 2 + 1, k % 2 + 1));
                worst = std::max(worst, max_abs(lin(1, e[q][k], -1, ref)));
            }
            string = mul(string, lin(1, e[q][0], -1, e[q][3]));
        }
        for (int q = 0; q < m; ++q) {
            worst = std::max(worst, max_abs(lin(1, lin(1, e[q][0], 1, e[q][3]), -1, id)));
            for (int p = 0; p < m; ++p)
                for (int x = 0; x < 4; ++x)
                    for (int y = 0; y < 4; ++y) {
                        const Sparse xy = mul(e[q][x], e[p][y]);
                        if (p == q) {
                            // e_kl e_k'l' = delta_lk' e_kl'
                            const int k = x / 2, l = x % 2, k2 = y / 2, l2 = y % 2;
                            Sparse r = xy;
                            if (l == k2) r = lin(1, xy, -1, e[q][k * 2 + l2]);
                            worst = std::max(worst, max_abs(r));
                        } else {
                            worst = std::max(worst, max_abs(lin(1, xy, -1, mul(e[p][y], e[q][x]))));
                        }
                    }
        }
    }
    return {worst <= 1e-12, "windows of 1..8 modes, max residual " + sci(worst)};
}

// ---------------------------------------------------------------- 2: blocks

struct PlannedBlock {
    TransitionBlockSpec spec;
};

// site-0 block templates of a dl-mode site: split on a mode, a double
// orbit through q_chi of a mode, or a single orbit
void plan_blocks(Rng& rng, int dl, const CMatrix& pi, int q, int forced, std::vector<PlannedBlock>& out) {
    const int choice = forced >= 0 ? forced : (q < dl ? rng.pick(3) : 2);
    if (choice == 0 && q < dl) {
        plan_blocks(rng, dl, pi * matrix_unit(dl, q, 1, 1), q + 1, -1, out);
        plan_blocks(rng, dl, pi * matrix_unit(dl, q, 2, 2), q + 1, -1, out);
        return;
    }
    if (choice == 1 && q < dl) {
        const CMatrix aq = annihilator(dl, q);
        const cplx chi = rng.phase();
        const CMatrix p1 = 0.5 * (pi + chi * (pi * aq) + std::conj(chi) * (pi * aq.adjoint()));
        PlannedBlock b;
        b.spec.kind = OrbitKind::Double;
        b.spec.p = p1;
        const int opt = rng.pick(q + 1 < dl ? 3 : 2);
        if (opt == 0) b.spec.n = scalars(p1);
        else if (opt == 1) b.spec.n = full_corner(p1);
        else b.spec.n = algebra_closure({p1 * matrix_unit(dl, q + 1, 1, 2)}, p1);
        out.push_back(b);
        return;
    }
    PlannedBlock b;
    b.spec.kind = OrbitKind::Single;
    b.spec.p = pi;
    const int opt = rng.pick(q < dl ? 3 : 2);
    if (opt == 0) b.spec.n = scalars(pi);
    else if (opt == 1) b.spec.n = full_corner(pi);
    else b.spec.n = algebra_closure({pi * annihilator(dl, q + rng.pick(dl - q))}, pi);
    out.push_back(b);
}

MatrixSubalgebra conjugate(const MatrixSubalgebra& n, const CMatrix& u) {
    std::vector<CMatrix> b;
    for (const auto& x : n.basis) b.push_back(u * x * u.adjoint());
    return subalgebra_from_span(b, u * n.unit * u.adjoint());
}

MatrixSubalgebra theta_of(const MatrixSubalgebra& n) {
    std::vector<CMatrix> b;
    for (const auto& x : n.basis) b.push_back(theta(x));
    return subalgebra_from_span(b, theta(n.unit));
}

Outcome criterion_block_round_trip() {
    Rng rng(20260901);
    const std::pair<int, int> shapes[] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {3, 1}, {1, 3}, {2, 3}, {3, 2}, {3, 3}, {2, 4}};
    int failures = 0, singles = 0, doubles = 0;
    double worst_verify = 0, worst_range = 0, worst_q = 0, worst_n = 0, worst_psi = 0;
    std::string first_failure;
    for (int inst = 0; inst < 50; ++inst) {
        const auto [dl, dr] = shapes[inst % 10];
        const std::size_t d0 = std::size_t(1) << dl, d1 = std::size_t(1) << dr;
        std::vector<PlannedBlock> plan;
        plan_blocks(rng, dl, CMatrix::identity(d0), 0, (inst / 10 + inst) % 3, plan);
        const CMatrix u = rng.even_unitary(d0);
        std::vector<BuiltBlock> built;
        std::vector<CMatrix> expected_range, expected_q;
        for (auto& b : plan) {
            b.spec.p = u * b.spec.p * u.adjoint();
            b.spec.n = conjugate(b.spec.n, u);
            const CMatrix support = kron(b.spec.p, CMatrix::identity(d1));
            b.spec.phi = rng.density_under(support, b.spec.kind == OrbitKind::Single);
            built.push_back(build_block(b.spec, dr));
            for (const auto& x : built.back().n.basis) expected_range.push_back(x);
            if (b.spec.kind == OrbitKind::Double) {
                ++doubles;
                for (const auto& x : built.back().n.basis) expected_range.push_back(theta(x));
                expected_q.push_back(b.spec.p + theta(b.spec.p));
            } else {
                ++singles;
                expected_q.push_back(b.spec.p);
            }
        }
        const TransitionExpectation eps = assemble(built, dl, dr);
        const VerificationReport rep = verify_conditional_expectation(eps);
        const double vr = std::max({rep.idempotency, rep.unitality, -rep.choi_min_eigenvalue, rep.bimodule,
                                    rep.evenness, rep.localization});
        worst_verify = std::max(worst_verify, vr);
        bool ok = rep.passes(1e-9);

        const double rd = subspace_distance(eps.range(), subalgebra_from_span(expected_range, CMatrix::identity(d0)));
        worst_range = std::max(worst_range, rd);
        ok = ok && rd <= 1e-9;

        const auto& qs = eps.central().q_projections;
        ok = ok && qs.size() == expected_q.size();
        for (const auto& q : expected_q) {
            double best = 1e300;
            for (const auto& r : qs) best = std::min(best, frob_distance(q, r));
            worst_q = std::max(worst_q, best);
            ok = ok && best <= 1e-9;
        }

        const std::vector<RecoveredBlock> rec = disassemble(eps);
        ok = ok && rec.size() == built.size();
        for (const auto& rb : rec) {
            double best_n = 1e300, best_psi = 1e300;
            for (const auto& b : built) {
                if (b.kind != rb.kind) continue;
                if (frob_distance(b.p, rb.p) <= 1e-9) {
                    best_n = std::min(best_n, subspace_distance(b.n, rb.n));
                    best_psi = std::min(best_psi, frob_distance(b.psi, rb.psi));
                } else if (b.kind == OrbitKind::Double && frob_distance(theta(b.p), rb.p) <= 1e-9) {
                    best_n = std::min(best_n, subspace_distance(theta_of(b.n), rb.n));
                    best_psi = std::min(best_psi, frob_distance(theta(b.psi), rb.psi));
                }
            }
            worst_n = std::max(worst_n, best_n);
            worst_psi = std::max(worst_psi, best_psi);
            ok = ok && best_n <= 1e-9 && best_psi <= 1e-9;
        }
        if (!ok) {
            ++failures;
            if (first_failure.empty()) first_failure = " first failing instance " + std::to_string(inst);
        }
    }
    const bool both = singles > 0 && doubles > 0;
    return {failures == 0 && both,
            "50 specs (" + std::to_string(singles) + " single, " + std::to_string(doubles) +
                " double orbits), verify " + sci(worst_verify) + ", range " + sci(worst_range) + ", Q " + sci(worst_q) +
                ", N " + sci(worst_n) + ", psi " + sci(worst_psi) + first_failure};
}

// ---------------------------------------------------------------- 3: complement

Outcome criterion_complement() {
    Rng rng(77);
    int failures = 0;
    double worst = 0;
    for (int inst = 0; inst < 20; ++inst) {
        const int m = inst % 2 == 0 ? 2 : 3;
        const std::size_t d = std::size_t(1) << m;
        const CMatrix id = CMatrix::identity(d);
        std::vector<CMatrix> gens;
        switch (inst % 5) {
            case 0: gens = {annihilator(m, rng.pick(m))}; break;
            case 1: {
                const int i = rng.pick(m);
                gens = {annihilator(m, i), annihilator(m, (i + 1) % m)};
                break;
            }
            case 2: gens = {matrix_unit(m, m - 1, 1, 2)}; break;  // tensor unit of one mode
            case 3: gens = {matrix_unit(m, 0, 1, 2), matrix_unit(m, m - 1, 1, 2)}; break;
            default: gens = {annihilator(m, 0), annihilator(m, m - 1)}; break;
        }
        const CMatrix u = rng.even_unitary(d);
        for (auto& g : gens) g = u * g * u.adjoint();
        const MatrixSubalgebra n = algebra_closure(gens, id);
        const ComplementResult c = fermion_complement(n, full_corner(id));
        worst = std::max(worst, c.graded_commutation);
        const bool exact = n.dim() * c.complement.dim() == d * d;
        if (!(c.dimension_law && exact && c.graded_commutation <= 1e-9 && c.intersection_dim == 1)) ++failures;
    }
    // two modes, N = alg(a_1): the complement is alg(a_2)
    const CMatrix id4 = CMatrix::identity(4);
    const ComplementResult c9 = fermion_complement(algebra_closure({annihilator(2, 0)}, id4), full_corner(id4));
    const double d9 = subspace_distance(c9.complement, algebra_closure({annihilator(2, 1)}, id4));
    return {failures == 0 && d9 <= 1e-9,
            "20 random algebras in M_4 and M_8, " + std::to_string(failures) + " failures, graded commutation " +
                sci(worst) + "; alg(a_1) complement vs alg(a_2) " + sci(d9)};
}

// ---------------------------------------------------------------- gallery

const cplx kChi = std::polar(1.0, 0.7);
const cplx kEta = std::polar(1.0, -0.4);

// gallery case with random faithful states in every slot (Case 1 takes
// the auto eta)
CaseResult random_case(const std::string& id, std::uint64_t seed) {
    Rng rng(seed);
    CaseParams p;
    p.case_id = id;
    p.chi = kChi;
    p.eta = kEta;
    p.auto_eta = id == "1";
    const std::size_t d1 = std::size_t(1) << case_site_modes(id);
    for (const auto& slot : case_state_slots(p)) {
        if (p.auto_eta && slot.name == "eta") continue;
        const CMatrix s = slot.support.empty() ? CMatrix::identity(d1) : slot.support;
        p.states[slot.name] = rng.density_under(s, slot.even || slot.kind == SlotKind::Site);
    }
    return build_case(p);
}

std::map<std::string, CaseResult>& gallery() {
    static std::map<std::string, CaseResult> cases = [] {
        std::map<std::string, CaseResult> m;
        std::uint64_t seed = 1000;
        for (const auto& id : gallery_case_ids()) m.emplace(id, random_case(id, seed++));
        return m;
    }();
    return cases;
}

// ---------------------------------------------------------------- 4: Markov test

Outcome criterion_markov() {
    double worst_loc = 0, worst_even = 0;
    std::vector<std::string> short_cases;
    bool ok = true;
    for (const auto& id : gallery_case_ids()) {
        const CaseResult& c = gallery().at(id);
        const MarkovLocalState st(c.spec, kMaxModeBudget);
        int last = 3;  // windows [0, 3] hold 4 sites
        while (last > 1 && (last + 1) * c.site_modes > kMaxModeBudget) --last;
        if (last < 3) short_cases.push_back(id + " (" + std::to_string(last + 1) + " sites)");
        for (int k = 0; k < last; ++k) {
            const MarkovTestReport r = markov_property_test(st, k, last);
            worst_loc = std::max(worst_loc, r.worst_localization);
            worst_even = std::max(worst_even, r.worst_evenness);
        }
    }
    ok = worst_loc <= 1e-8 && worst_even <= 1e-8;
    const SecondOrderClassicalState fault(0.1);
    const MarkovTestReport f = markov_property_test(fault, 0, 3);
    ok = ok && f.worst_localization > 1e-3;
    std::string detail = "localization " + sci(worst_loc) + ", evenness " + sci(worst_even) +
                         ", fault localization " + sci(f.worst_localization);
    if (!short_cases.empty()) {
        detail += "; not reached within the 10-mode budget: 4-site windows of";
        for (const auto& s : short_cases) detail += " " + s;
        ok = false;
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 5: entropy

Outcome criterion_entropy() {
    double worst = 0;
    bool mean_exact = true;
    std::vector<std::string> short_cases;
    for (const auto& id : gallery_case_ids()) {
        const MarkovLocalState st(gallery().at(id).spec, kMaxModeBudget);
        EntropyIncrements e;
        int n = 4;
        for (; n >= 1; --n) {
            try {
                e = entropy_increments(st, n);
                break;
            } catch (const FermiError& err) {
                if (err.code() != "WindowTooLarge") throw;
            }
        }
        if (n < 4) short_cases.push_back(id + " (n <= " + std::to_string(n) + ")");
        if (n >= 1) {
            worst = std::max(worst, e.flatness);
            mean_exact = mean_exact && mean_entropy(st, 1).s == e.increments.front();
        }
    }
    const SecondOrderClassicalState fault(0.1);
    const double ff = entropy_increments(fault, 4).flatness;
    bool ok = worst <= 1e-8 && mean_exact && ff > 1e-3;
    std::string detail = "flatness " + sci(worst) + ", mean entropy equals Delta_1: " + (mean_exact ? "yes" : "no") +
                         ", fault flatness " + sci(ff);
    if (!short_cases.empty()) {
        detail += "; not reached within the 10-mode budget:";
        for (const auto& s : short_cases) detail += " " + s;
        ok = false;
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 6: decomposition

Outcome criterion_decompose() {
    double worst_rec = 0, worst_w = 0;
    int n = 0;
    for (const auto& id : gallery_case_ids()) {
        const CaseResult& c = gallery().at(id);
        if (c.chain_class == ChainClass::Minimal) continue;
        const DecompositionReport r = decompose(c.spec, 0, 2);
        worst_rec = std::max(worst_rec, r.reconstruction_residual);
        worst_w = std::max(worst_w, r.weight_residual);
        ++n;
    }
    return {worst_rec <= 1e-8 && worst_w <= 1e-9,
            std::to_string(n) + " strongly even and mixed cases on [0,2], reconstruction " + sci(worst_rec) +
                ", weights " + sci(worst_w)};
}

// ---------------------------------------------------------------- 7: reconstruction

Outcome criterion_reconstruct() {
    double worst = 0;
    for (const std::string id : {"2", "5a", "5b", "5c", "5d"}) {
        const MarkovSpec& spec = gallery().at(id).spec;
        const MarkovSpec rebuilt = build_from_blocks(extract_blocks(spec));
        for (int l = 0; l <= 3; ++l)
            worst = std::max(worst, frob_distance(marginal_density(spec, 0, l), marginal_density(rebuilt, 0, l)));
    }
    return {worst <= 1e-8, "Cases 2, 5a..5d, windows [0,0]..[0,3], max marginal distance " + sci(worst)};
}

// ---------------------------------------------------------------- 8: closed form

Outcome criterion_strongly_even() {
    const MarkovSpec& spec = gallery().at("2").spec;
    double worst = 0, worst_tp = 0;
    for (int l = 1; l <= 3; ++l) {
        const StronglyEvenReport r = strongly_even_density(spec, 0, l);
        worst = std::max(worst, frob_distance(r.density, marginal_density(spec, 0, l)));
        worst_tp = std::max(worst_tp, r.trace_product_residual);
    }
    return {worst <= 1e-8 && worst_tp <= 1e-10,
            "Case 2, 2..4 sites, closed form vs marginal " + sci(worst) + ", trace products " + sci(worst_tp)};
}

// ---------------------------------------------------------------- 9: diagonal

Outcome criterion_diagonal() {
    const DiagonalReport r = diagonal_subalgebra(gallery().at("2").spec, 0, 2);
    return {r.maximal_abelian && r.expectation_residual <= 1e-8 && r.markov_residual <= 1e-8,
            std::string("Case 2 on [0,2], maximal abelian: ") + (r.maximal_abelian ? "yes" : "no") +
                ", expectation " + sci(r.expectation_residual) + ", Markov factorization " + sci(r.markov_residual)};
}

// ---------------------------------------------------------------- 10: entanglement

MarkovSpec product_spec(int modes, const CMatrix& omega) {
    const std::size_t d = std::size_t(1) << modes;
    const CMatrix id = CMatrix::identity(d);
    const BuiltBlock b = build_block({OrbitKind::Single, id, full_corner(id), kron((1.0 / double(d)) * id, omega)}, modes);
    return homogeneous_spec(assemble({b}, modes, modes), omega);
}

Outcome criterion_entanglement() {
    bool ok = true;
    double min_delta = 1e300;
    for (const double angle : {0.7, 2.0, -1.3}) {
        CaseParams p;
        p.chi = std::polar(1.0, angle);
        p.auto_eta = true;
        const CaseResult c = build_case(p);
        min_delta = std::min(min_delta, std::abs(c.delta.value_or(0.0)));
        const EntanglementCertificate cert = moriya_certificate(MarkovLocalState(c.spec), 0, 1, {0}, {1});
        ok = ok && cert.entangled && !cert.x_label.empty() && !cert.y_label.empty();
    }
    ok = ok && min_delta > 1e-6;
    Rng rng(5);
    double worst = 0;
    for (int modes = 1; modes <= 2; ++modes) {
        const std::size_t d = std::size_t(1) << modes;
        std::vector<CMatrix> omegas = {(1.0 / double(d)) * CMatrix::identity(d)};
        for (int i = 0; i < 3; ++i) omegas.push_back(rng.density_under(CMatrix::identity(d), true));
        for (const auto& w : omegas) {
            const MarkovLocalState st(product_spec(modes, w));
            for (int l = 1; l <= (modes == 1 ? 3 : 2); ++l) {
                const EntanglementCertificate cert = moriya_certificate(st, 0, l, {0}, {l});
                worst = std::max(worst, cert.max_abs);
                ok = ok && !cert.entangled;
            }
        }
    }
    ok = ok && worst <= 1e-12;
    return {ok, "Case 1 auto eta: min |delta| " + sci(min_delta) +
                    ", witnesses found; trace and even product states: max odd-odd correlation " + sci(worst)};
}

// ---------------------------------------------------------------- 11: determinism

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion_determinism(const std::string& binary) {
    if (binary.empty()) return {false, "no fermichain binary given"};
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("fermichain-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string spec = (dir / "case1.json").string();
    const std::vector<std::string> configs = {
        "build-case --case 1 --chi 0,1 --auto-eta --spec-out " + spec,
        "markov-test --spec " + spec + " --window 0 3",
        "entropy --case 2 --nmax 4",
        "entangle --spec " + spec + " --window 0 1 --region1 0 --region2 1",
        "decompose --case 4b --window 0 2 --format text",
        "reconstruct --case 5b --window 0 3",
        "entropy --fault 0.1 --nmax 3",
    };
    int mismatches = 0;
    std::string first;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        std::string outputs[2];
        int codes[2];
        for (int run = 0; run < 2; ++run) {
            const fs::path out = dir / ("out" + std::to_string(i) + "_" + std::to_string(run));
            const std::string cmd = "\"" + binary + "\" " + configs[i] + " > \"" + out.string() + "\" 2>&1";
            codes[run] = std::system(cmd.c_str());
            outputs[run] = slurp(out);
            if (i == 0) outputs[run] += slurp(spec);
        }
        // a usage or library error prints no report, so it cannot count as a match
        const bool reported = codes[0] != -1 && WIFEXITED(codes[0]) &&
                              (WEXITSTATUS(codes[0]) == 0 || WEXITSTATUS(codes[0]) == 2);
        if (!reported || outputs[0] != outputs[1] || codes[0] != codes[1] || outputs[0].empty()) {
            ++mismatches;
            if (first.empty()) first = "; differs: " + configs[i];
        }
    }
    fs::remove_all(dir);
    return {mismatches == 0, std::to_string(configs.size()) + " configurations run twice, " +
                                 std::to_string(mismatches) + " byte mismatches" + first};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string binary = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"CAR relations", criterion_car},
        {"block round trip", criterion_block_round_trip},
        {"fermion complement", criterion_complement},
        {"Markov cocycle test", criterion_markov},
        {"entropy increments", criterion_entropy},
        {"center decomposition", criterion_decompose},
        {"reconstruction from blocks", criterion_reconstruct},
        {"strongly even closed form", criterion_strongly_even},
        {"diagonal subalgebra", criterion_diagonal},
        {"entanglement certificate", criterion_entanglement},
        {"CLI determinism", [&] { return criterion_determinism(binary); }},
    };
    std::vector<bool> selected(criteria.size(), argc <= 2);
    for (int i = 2; i < argc; ++i) {
        const int c = std::atoi(argv[i]);
        if (c >= 1 && c <= int(criteria.size())) selected[std::size_t(c - 1)] = true;
    }
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i]) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("%s %2zu %-28s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
