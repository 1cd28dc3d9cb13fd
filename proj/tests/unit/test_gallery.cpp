#include <cmath>
#include <map>

#include "doctest.h"
#include "fermichain/car.hpp"
#include "fermichain/diagnostics.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/gallery.hpp"

using namespace fermichain;

namespace {

std::string code_of(const CaseParams& p) {
    try {
        build_case(p);
    } catch (const FermiError& e) {
        return e.code();
    }
    return "";
}

CaseParams params(const std::string& id) {
    CaseParams p;
    p.case_id = id;
    p.chi = std::polar(1.0, 0.7);
    p.eta = std::polar(1.0, -0.4);
    return p;
}

}  // namespace

TEST_CASE("case headers: center dimension and Theta-orbits") {
    const std::map<std::string, std::pair<std::size_t, std::size_t>> header = {
        {"1", {2, 1}},  {"2", {4, 4}},  {"3", {4, 3}},  {"4a", {4, 2}}, {"4b", {4, 2}}, {"5a", {3, 3}},
        {"5b", {3, 3}}, {"5c", {3, 3}}, {"5d", {3, 3}}, {"6a", {3, 2}}, {"6b", {3, 2}}, {"7a", {2, 2}},
        {"7b", {2, 2}}, {"8a", {2, 1}}, {"8b", {2, 1}}, {"9", {1, 1}}};
    for (const auto& id : gallery_case_ids()) {
        if (id == "10a" || id == "10b") continue;  // covered below, 3-mode sites
        CAPTURE(id);
        const CaseResult r = build_case(params(id));
        CHECK(r.center_dim == header.at(id).first);
        CHECK(r.orbits == header.at(id).second);
        CHECK(r.header_matches());
        CHECK(r.formula_residual < 1e-10);
        CHECK(r.formula_basis == (id == "1" ? 16u : 256u));
        CHECK(r.verification.passes(1e-9));
        CHECK(r.stationary_residual < 1e-10);
    }
}

TEST_CASE("three-mode cases") {
    for (const char* id : {"10a", "10b"}) {
        CAPTURE(id);
        const CaseResult r = build_case(params(id));
        CHECK(r.site_modes == 3);
        CHECK(r.formula_basis == 4096);
        CHECK(r.formula_residual < 1e-10);
        CHECK(r.verification.passes(1e-9));
        CHECK(r.center_dim == 2);
        CHECK(r.orbits == (std::string(id) == "10a" ? 2u : 1u));
    }
}

TEST_CASE("case ids") {
    CHECK(canonical_case_id("4") == "4a");
    CHECK(canonical_case_id("10") == "10a");
    CHECK(canonical_case_id("5c") == "5c");
    CHECK(case_site_modes("1") == 1);
    CHECK(case_site_modes("7b") == 2);
    CHECK(gallery_case_ids().size() == 18);
    CHECK(code_of(params("11")) == "BadParams");
}

TEST_CASE("chain classes") {
    CHECK(build_case(params("2")).chain_class == ChainClass::StronglyEven);
    CHECK(build_case(params("8a")).chain_class == ChainClass::Minimal);
    CHECK(build_case(params("3")).chain_class == ChainClass::Mixed);
}

TEST_CASE("Case 1 with the automatic eta") {
    for (double ang : {0.0, 0.7, 2.0, -1.3}) {
        CAPTURE(ang);
        CaseParams p = params("1");
        p.chi = std::polar(1.0, ang);
        p.auto_eta = true;
        const CaseResult r = build_case(p);
        REQUIRE(r.auto_eta);
        REQUIRE(r.delta);
        // beta = 1/2 gives eta(X) = 0 here, so the fallback weight is used
        CHECK(std::abs(r.auto_eta->beta - 1.0 / 3.0) < 1e-15);
        CHECK(std::abs(*r.delta) > 1e-6);
        CHECK(std::abs(*r.delta - r.auto_eta->delta) < 1e-14);
        CHECK(std::abs(*r.delta - 2.0 * r.auto_eta->eta_x) < 1e-14);
        CHECK(r.spec.stationary_initial);
        CHECK(r.stationary_residual < 1e-12);
        CHECK(r.verification.faithful);

        const MarkovLocalState st(r.spec);
        const auto c = moriya_certificate(st, 0, 1, {0}, {1});
        CHECK(c.entangled);
        CHECK(c.max_abs > 1e-3);
    }
}

TEST_CASE("Case 2 is strongly even and has no odd-odd certificate") {
    CaseParams p = params("2");
    p.states["phi_12"] = CMatrix::diag_real({0.1, 0.2, 0.3, 0.4});
    p.states["phi_21"] = CMatrix::diag_real({0.25, 0.25, 0.4, 0.1});
    const CaseResult r = build_case(p);
    CHECK(r.defaulted.size() == 2);
    CHECK(r.chain_class == ChainClass::StronglyEven);
    const MarkovLocalState st(r.spec);
    CHECK_FALSE(moriya_certificate(st, 0, 2, {0}, {1, 2}).entangled);

    // eps(e_(1,2)(1,2) (x) y) = tr(phi_12 y) e_(1,2)(1,2) by hand
    const CMatrix e = matrix_unit(2, 0, 1, 1) * matrix_unit(2, 1, 2, 2);
    const CMatrix y = CMatrix::diag_real({1.0, -2.0, 0.5, 3.0});
    const double want = 0.1 * 1.0 - 0.2 * 2.0 + 0.3 * 0.5 + 0.4 * 3.0;
    CHECK(frob_distance(r.eps.apply(kron(e, y)), want * e) < 1e-12);
}

TEST_CASE("state slots") {
    const auto s = case_state_slots(params("6b"));
    REQUIRE(s.size() == 2);
    CHECK(s[0].name == "phi");
    CHECK(s[0].kind == SlotKind::Corner);
    CHECK(s[1].name == "psi");
    CHECK(s[1].even);
    CHECK(case_state_slots(params("8b"))[0].kind == SlotKind::Tensor);
    CHECK(case_state_slots(params("2")).size() == 4);
}

TEST_CASE("bad parameters") {
    CaseParams p = params("5a");
    p.chi = 1.1;
    CHECK(code_of(p) == "BadParams");

    p = params("4b");
    p.eta = cplx(0.5, 0.0);
    CHECK(code_of(p) == "BadParams");

    p = params("5a");
    p.states["phi"] = CMatrix::diag_real({0.5, 0.5});  // wrong size
    CHECK(code_of(p) == "BadParams");

    p = params("5a");
    CMatrix odd = 0.25 * CMatrix::identity(4);
    odd(0, 1) = odd(1, 0) = 0.1;
    p.states["phi"] = odd;
    CHECK(code_of(p) == "BadParams");

    p = params("5a");
    p.states["nope"] = 0.25 * CMatrix::identity(4);
    CHECK(code_of(p) == "BadParams");

    p = params("5a");
    p.states["phi"] = CMatrix::diag_real({0.7, 0.7, -0.2, -0.2});
    CHECK(code_of(p) == "BadParams");

    // eta must be faithful on q_chi A q_chi
    p = params("1");
    const CaseResult ok = build_case(p);
    const CMatrix full = ok.states.at("eta");
    const HermEig e = herm_eig(full);
    CMatrix v(4, 1);
    for (std::size_t i = 0; i < 4; ++i) v(i, 0) = e.vectors(i, 3);
    p.states["eta"] = v * v.adjoint();
    CHECK(code_of(p) == "BadParams");

    p = params("3");
    p.auto_eta = true;
    CHECK(code_of(p) == "BadParams");
}
