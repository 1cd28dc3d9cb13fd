#pragma once
// Builders for the translation invariant examples, Cases 1..10.
//
// Case ids: "1", "2", "3", "4a", "4b", "5a".."5d", "6a", "6b", "7a", "7b",
// "8a", "8b", "9", "10a", "10b". A bare "4", "5", ... means the "a" variant.
//   4a  Q_{+-chi} e_ii(1)          4b  P_{+-chi,+-eta}
//   5a  e22(1) x e22(1) phi(y)     5b  phi(e22(1) x e22(1) y) e22(1)
//   5c  P x P phi(y)               5d  phi(P x P y) P,  P = e_(12)(12) + e_(21)(21)
//   6a/6b, 7a/7b  the same two shapes for e22(1) and p^perp
//   8a  corner state on Q A Q      8b  state on the tensor completion of site 0
//   10a N_i = alg(e_ii(1) a_2)     10b N_chi = alg(P_chi e_ij(2))
//
// Block states are given by name (see case_state_slots); anything not
// given is the normalized trace of its corner or algebra.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fermichain/markov.hpp"
#include "fermichain/transition.hpp"

namespace fermichain {

struct CaseParams {
    std::string case_id = "1";
    cplx chi = 1.0;
    cplx eta = 1.0;
    bool auto_eta = false;  // Case 1: use eta_with_nonzero_delta(chi)
    std::map<std::string, CMatrix> states;
};

enum class SlotKind {
    Site,    // even tr-density on the next site
    Corner,  // tr-density on the two-site corner under (P (x) I)
    Tensor,  // tr-density on the tensor completion of site 0 (a next-site sized matrix)
};
struct StateSlot {
    std::string name;
    SlotKind kind = SlotKind::Site;
    CMatrix support;  // Corner: the two-site projection P (x) I
    bool even = false;
    bool faithful = false;
};
// Throws BadParams for unknown ids.
std::vector<StateSlot> case_state_slots(const CaseParams& params);

std::vector<std::string> gallery_case_ids();
std::string canonical_case_id(const std::string& id);  // throws BadParams
int case_site_modes(const std::string& id);

struct AutoEta {
    CMatrix eta;          // two-site tr-density on q_chi A q_chi
    double beta = 0;      // weight of the rank-one part
    cplx delta = 0;       // eta(W (chi a_1 + conj(chi) a_1^+) q_chi)
    cplx eta_x = 0;       // eta(X), X = delta's operator / 2
    double min_eigenvalue = 0;  // on the corner
};
// Rank-one state on a vector where X has nonzero expectation, mixed with
// the uniform state on the complement. W = |xi><xi_perp| (see README).
AutoEta eta_with_nonzero_delta(cplx chi);

struct CaseResult {
    std::string case_id;
    int site_modes = 0;
    TransitionExpectation eps;
    MarkovSpec spec;
    std::map<std::string, CMatrix> states;  // effective block states
    std::vector<std::string> defaulted;     // slots filled with the normalized trace
    std::size_t center_dim = 0;
    std::size_t orbits = 0;
    std::optional<std::size_t> expected_center_dim;  // from the case header
    std::optional<std::size_t> expected_orbits;
    ChainClass chain_class = ChainClass::StronglyEven;
    double formula_residual = 0;  // max ||eps(w) - displayed formula(w)||_F
    std::size_t formula_basis = 0;
    VerificationReport verification;
    std::optional<AutoEta> auto_eta;
    std::optional<cplx> delta;       // Case 1
    double stationary_residual = 0;  // ||F*(rho) - rho||_F for the spec's initial state
    std::string description;
    bool header_matches() const;
};
// Throws BadParams.
CaseResult build_case(const CaseParams& params);

}  // namespace fermichain
