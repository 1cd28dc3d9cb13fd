#pragma once
// CAR algebra of a finite window as 2^m x 2^m matrices (Jordan-Wigner).
// Mode q (in (site, mode) order) is tensor factor q, the first mode being
// the most significant bit of the basis index.
//   a   = [[0,1],[0,0]]
//   a_q = Z x ... x Z x a x I x ... x I,   Z = diag(1,-1)
// so the matrix units e_kl(q) are plain tensor units and V = Z^{x m}.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fermichain/matrix.hpp"

namespace fermichain {

struct SiteSpec {
    int index = 0;
    int modes = 1;
};

class ChainWindow {
public:
    ChainWindow() = default;
    explicit ChainWindow(std::vector<SiteSpec> sites);
    // sites first..last, each with d modes
    static ChainWindow uniform(int first, int last, int d);

    const std::vector<SiteSpec>& sites() const { return sites_; }
    int site_count() const { return int(sites_.size()); }
    int total_modes() const { return total_; }
    std::size_t dim() const { return std::size_t(1) << total_; }
    // first global mode of the site at position pos
    int mode_offset(int pos) const { return offsets_[std::size_t(pos)]; }
    int modes_of(int pos) const { return sites_[std::size_t(pos)].modes; }
    // position of a site index inside the window (throws SiteOutOfRange)
    int position_of(int site_index) const;
    int global_mode(int site_index, int mode) const;
    // modes belonging to the given site positions, as a bit mask over modes
    std::vector<bool> mode_mask(const std::vector<int>& positions) const;

private:
    std::vector<SiteSpec> sites_;
    std::vector<int> offsets_;
    int total_ = 0;
};

struct FermionOp {
    ChainWindow window;
    CMatrix matrix;
    std::optional<std::pair<int, int>> declared_support;  // site indices [a, b]
};

struct GradedParts {
    CMatrix even;
    CMatrix odd;
};

// 2x2 building blocks
CMatrix pauli_z();
CMatrix local_annihilator();
CMatrix local_unit(int k, int l);  // k,l in {1,2}

// e_kl(q) on m modes
CMatrix matrix_unit(int total_modes, int q, int k, int l);
CMatrix matrix_unit(const ChainWindow& w, int site_index, int mode, int k, int l);
CMatrix annihilator(int total_modes, int q);
CMatrix annihilator(const ChainWindow& w, int site_index, int mode);
CMatrix creator(const ChainWindow& w, int site_index, int mode);

// diagonal of V = Z^{x m}: +1 for even occupation parity, -1 otherwise
std::vector<int> parity_signs(int total_modes);
CMatrix parity_unitary(int total_modes);
CMatrix parity_unitary(const ChainWindow& w);
// Theta(x) = V x V, realized by sign flips (exact)
CMatrix theta(const CMatrix& x);
GradedParts graded_parts(const CMatrix& x);
// Frobenius norm of the odd part
double oddness(const CMatrix& x);
// exact even part (cross-parity entries set to zero)
CMatrix even_part(const CMatrix& x);

int modes_of_dim(std::size_t dim);

// ---- monomial bases
// Tensor monomials b_mu = (x)_q b_{mu_q} with b in {I, Z, e12, e21}
// (digits 0..3). Index: base-4 with mode 0 most significant.
std::vector<cplx> monomial_coefficients(const CMatrix& x);
CMatrix from_monomial_coefficients(const std::vector<cplx>& c, int total_modes);
CMatrix tensor_monomial(const std::vector<int>& digits);
// tau(b_mu b_mu*) for the digit string: 2^{-#(odd digits)}
double monomial_norm2(const std::vector<int>& digits);
std::vector<int> monomial_digits(std::size_t index, int total_modes);
std::size_t monomial_index(const std::vector<int>& digits);

// Fermionic monomials prod_q f_q (ascending mode order), f in
// {I, U=aa^+ - a^+a, a, a^+} (digits 0..3). Returns the equal tensor
// monomial digits and sign.
std::pair<std::vector<int>, int> fermionic_to_tensor(const std::vector<int>& fdigits);
CMatrix fermionic_monomial(const std::vector<int>& fdigits);

// ---- localization
struct LocalProjection {
    CMatrix projected;
    double distance = 0;  // ||x - projected||_F
};
// tau-preserving conditional expectation onto the fermionic local algebra
// of the given site positions. Even elements: tensor-local projection.
// Odd elements keep their Jordan-Wigner strings.
LocalProjection project_local(const CMatrix& x, const ChainWindow& w, const std::vector<int>& positions);
LocalProjection project_local_interval(const CMatrix& x, const ChainWindow& w, int first_site, int last_site);

// ---- traces and densities
cplx tau(const CMatrix& x);
cplx tr(const CMatrix& x);
// tr-density -> tau-density (times dim), checks tr = 1 (NotAState)
CMatrix adjusted_density(const CMatrix& tr_density);
CMatrix tr_density_from_adjusted(const CMatrix& adjusted);
bool density_is_even(const CMatrix& t, double tol);
bool density_is_faithful(const CMatrix& t, double tol);
// product state extension of two commuting window-embedded densities
CMatrix product_state(const CMatrix& t1, const CMatrix& t2);

// ---- embeddings
// Place a homogeneous operator u living on modes [first, first+k) of an
// m-mode window: V^{parity} on earlier modes, u, identity after.
CMatrix embed_modes(const CMatrix& u, int first_mode, int total_modes, int parity);
// Same but u given on whole sites [first_pos, last_pos] of w.
CMatrix embed_sites(const CMatrix& u, const ChainWindow& w, int first_pos, int parity);
// parity of a homogeneous matrix: 0 even, 1 odd, -1 inhomogeneous
int homogeneous_parity(const CMatrix& x, double tol);

}  // namespace fermichain
