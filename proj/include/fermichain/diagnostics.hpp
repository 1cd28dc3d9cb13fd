#pragma once
// Entropy functionals, transition cocycles and the Markov-property test,
// finite-volume modular flow and the odd-odd entanglement certificate.
// Everything works on a LocalState, so hand-built states (the second
// order classical chain below) go through the same code as Markov specs.

#include <string>
#include <vector>

#include "fermichain/markov.hpp"
#include "fermichain/matrix.hpp"

namespace fermichain {

// S(T) for a tr-density. Throws NotDensity.
double von_neumann_entropy(const CMatrix& tr_density);

struct EntropyIncrements {
    int first_site = 0;
    std::vector<double> window_entropy;  // S[k, k+n], n = 0 .. n_max
    std::vector<double> increments;      // Delta_n = S[k, k+n] - S[k, k+n-1], n = 1 .. n_max (index n-1)
    double flatness = 0;                 // max_n |Delta_n - Delta_1|
};
// n_max >= 1. Throws NotHomogeneous, WindowTooLarge.
EntropyIncrements entropy_increments(const LocalState& state, int n_max, int first_site = 0);

struct MeanEntropy {
    double s = 0;                   // S[0,1] - S{0}, the n = 1 increment
    std::vector<double> empirical;  // S[0,n] / (n+1), n = 0 .. n_max
};
MeanEntropy mean_entropy(const LocalState& state, int n_max);

// w = D[k,n+1]^{it} D[k,n]^{-it}, D the tr-densities, D[k,n] embedded as D (x) I
struct CocycleReport {
    int k = 0;
    int n = 0;
    double t = 0;
    CMatrix w;
    double localization_distance = 0;  // Frobenius distance to A_[n,n+1]
    double evenness_distance = 0;      // Frobenius norm of the odd part
    double unitarity_residual = 0;     // ||w w* - I||_F
};
// Throws NotFaithful.
CocycleReport transition_cocycle(const LocalState& state, int k, int n, double t);

struct MarkovTestReport {
    bool passes = false;
    double tolerance = 0;
    int k = 0;
    int l = 0;
    std::vector<double> t_grid;
    double worst_localization = 0;
    double worst_evenness = 0;
    double worst_unitarity = 0;
    int worst_n = 0;
    double worst_t = 0;
    std::size_t cocycles = 0;
};
// Every cocycle w_{k,n}(t) with n in [k, l-1] and t on the grid.
MarkovTestReport markov_property_test(const LocalState& state, int k, int l,
                                      const std::vector<double>& t_grid = {0.3, 1.0, 2.7});

// sigma_t(x) = T^{-it} x T^{it} for a faithful density T (any normalization).
class ModularFlow {
public:
    explicit ModularFlow(const CMatrix& density);  // throws NotFaithful
    CMatrix operator()(double t, const CMatrix& x) const;
    // max ||sigma_t(sigma_s(x)) - sigma_{t+s}(x)||_F over the matrix units e_kl(q) of every mode
    double group_law_residual(double t, double s) const;
    // max ||sigma_t(xy) - sigma_t(x) sigma_t(y)||_F over the same generators
    double homomorphism_residual(double t) const;

private:
    CMatrix power(double t) const;  // T^{it}
    HermEig eig_;
    int modes_ = 0;
};

struct EntanglementCertificate {
    int k = 0;
    int l = 0;
    std::vector<int> region1;  // site indices
    std::vector<int> region2;
    std::string x_label;  // witness x_- in region1
    std::string y_label;  // witness y_- in region2
    std::vector<int> x_digits;  // fermionic digits over the window modes
    std::vector<int> y_digits;
    cplx correlation = 0;   // phi(x_- y_-)
    double max_abs = 0;
    double threshold = 0;
    bool entangled = false;
    std::size_t pairs_tested = 0;
    std::string note;
};
// Max |phi(x y)| over tau-normalized odd fermionic monomials x in A_region1,
// y in A_region2 of the window [k, l]. Throws OverlappingRegions,
// SiteOutOfRange.
EntanglementCertificate moriya_certificate(const LocalState& state, int k, int l, const std::vector<int>& region1,
                                           const std::vector<int>& region2);

// Fault state: stationary binary chain of order two, one mode per site,
// diagonal in the occupation basis. x_{n+1} = x_n xor x_{n-1}, flipped
// with probability `flip`. Translation invariant and faithful, not Markov.
class SecondOrderClassicalState : public LocalState {
public:
    explicit SecondOrderClassicalState(double flip = 0.1, int mode_budget = kMaxModeBudget);
    int site_modes(int) const override { return 1; }
    CMatrix window_density(int k, int l) const override;
    bool homogeneous() const override { return true; }

private:
    double flip_;
    int budget_;
};

}  // namespace fermichain
