#pragma once
// Markov states on finite windows: stationary states, marginal densities,
// classical Markov data, center-trajectory decompositions, the closed
// form for strongly even chains, reconstruction from block data and the
// diagonal subalgebra.
//
// Sites are numbered from 0. Bond j is the transition expectation
// eps_j : A_[j,j+1] -> A_{j}. The initial state rho is a tr-density on site 0;
// windows [k,l] with k > 0 push rho forward through eps_0 ... eps_{k-1}.
// The right edge of every window is averaged with eps_l, so marginals of
// nested windows are compatible.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fermichain/algebra.hpp"
#include "fermichain/car.hpp"
#include "fermichain/matrix.hpp"
#include "fermichain/transition.hpp"

namespace fermichain {

constexpr int kDefaultModeBudget = 8;
constexpr int kMaxModeBudget = 10;

struct MarkovSpec {
    std::vector<TransitionExpectation> bonds;  // one entry when homogeneous
    bool homogeneous = true;
    CMatrix rho;                  // tr-density on site 0
    bool stationary_initial = false;
    std::size_t stationary_fixed_dim = 0;  // dimension of the even fixed space when stationary

    const TransitionExpectation& bond(int j) const;
    int site_modes(int j) const;
    // largest l usable as a window edge (needs eps_l)
    int last_site() const;
    ChainWindow window(int k, int l) const;
};

// State on finite windows, used by the diagnostics. Densities are adjusted
// (with respect to tau).
class LocalState {
public:
    virtual ~LocalState() = default;
    virtual int site_modes(int j) const = 0;
    virtual CMatrix window_density(int k, int l) const = 0;
    // S of the restriction to [k, l]
    virtual double window_entropy(int k, int l) const;
    virtual bool homogeneous() const = 0;
};

class MarkovLocalState : public LocalState {
public:
    explicit MarkovLocalState(MarkovSpec spec, int mode_budget = kDefaultModeBudget)
        : spec_(std::move(spec)), budget_(mode_budget) {}
    int site_modes(int j) const override { return spec_.site_modes(j); }
    CMatrix window_density(int k, int l) const override;
    // through the center blocks, so windows beyond the dense budget work
    // whenever every block fits
    double window_entropy(int k, int l) const override;
    bool homogeneous() const override { return spec_.homogeneous; }

    const MarkovSpec& spec() const { return spec_; }

private:
    MarkovSpec spec_;
    int budget_;
};

struct StationaryResult {
    CMatrix rho;              // tr-density
    std::size_t fixed_dim = 0;  // dimension of the even Hermitian fixed space
    bool unique = true;
    double fixed_residual = 0;  // ||F*(rho) - rho||_F
    double entropy = 0;
};
// Even fixed state of the dual of z -> eps(alpha(z)); maximum entropy
// element when the fixed space is degenerate. Throws NoEvenFixedState.
StationaryResult stationary_state(const TransitionExpectation& eps);

MarkovSpec homogeneous_spec(TransitionExpectation eps, const std::optional<CMatrix>& rho);
MarkovSpec chain_spec(std::vector<TransitionExpectation> bonds, const CMatrix& rho);
// every bond verified, rho even PSD trace one (throws InvalidSpec)
void validate_spec(const MarkovSpec& spec);

// tr-density of phi restricted to site k
CMatrix site_state(const MarkovSpec& spec, int k);

// Adjusted density on [k, l], by evaluating phi on every tensor monomial of
// the window through the nested expectations. Throws WindowTooLarge,
// NotEven (odd monomial with nonzero value) and NotPositive.
CMatrix marginal_density(const MarkovSpec& spec, int k, int l, int mode_budget = kDefaultModeBudget);
// Same density through the trace duals of the lifted expectations.
CMatrix marginal_density_dual(const MarkovSpec& spec, int k, int l, int mode_budget = kDefaultModeBudget);

// The marginal is block diagonal over center trajectories Q^k_w0 ... Q^l_wl.
// Each block is the tr-density compressed to the range of its trajectory
// (site-wise isometries from the eigenvectors of Q). Blocks of trace zero
// are left out. The budget bounds the largest block, in modes.
struct CenterBlock {
    std::vector<int> trajectory;
    CMatrix block;
    std::vector<int> parity;  // +1 / -1 for each basis vector of the block
};
struct BlockMarginal {
    std::vector<CenterBlock> blocks;
    std::size_t max_block = 0;
    double trace = 0;
};
BlockMarginal marginal_blocks(const MarkovSpec& spec, int k, int l, int mode_budget = kDefaultModeBudget);

// -sum l log l over the eigenvalues (no validation)
double entropy_of(const CMatrix& tr_density);

// ---- classical data
struct DroppedLabel {
    int site;
    int label;
    double weight;
};
struct SiteClassical {
    int site = 0;
    std::vector<int> labels;     // indices into the bond's orbit list
    std::vector<double> pi;      // pi^j_omega for retained labels
    std::vector<CMatrix> q;      // Q^j_omega
};
struct ClassicalMarkovData {
    int first_site = 0;
    std::vector<SiteClassical> sites;
    std::vector<std::vector<std::vector<double>>> transitions;  // [bond][omega][omega']
    std::vector<DroppedLabel> dropped;
    double row_sum_residual = 0;
    double compat_residual = 0;
};
ClassicalMarkovData extract_classical(const MarkovSpec& spec, int k, int l);

struct DecompositionComponent {
    std::vector<int> trajectory;  // labels per site
    double weight = 0;            // phi(Q_omega)
    double classical_joint = 0;   // pi_k prod pi_{omega omega'}
    CMatrix density;              // adjusted density of the component
    double evenness = 0;
    double min_eigenvalue = 0;
};
struct DecompositionReport {
    std::vector<DecompositionComponent> components;
    double weight_sum = 0;
    double reconstruction_residual = 0;
    double weight_residual = 0;  // max |weight - classical joint|
    std::vector<DroppedLabel> dropped;
};
DecompositionReport decompose(const MarkovSpec& spec, int k, int l);

struct StronglyEvenReport {
    CMatrix density;                    // adjusted
    double trace_product_residual = 0;  // per block: Tr(block) vs product of factor traces
    std::size_t blocks = 0;
};
StronglyEvenReport strongly_even_density(const MarkovSpec& spec, int k, int l);

// ---- reconstruction from block data
struct SiteBlockData {
    std::vector<CMatrix> q;                  // orbit projections Q_omega of site j
    std::vector<OrbitKind> kind;
    std::vector<CMatrix> p;                  // P (single) or P_1 (double) per orbit
    std::vector<MatrixSubalgebra> n;         // N or N_1 per orbit
    // block states Phi_{omega omega'}: two-site tr-densities under
    // (P (x) Q^{j+1}_{omega'}), each of trace one
    std::vector<std::vector<CMatrix>> states;
};
struct BlockData {
    int left_modes = 1;  // for homogeneous data all sites share the mode count
    std::vector<int> site_modes;           // per site, size = sites.size() + 1 (non-homogeneous)
    std::vector<SiteBlockData> sites;      // one per bond; one entry means homogeneous
    std::vector<double> pi0;               // initial distribution over orbits of site 0
    std::vector<CMatrix> initial;          // tr-densities under Q^0_omega, trace one
    std::vector<std::vector<std::vector<double>>> transitions;  // per bond, row stochastic
};
// Blocks, classical data and initial states read off an existing spec.
BlockData extract_blocks(const MarkovSpec& spec);
// Throws NotStochastic, NotFaithfulBlock.
MarkovSpec build_from_blocks(const BlockData& data);

// ---- diagonal subalgebra
struct DiagonalReport {
    MatrixSubalgebra diagonal;   // D_[m,n]
    MatrixSubalgebra ambient;    // N_[m,n]
    std::vector<CMatrix> minimal_projections;
    bool maximal_abelian = false;
    bool even = false;
    double expectation_residual = 0;  // max |phi(x) - phi(E(x))| over a basis of N_[m,n]
    double markov_residual = 0;       // max |mu(p) - Markov product|
    double entropy_full = 0;          // S of the window marginal
    double entropy_pinched = 0;       // S after pinching by the minimal projections
};
DiagonalReport diagonal_subalgebra(const MarkovSpec& spec, int m, int n);

// helpers shared with the diagnostics
CMatrix partial_trace_last(const CMatrix& t, std::size_t keep, std::size_t drop);
CMatrix partial_trace_first(const CMatrix& t, std::size_t drop, std::size_t keep);

}  // namespace fermichain
