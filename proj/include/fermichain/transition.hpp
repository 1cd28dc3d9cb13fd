#pragma once
// Even transition expectations eps: A_[0,1] -> A_{0} built from block
// data, their verification, ergodic averages of CP maps and lifts to
// windows.
//
// Storage: eps is kept as a compact d0^2 x D^2 superoperator (d0 = site-0
// dimension, D = two-site dimension) with column-major vectorization on
// both sides. The image is embedded as x (x) I on demand.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fermichain/algebra.hpp"
#include "fermichain/matrix.hpp"

namespace fermichain {

enum class OrbitKind { Single, Double };
const char* orbit_kind_name(OrbitKind k);

// User-facing block description. Phi is a tr-density R on the two-site
// window with Phi(y) = tr(R y) on the block carrier:
//   single: carrier Nbar v P A_1 P (unit P (x) I), R must be even
//   double: carrier M_1 = N_1' ^ P_1 A_[0,1] P_1
struct TransitionBlockSpec {
    OrbitKind kind = OrbitKind::Single;
    CMatrix p;           // P (single) or P_1 (double), site-0 matrix
    MatrixSubalgebra n;  // N or N_1, site-0 algebra with unit p
    CMatrix phi;         // two-site tr-density
};

// Normalized block: eps_b(w) = n sum_ij tr(Psi (f_ji (x) I) w) f_ij, with Psi
// in the relative commutant of N inside the two-site corner and
// tr(Psi (P (x) I)) = 1. Double orbits add Theta eps_b Theta.
struct BuiltBlock {
    OrbitKind kind = OrbitKind::Single;
    CMatrix p;
    MatrixSubalgebra n;
    MatrixUnits units;
    CMatrix psi;  // two-site
};

struct VerificationReport {
    double idempotency = 0;
    double unitality = 0;
    double choi_min_eigenvalue = 0;
    double bimodule = 0;
    double evenness = 0;
    double localization = 0;
    double kraus_min_singular = 0;
    bool faithful = false;
    bool bimodule_full_basis = true;  // false: seeded probes were used
    bool passes(double tolerance) const;
};

enum class ChainClass { StronglyEven, Minimal, Mixed };
const char* chain_class_name(ChainClass c);

class TransitionExpectation {
public:
    TransitionExpectation() = default;
    // Raw compact superoperator; range and central data are computed.
    TransitionExpectation(int d_left_modes, int d_right_modes, CMatrix superop,
                          std::vector<BuiltBlock> blocks = {});

    int left_modes() const { return dl_; }
    int right_modes() const { return dr_; }
    std::size_t d0() const { return std::size_t(1) << dl_; }
    std::size_t d1() const { return std::size_t(1) << dr_; }
    std::size_t big_dim() const { return d0() * d1(); }
    const CMatrix& superop() const { return s_; }
    const std::vector<BuiltBlock>& blocks() const { return blocks_; }
    const MatrixSubalgebra& range() const { return range_; }
    const CentralData& central() const { return central_; }
    // empty unless the fixed points failed to decompose (not an expectation)
    const std::string& structure_error() const { return structure_error_; }

    // eps(w) as a site-0 matrix
    CMatrix apply(const CMatrix& w) const;
    // eps(w) embedded as eps(w) (x) I
    CMatrix apply_embedded(const CMatrix& w) const;
    // trace dual: tr(x eps(w)) = tr(dual(x) w)
    CMatrix dual(const CMatrix& x) const;
    // x -> eps(x (x) I), site-0 superoperator (d0^2 x d0^2)
    CMatrix averaging_superop() const;
    // z -> eps(alpha(z)) for equal site sizes
    CMatrix transfer_superop() const;
    CMatrix choi() const;

private:
    int dl_ = 0, dr_ = 0;
    CMatrix s_;
    std::vector<BuiltBlock> blocks_;
    MatrixSubalgebra range_;
    CentralData central_;
    std::string structure_error_;
};

BuiltBlock build_single_orbit(const TransitionBlockSpec& spec, int d_right_modes);
BuiltBlock build_double_orbit(const TransitionBlockSpec& spec, int d_right_modes);
BuiltBlock build_block(const TransitionBlockSpec& spec, int d_right_modes);
// compact superoperator of one block (including the Theta copy for double orbits)
CMatrix block_superop(const BuiltBlock& b, int d_left_modes, int d_right_modes);

// Sum of the block maps; units must add up to the identity of site 0.
TransitionExpectation assemble(const std::vector<BuiltBlock>& blocks, int d_left_modes, int d_right_modes);

// Fixed points of x -> eps(x (x) I).
MatrixSubalgebra fixed_point_algebra(const TransitionExpectation& eps);

VerificationReport verify_conditional_expectation(const TransitionExpectation& eps, const MatrixSubalgebra& range);
VerificationReport verify_conditional_expectation(const TransitionExpectation& eps);

ChainClass classify(const TransitionExpectation& eps);

// Recovered block structure of an assembled expectation.
struct RecoveredBlock {
    OrbitKind kind;
    std::vector<int> projections;  // indices into central().projections
    CMatrix p;                      // representative unit (P or P_1)
    MatrixSubalgebra n;
    CMatrix psi;
};
std::vector<RecoveredBlock> disassemble(const TransitionExpectation& eps);

// ---- generic square superoperators on M_n (column-major vec)
struct SuperOp {
    std::size_t n = 0;
    CMatrix s;  // n^2 x n^2
    CMatrix apply(const CMatrix& x) const;
};
SuperOp superop_from_map(std::size_t n, const std::function<CMatrix(const CMatrix&)>& f);
SuperOp superop_identity(std::size_t n);
SuperOp compose(const SuperOp& a, const SuperOp& b);  // a after b

struct ErgodicResult {
    SuperOp expectation;
    MatrixSubalgebra fixed_points;
};
// Spectral projection onto the eigenvalue-1 eigenspace. Throws
// NotPowerBounded with the offending eigenvalue estimate.
ErgodicResult ergodic_average(const SuperOp& e);
VerificationReport verify_square_expectation(const SuperOp& e, const MatrixSubalgebra& range);

// Lift eps at a bond to id (x) eps on a window whose last two sites are
// the bond. w has dimension left_dim * D; result left_dim * d0.
CMatrix lift_apply(const TransitionExpectation& eps, const CMatrix& w, std::size_t left_dim);
// trace dual of the lift: density on [k, n] -> density on [k, n+1]
CMatrix lift_dual(const TransitionExpectation& eps, const CMatrix& t, std::size_t left_dim);

}  // namespace fermichain
