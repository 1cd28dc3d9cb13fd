#pragma once
// Finite-dimensional *-subalgebras given by HS-orthonormal bases.

#include <cstdint>
#include <vector>

#include "fermichain/matrix.hpp"

namespace fermichain {

struct MatrixSubalgebra {
    std::size_t ambient_dim = 0;
    CMatrix unit;
    std::vector<CMatrix> basis;  // HS-orthonormal
    bool theta_invariant = false;

    std::size_t dim() const { return basis.size(); }
    // HS projection of x onto the span
    CMatrix project(const CMatrix& x) const;
    // ||x - project(x)||_F
    double distance(const CMatrix& x) const;
};

// Orthonormalize the given span and attach the unit. No closure check.
MatrixSubalgebra subalgebra_from_span(const std::vector<CMatrix>& elements, const CMatrix& unit);
// P M_n P with a deterministic basis (matrix units when P is diagonal).
MatrixSubalgebra full_corner(const CMatrix& p);
MatrixSubalgebra scalars(const CMatrix& p);
bool check_theta_invariant(const MatrixSubalgebra& a, double tol);
// max over basis pairs of the distance of b_i b_j from the span
double closure_residual(const MatrixSubalgebra& a);

// Smallest *-algebra with the given unit containing the generators.
// Throws NotSupported when some generator is not under the unit.
MatrixSubalgebra algebra_closure(const std::vector<CMatrix>& generators, const CMatrix& unit);

// {x in M : [x, n] = 0 for n in basis(N)}. Throws NotSubalgebra.
MatrixSubalgebra relative_commutant(const MatrixSubalgebra& n, const MatrixSubalgebra& m);
MatrixSubalgebra center(const MatrixSubalgebra& a);

struct CentralData {
    std::vector<CMatrix> projections;        // minimal central projections P_gamma
    std::vector<std::vector<int>> orbits;    // Theta-orbits, indices into projections
    std::vector<CMatrix> q_projections;      // orbit sums Q_omega
    bool used_fallback = false;              // generic element failed three times
};
CentralData center_decomposition(const MatrixSubalgebra& a);

// Homogeneous orthonormal basis of a Theta-invariant algebra.
struct GradedBasis {
    std::vector<CMatrix> elements;
    std::vector<int> parity;  // 0 even, 1 odd
};
GradedBasis graded_basis(const MatrixSubalgebra& a);

// Matrix units f_ij of a full matrix algebra over its unit.
struct MatrixUnits {
    std::size_t n = 0;
    std::vector<CMatrix> f;  // f[i*n + j]
    const CMatrix& operator()(std::size_t i, std::size_t j) const { return f[i * n + j]; }
};
bool is_full_matrix_algebra(const MatrixSubalgebra& a);
MatrixUnits matrix_units(const MatrixSubalgebra& a);
// tau-preserving conditional expectation of P M P onto the relative
// commutant of the algebra with these matrix units: (1/n) sum f_ij x f_ji
CMatrix commutant_expectation(const MatrixUnits& u, const CMatrix& x);

// Even selfadjoint unitary in N implementing Theta on N.
CMatrix implementing_unitary(const MatrixSubalgebra& n);

struct ComplementResult {
    MatrixSubalgebra complement;    // N bar
    CMatrix v_n;                    // implementing unitary used for beta
    bool dimension_law = false;     // dim N * dim Nbar == dim M
    double graded_commutation = 0;  // max residual of x xb + sigma xb x
    std::size_t intersection_dim = 0;
};
ComplementResult fermion_complement(const MatrixSubalgebra& n, const MatrixSubalgebra& m);

// Minimal projections of an abelian algebra (throws NotAbelian).
std::vector<CMatrix> abelian_minimal_projections(const MatrixSubalgebra& a);
struct MaximalAbelianCheck {
    bool maximal = false;
    std::size_t algebra_dim = 0;
    std::size_t commutant_dim = 0;  // dim of the relative commutant in M
};
MaximalAbelianCheck maximal_abelian_check(const MatrixSubalgebra& a, const MatrixSubalgebra& m);
bool is_maximal_abelian(const MatrixSubalgebra& a, const MatrixSubalgebra& m);

// max(sup_a dist(a, B), sup_b dist(b, A)) over the orthonormal bases
double subspace_distance(const MatrixSubalgebra& a, const MatrixSubalgebra& b);

// deterministic Gaussian stream used for generic elements
std::vector<double> seeded_normals(std::uint64_t seed, std::size_t count);

}  // namespace fermichain
