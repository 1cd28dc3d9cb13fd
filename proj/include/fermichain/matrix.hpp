#pragma once
// Dense complex matrices, Jacobi eigensolver, spectral functions and
// nullspaces. Row-major storage. Most of the library uses square
// matrices; rectangular shapes only appear for superoperators.

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace fermichain {

using cplx = std::complex<double>;

class CMatrix {
public:
    CMatrix() = default;
    explicit CMatrix(std::size_t n) : r_(n), c_(n), a_(n * n) {}
    CMatrix(std::size_t rows, std::size_t cols) : r_(rows), c_(cols), a_(rows * cols) {}
    CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data);

    static CMatrix identity(std::size_t n);
    static CMatrix diag(const std::vector<cplx>& d);
    static CMatrix diag_real(const std::vector<double>& d);
    static CMatrix unit(std::size_t n, std::size_t i, std::size_t j);  // e_ij

    std::size_t rows() const { return r_; }
    std::size_t cols() const { return c_; }
    std::size_t dim() const { return r_; }
    bool square() const { return r_ == c_; }
    bool empty() const { return a_.empty(); }

    cplx& operator()(std::size_t i, std::size_t j) { return a_[i * c_ + j]; }
    const cplx& operator()(std::size_t i, std::size_t j) const { return a_[i * c_ + j]; }
    cplx* data() { return a_.data(); }
    const cplx* data() const { return a_.data(); }
    const std::vector<cplx>& entries() const { return a_; }

    CMatrix& operator+=(const CMatrix& o);
    CMatrix& operator-=(const CMatrix& o);
    CMatrix& operator*=(cplx s);
    CMatrix& operator*=(double s);

    CMatrix adjoint() const;
    CMatrix transpose() const;
    CMatrix conj() const;
    cplx trace() const;
    double frob() const;
    double max_abs() const;

    bool is_hermitian(double tol) const;
    bool is_unitary(double tol) const;
    bool is_projection(double tol) const;
    bool is_psd(double tol) const;

private:
    std::size_t r_ = 0, c_ = 0;
    std::vector<cplx> a_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator*(cplx s, CMatrix a);
CMatrix operator*(double s, CMatrix a);
CMatrix operator-(CMatrix a);

CMatrix kron(const CMatrix& a, const CMatrix& b);
CMatrix commutator(const CMatrix& a, const CMatrix& b);
// Hilbert-Schmidt inner product tr(a* b)
cplx hs_inner(const CMatrix& a, const CMatrix& b);
// tr(a b) without forming the product
cplx trace_of_product(const CMatrix& a, const CMatrix& b);
double frob_distance(const CMatrix& a, const CMatrix& b);
CMatrix hermitian_part(const CMatrix& a);

// column-major vec and its inverse
std::vector<cplx> vec(const CMatrix& a);
CMatrix unvec(const std::vector<cplx>& v, std::size_t rows, std::size_t cols);

struct HermEig {
    std::vector<double> values;  // ascending
    CMatrix vectors;              // columns are eigenvectors
};

// Cyclic Jacobi. Throws NotHermitian. Decouples exactly block-diagonal
// inputs (after a permutation) and diagonalizes the blocks separately.
HermEig herm_eig(const CMatrix& a);
std::vector<double> herm_eigenvalues(const CMatrix& a);

enum class MatFunc { Log, XLogX, PowerIt };
// U f(Lambda) U*. For PowerIt the parameter is t and 0^{it} := 0.
CMatrix mat_func(const CMatrix& a, MatFunc f, double t = 0.0);
CMatrix spectral_apply(const CMatrix& a, const std::function<cplx(double)>& f);

struct SpectralCluster {
    double value;     // mean eigenvalue of the cluster
    CMatrix projection;
    std::size_t rank;
};
// Eigenvalues within eig_cluster*(1+||A||_F) are merged.
std::vector<SpectralCluster> spectral_clusters(const CMatrix& a);

// Orthonormal basis of {v : sum_j rows[i][j] v_j = 0 for all i}.
std::vector<std::vector<cplx>> nullspace(const std::vector<std::vector<cplx>>& rows, std::size_t n);
// Same, from the Gram matrix G = C* C of the constraint matrix.
std::vector<std::vector<cplx>> nullspace_from_gram(const CMatrix& gram, double scale);

// Gaussian elimination with partial pivoting. Throws Singular.
CMatrix solve(const CMatrix& a, const CMatrix& b);
CMatrix inverse(const CMatrix& a);

// HS orthonormalization (modified Gram-Schmidt, two passes). Elements
// whose residual norm falls below rel_tol * (original norm) are dropped, as
// are inputs smaller than rel_tol * (largest input norm).
std::vector<CMatrix> orthonormalize(const std::vector<CMatrix>& xs, double rel_tol = 1e-9);

}  // namespace fermichain
