#pragma once
// One tolerance policy for the whole library. Defaults below; the
// FERMICHAIN_TOL environment variable can override any field with a
// comma separated list of key=value pairs, e.g. "verify=1e-8,moriya=1e-7".

#include <map>
#include <string>

namespace fermichain {

struct TolerancePolicy {
    double hermitian = 1e-10;       // relative to ||A||_F, herm_eig precondition
    double jacobi_offdiag = 1e-14;  // relative off-diagonal mass to stop Jacobi
    double eig_cluster = 1e-8;      // times (1 + ||A||_F)
    double nullspace = 1e-10;       // residual per constraint
    double psd = 1e-10;             // eigenvalue floor for PSD predicates
    double state_trace = 1e-10;     // |tr - 1|
    double closure = 1e-9;          // subalgebra closure / membership
    double unit = 1e-10;            // unit / projection identities
    double theta = 1e-9;            // Theta invariance, graded commutation
    double verify = 1e-9;           // conditional expectation verification
    double faithful_sv = 1e-8;      // smallest singular value of stacked Kraus
    double not_positive = 1e-8;     // marginal eigenvalue floor before NotPositive
    double weight_drop = 1e-12;     // classical weights at or below are dropped
    double markov_test = 1e-7;      // cocycle distances in markov_property_test
    double moriya = 1e-8;           // odd-odd correlation threshold
    double faithful_density = 1e-10;  // min eigenvalue for faithful marginals
    double stochastic = 1e-10;      // row sums of classical data
    double compat = 1e-9;           // classical compatibility
    double flatness = 1e-8;         // entropy increments, max |Delta_n - Delta_1|
    double formula = 1e-10;         // gallery: eps against its displayed formula
    double reconstruction = 1e-8;   // decompositions, rebuilt marginals, closed forms

    // key -> value view, used for reports and for the env override
    std::map<std::string, double> as_map() const;
    bool set(const std::string& key, double value);
};

// Process-wide policy: defaults plus FERMICHAIN_TOL, read once.
const TolerancePolicy& tol();

// Replace the process-wide policy. Meant for program start-up (the CLI
// --tol flag); not synchronized with concurrent readers.
void install_tolerance_policy(const TolerancePolicy& p);

// Parse an override string into a policy (throws std::invalid_argument).
TolerancePolicy parse_tolerance_override(const std::string& text, TolerancePolicy base = {});

}  // namespace fermichain
