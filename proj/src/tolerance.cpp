#include "fermichain/tolerance.hpp"

#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace fermichain {

namespace {
template <class F>
void for_each_field(TolerancePolicy& p, F&& f) {
    f("hermitian", p.hermitian);
    f("jacobi_offdiag", p.jacobi_offdiag);
    f("eig_cluster", p.eig_cluster);
    f("nullspace", p.nullspace);
    f("psd", p.psd);
    f("state_trace", p.state_trace);
    f("closure", p.closure);
    f("unit", p.unit);
    f("theta", p.theta);
    f("verify", p.verify);
    f("faithful_sv", p.faithful_sv);
    f("not_positive", p.not_positive);
    f("weight_drop", p.weight_drop);
    f("markov_test", p.markov_test);
    f("moriya", p.moriya);
    f("faithful_density", p.faithful_density);
    f("stochastic", p.stochastic);
    f("compat", p.compat);
    f("flatness", p.flatness);
    f("formula", p.formula);
    f("reconstruction", p.reconstruction);
}

TolerancePolicy& global_policy() {
    static TolerancePolicy p = [] {
        const char* env = std::getenv("FERMICHAIN_TOL");
        if (env == nullptr || *env == '\0') return TolerancePolicy{};
        return parse_tolerance_override(env);
    }();
    return p;
}
}  // namespace

std::map<std::string, double> TolerancePolicy::as_map() const {
    std::map<std::string, double> m;
    TolerancePolicy copy = *this;
    for_each_field(copy, [&](const char* k, double& v) { m[k] = v; });
    return m;
}

bool TolerancePolicy::set(const std::string& key, double value) {
    bool found = false;
    for_each_field(*this, [&](const char* k, double& v) {
        if (key == k) {
            v = value;
            found = true;
        }
    });
    return found;
}

TolerancePolicy parse_tolerance_override(const std::string& text, TolerancePolicy base) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("tolerance override '" + item + "' is not key=value");
        std::string key = item.substr(0, eq);
        double v = 0;
        try {
            v = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("tolerance override '" + item + "' has a bad number");
        }
        if (!(v > 0)) throw std::invalid_argument("tolerance '" + key + "' must be positive");
        if (!base.set(key, v)) throw std::invalid_argument("unknown tolerance key '" + key + "'");
    }
    return base;
}

const TolerancePolicy& tol() { return global_policy(); }

void install_tolerance_policy(const TolerancePolicy& p) { global_policy() = p; }

}  // namespace fermichain
