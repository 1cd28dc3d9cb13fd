#include "fermichain/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fermichain/diagnostics.hpp"
#include "fermichain/errors.hpp"
#include "fermichain/gallery.hpp"
#include "fermichain/io.hpp"
#include "fermichain/tolerance.hpp"

namespace fermichain {

namespace {

// plain statements of what each command checks
const char* kPropBuild =
    "the transition expectation is an even conditional expectation equal to the case's displayed formula, "
    "with the case's center dimension and number of Theta-orbits";
const char* kPropVerify =
    "every bond is an idempotent, unital, completely positive, even, bimodular expectation onto its range";
const char* kPropMarginal =
    "the window marginal is an even positive density whose restriction to the shorter window is the shorter marginal";
const char* kPropEntropy = "for a translation invariant Markov state S[0,n] - S[0,n-1] is the same for every n >= 1";
const char* kPropMarkov =
    "a locally faithful even state is Markov exactly when every transition cocycle "
    "D[k,n+1]^{it} D[k,n]^{-it} is even and lies in the algebra of sites n, n+1";
const char* kPropEntangle =
    "an even state with a nonzero correlation between odd elements of two disjoint regions is not separable across them";
const char* kPropClassical =
    "the labels of the minimal central projections of the ranges form a classical Markov chain";
const char* kPropDecompose =
    "the marginal is the mixture of its center-trajectory components weighted by the classical joint law";
const char* kPropDiagonal =
    "a strongly even Markov state restricts to a classical Markov measure on an even maximal abelian subalgebra "
    "that carries a state-preserving conditional expectation";
const char* kPropReconstruct =
    "the state rebuilt from its center data, block algebras, block states and classical law has the original marginals";

struct Options {
    // state source
    std::string spec_path;
    std::string case_id;
    std::string chi = "1,0";
    std::string eta = "1,0";
    bool auto_eta = false;
    std::string params_path;
    std::optional<double> fault;

    std::vector<int> window;
    int nmax = 4;
    int first_site = 0;
    std::vector<double> t_grid = {0.3, 1.0, 2.7};
    std::vector<int> region1, region2;
    std::string method = "nested";
    bool with_density = false;
    std::string spec_out;

    int mode_budget = kDefaultModeBudget;
    std::string tol_override;
    std::string out_path;
    std::string format = "json";
};

struct Check {
    std::string name;
    double measured;
    double tolerance;
    bool ok;
};

class Report {
public:
    Report(const std::string& command, const char* property) {
        j_["command"] = command;
        j_["property"] = property;
    }
    Json& operator[](const char* k) { return j_[k]; }
    // measured <= tolerance
    void check(const std::string& name, double measured, double tolerance) {
        checks_.push_back({name, measured, tolerance, measured <= tolerance});
    }
    void require(const std::string& name, bool ok) { checks_.push_back({name, ok ? 0.0 : 1.0, 0.0, ok}); }
    bool passed() const {
        return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.ok; });
    }
    Json finish(int budget) const {
        Json out = j_;
        Json cs = Json::array();
        Json bad = Json::array();
        for (const auto& c : checks_) {
            Json x;
            x["check"] = c.name;
            x["measured"] = c.measured;
            x["tolerance"] = c.tolerance;
            x["ok"] = c.ok;
            cs.push_back(x);
            if (!c.ok) bad.push_back(x);
        }
        out["checks"] = cs;
        out["passed"] = passed();
        if (!bad.empty()) out["violations"] = bad;
        out["mode_budget"] = budget;
        Json t;
        for (const auto& [k, v] : tol().as_map()) t[k] = v;
        out["tolerance_policy"] = t;
        return out;
    }

private:
    Json j_;
    std::vector<Check> checks_;
};

cplx parse_complex(const std::string& s, const char* flag) {
    std::stringstream ss(s);
    std::string a, b;
    std::getline(ss, a, ',');
    std::getline(ss, b);
    try {
        std::size_t ia = 0, ib = 0;
        const double re = std::stod(a, &ia);
        const double im = b.empty() ? 0.0 : std::stod(b, &ib);
        if (ia != a.size() || ib != b.size()) throw std::invalid_argument("trailing");
        return {re, im};
    } catch (const std::exception&) {
        fail("BadInput", std::string(flag) + " expects re,im (for example 1,0), got '" + s + "'");
    }
}

bool is_matrix(const Json& j) { return j.is_object() && j.contains("re") && j.size() <= 2; }

// ---------------------------------------------------------------- text output

std::string scalar_text(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (is_matrix(v)) return "<" + std::to_string(v["re"].size()) + "x" + std::to_string(v["re"].empty() ? 0 : v["re"][0].size()) + " matrix>";
    return v.dump();
}

bool flat_array(const Json& v) {
    return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_primitive(); });
}

bool table_array(const Json& v) {
    return v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_object() && !is_matrix(x); });
}

void render(const Json& j, const std::string& prefix, std::ostream& os) {
    for (const auto& [k, v] : j.items()) {
        const std::string key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object() && !is_matrix(v)) {
            render(v, key, os);
        } else if (flat_array(v)) {
            os << key << ":";
            for (const auto& x : v) os << " " << scalar_text(x);
            os << "\n";
        } else if (table_array(v)) {
            std::vector<std::string> cols;
            for (const auto& [c, x] : v.front().items()) cols.push_back(c);
            std::vector<std::vector<std::string>> cells;
            std::vector<std::size_t> width;
            for (const auto& c : cols) width.push_back(c.size());
            for (const auto& row : v) {
                std::vector<std::string> r;
                for (std::size_t i = 0; i < cols.size(); ++i) {
                    const Json& x = row.contains(cols[i]) ? row.at(cols[i]) : Json();
                    std::string s;
                    if (flat_array(x)) {
                        for (const auto& y : x) s += (s.empty() ? "" : ",") + scalar_text(y);
                    } else {
                        s = x.is_structured() && !is_matrix(x) ? x.dump() : scalar_text(x);
                    }
                    width[i] = std::max(width[i], s.size());
                    r.push_back(s);
                }
                cells.push_back(r);
            }
            os << key << ":\n";
            auto line = [&](const std::vector<std::string>& r) {
                os << " ";
                for (std::size_t i = 0; i < r.size(); ++i) os << " " << r[i] << std::string(width[i] - r[i].size(), ' ');
                os << "\n";
            };
            line(cols);
            for (const auto& r : cells) line(r);
        } else {
            os << key << ": " << (v.is_array() ? v.dump() : scalar_text(v)) << "\n";
        }
    }
}

void emit(const Json& report, const Options& o, std::ostream& out) {
    std::string text;
    if (o.format == "text") {
        std::ostringstream os;
        render(report, "", os);
        text = os.str();
    } else {
        text = dump_json(report);
    }
    if (o.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(o.out_path, std::ios::binary);
    if (!f) fail("BadInput", "cannot write " + o.out_path);
    f << text;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("BadInput", "cannot write " + path);
    f << text;
}

// ---------------------------------------------------------------- inputs

CaseParams case_params(const Options& o) {
    CaseParams p;
    if (!o.params_path.empty()) p = case_params_from_json(read_json_file(o.params_path));
    if (!o.case_id.empty()) p.case_id = o.case_id;
    if (o.params_path.empty() || o.chi != "1,0") p.chi = parse_complex(o.chi, "--chi");
    if (o.params_path.empty() || o.eta != "1,0") p.eta = parse_complex(o.eta, "--eta");
    if (o.auto_eta) p.auto_eta = true;
    return p;
}

Json case_metadata(const CaseResult& r, const CaseParams& p) {
    Json m;
    m["case"] = r.case_id;
    m["description"] = r.description;
    m["site_modes"] = r.site_modes;
    m["chi"] = to_json(p.chi);
    m["eta"] = to_json(p.eta);
    if (r.delta) m["delta"] = to_json(*r.delta);
    if (r.auto_eta) {
        Json a;
        a["beta"] = r.auto_eta->beta;
        a["eta_x"] = to_json(r.auto_eta->eta_x);
        a["min_eigenvalue_on_corner"] = r.auto_eta->min_eigenvalue;
        m["auto_eta"] = a;
    }
    m["center_dim"] = r.center_dim;
    m["orbits"] = r.orbits;
    m["expected_center_dim"] = r.expected_center_dim ? Json(*r.expected_center_dim) : Json();
    m["expected_orbits"] = r.expected_orbits ? Json(*r.expected_orbits) : Json();
    m["chain_class"] = chain_class_name(r.chain_class);
    m["formula_residual"] = r.formula_residual;
    m["formula_basis_size"] = r.formula_basis;
    m["stationary_residual"] = r.stationary_residual;
    m["defaulted_states"] = r.defaulted;
    return m;
}

struct Loaded {
    std::optional<MarkovSpec> spec;
    std::unique_ptr<LocalState> state;
    Json source;
};

Loaded load(const Options& o, bool allow_fault) {
    Loaded l;
    const int sources = int(!o.spec_path.empty()) + int(!o.case_id.empty() || !o.params_path.empty()) + int(o.fault.has_value());
    if (sources != 1) fail("BadInput", allow_fault ? "give exactly one of --spec, --case/--params, --fault"
                                                   : "give exactly one of --spec, --case/--params");
    if (o.fault) {
        if (!allow_fault) fail("BadInput", "--fault is not available for this command");
        if (!(*o.fault > 0.0 && *o.fault < 0.5)) fail("BadInput", "--fault expects a flip probability in (0, 0.5)");
        l.state = std::make_unique<SecondOrderClassicalState>(*o.fault, o.mode_budget);
        l.source["fault_state"] = "second order binary chain x[n+1] = x[n] xor x[n-1], flipped with probability p";
        l.source["flip"] = *o.fault;
        return l;
    }
    if (!o.spec_path.empty()) {
        l.spec = spec_from_json(read_json_file(o.spec_path));
        l.source["spec"] = o.spec_path;
    } else {
        const CaseParams p = case_params(o);
        CaseResult r = build_case(p);
        l.source["case"] = r.case_id;
        l.source["chi"] = to_json(p.chi);
        l.source["eta"] = to_json(p.eta);
        if (p.auto_eta) l.source["auto_eta"] = true;
        l.spec = std::move(r.spec);
    }
    l.state = std::make_unique<MarkovLocalState>(*l.spec, o.mode_budget);
    return l;
}

std::pair<int, int> window_of(const Options& o, const char* cmd) {
    if (o.window.size() != 2) fail("BadInput", std::string(cmd) + " needs --window K L");
    if (o.window[0] < 0 || o.window[1] < o.window[0]) fail("BadInput", "--window needs 0 <= K <= L");
    return {o.window[0], o.window[1]};
}

Json window_json(int k, int l) { return Json::array({k, l}); }

// ---------------------------------------------------------------- commands

Json cmd_build_case(const Options& o) {
    Report rep("build-case", kPropBuild);
    const CaseParams p = case_params(o);
    if (p.case_id.empty()) fail("BadInput", "build-case needs --case or --params");
    const CaseResult r = build_case(p);
    Json meta = case_metadata(r, p);
    rep["case"] = meta;
    Json v;
    v["idempotency"] = r.verification.idempotency;
    v["unitality"] = r.verification.unitality;
    v["choi_min_eigenvalue"] = r.verification.choi_min_eigenvalue;
    v["bimodule"] = r.verification.bimodule;
    v["evenness"] = r.verification.evenness;
    v["faithful"] = r.verification.faithful;
    rep["verification"] = v;
    rep.check("formula_residual", r.formula_residual, tol().formula);
    rep.require("center_and_orbits_match_header", r.header_matches());
    rep.require("verification_passes", r.verification.passes(tol().verify));
    if (r.delta) rep["delta_abs"] = std::abs(*r.delta);
    if (!o.spec_out.empty()) {
        write_file(o.spec_out, dump_json(spec_to_json(r.spec, meta)));
        rep["spec_written"] = o.spec_out;
    }
    return rep.finish(o.mode_budget);
}

Json cmd_verify(const Options& o) {
    Report rep("verify", kPropVerify);
    Loaded l = load(o, false);
    rep["source"] = l.source;
    Json bonds = Json::array();
    for (std::size_t j = 0; j < l.spec->bonds.size(); ++j) {
        const auto& e = l.spec->bonds[j];
        const VerificationReport v = verify_conditional_expectation(e);
        Json b;
        b["bond"] = j;
        b["idempotency"] = v.idempotency;
        b["unitality"] = v.unitality;
        b["choi_min_eigenvalue"] = v.choi_min_eigenvalue;
        b["bimodule"] = v.bimodule;
        b["evenness"] = v.evenness;
        b["kraus_min_singular"] = v.kraus_min_singular;
        b["faithful"] = v.faithful;
        b["center_dim"] = e.central().projections.size();
        b["orbits"] = e.central().orbits.size();
        b["class"] = chain_class_name(classify(e));
        bonds.push_back(b);
        const std::string tag = "bond" + std::to_string(j) + ".";
        rep.check(tag + "idempotency", v.idempotency, tol().verify);
        rep.check(tag + "unitality", v.unitality, tol().verify);
        rep.check(tag + "choi_negativity", std::max(0.0, -v.choi_min_eigenvalue), tol().verify);
        rep.check(tag + "bimodule", v.bimodule, tol().verify);
        rep.check(tag + "evenness", v.evenness, tol().verify);
    }
    rep["bonds"] = bonds;
    return rep.finish(o.mode_budget);
}

Json cmd_marginal(const Options& o) {
    Report rep("marginal", kPropMarginal);
    Loaded l = load(o, false);
    const auto [k, l1] = window_of(o, "marginal");
    rep["source"] = l.source;
    rep["window"] = window_json(k, l1);
    rep["method"] = o.method;
    const MarkovSpec& s = *l.spec;
    CMatrix t;
    if (o.method == "nested") t = marginal_density(s, k, l1, o.mode_budget);
    else if (o.method == "dual") t = marginal_density_dual(s, k, l1, o.mode_budget);
    else if (o.method == "strongly-even") t = strongly_even_density(s, k, l1).density;
    else fail("BadInput", "--method must be nested, dual or strongly-even");
    const double dim = double(t.rows());
    const CMatrix tr = (1.0 / dim) * t;
    rep["dimension"] = t.rows();
    rep["trace"] = tr.trace().real();
    const double mn = herm_eigenvalues(hermitian_part(tr)).front();
    rep["min_eigenvalue"] = mn;
    rep["entropy"] = entropy_of(hermitian_part(tr));
    rep["oddness"] = oddness(t);
    rep.check("trace_defect", std::abs(tr.trace() - 1.0), tol().state_trace);
    rep.check("negativity", std::max(0.0, -mn), tol().psd);
    rep.check("oddness", oddness(t), tol().theta);
    if (l1 > k) {
        const std::size_t dl = std::size_t(1) << s.site_modes(l1);
        const CMatrix shorter = marginal_density(s, k, l1 - 1, o.mode_budget);
        const double c = frob_distance((1.0 / double(dl)) * partial_trace_last(t, t.rows() / dl, dl), shorter) / double(shorter.rows());
        rep["compatibility_residual"] = c;
        rep.check("compatibility", c, tol().compat);
    }
    if (o.method != "nested") {
        const double d = frob_distance(t, marginal_density(s, k, l1, o.mode_budget)) / dim;
        rep["agreement_with_nested"] = d;
        rep.check("agreement_with_nested", d, tol().reconstruction);
    }
    if (o.with_density) rep["density"] = to_json(t);
    return rep.finish(o.mode_budget);
}

Json cmd_entropy(const Options& o) {
    Report rep("entropy", kPropEntropy);
    Loaded l = load(o, true);
    rep["source"] = l.source;
    const EntropyIncrements e = entropy_increments(*l.state, o.nmax, o.first_site);
    const MeanEntropy m = mean_entropy(*l.state, o.nmax);
    rep["first_site"] = o.first_site;
    rep["nmax"] = o.nmax;
    Json rows = Json::array();
    for (int n = 0; n <= o.nmax; ++n) {
        Json r;
        r["n"] = n;
        r["window_entropy"] = e.window_entropy[std::size_t(n)];
        r["increment"] = n == 0 ? Json() : Json(e.increments[std::size_t(n - 1)]);
        r["mean_empirical"] = m.empirical[std::size_t(n)];
        rows.push_back(r);
    }
    rep["table"] = rows;
    rep["flatness"] = e.flatness;
    rep["mean_entropy"] = m.s;
    if (l.spec && classify(l.spec->bonds.front()) == ChainClass::StronglyEven)
        rep["mean_entropy_note"] = "strongly even: equals the dynamical entropy of the shift (stated, not computed)";
    rep.check("flatness", e.flatness, tol().flatness);
    return rep.finish(o.mode_budget);
}

Json cmd_markov(const Options& o) {
    Report rep("markov-test", kPropMarkov);
    Loaded l = load(o, true);
    const auto [k, l1] = window_of(o, "markov-test");
    if (l1 == k) fail("BadInput", "markov-test needs a window of at least two sites");
    rep["source"] = l.source;
    rep["window"] = window_json(k, l1);
    const MarkovTestReport m = markov_property_test(*l.state, k, l1, o.t_grid);
    rep["t_grid"] = o.t_grid;
    rep["cocycles"] = m.cocycles;
    rep["worst_localization"] = m.worst_localization;
    rep["worst_evenness"] = m.worst_evenness;
    rep["worst_unitarity"] = m.worst_unitarity;
    rep["worst_n"] = m.worst_n;
    rep["worst_t"] = m.worst_t;
    rep.check("localization", m.worst_localization, m.tolerance);
    rep.check("evenness", m.worst_evenness, m.tolerance);
    rep.check("unitarity", m.worst_unitarity, tol().verify);
    return rep.finish(o.mode_budget);
}

Json cmd_entangle(const Options& o) {
    Report rep("entangle", kPropEntangle);
    Loaded l = load(o, true);
    const auto [k, l1] = window_of(o, "entangle");
    if (o.region1.empty() || o.region2.empty()) fail("BadInput", "entangle needs --region1 and --region2 (site lists)");
    rep["source"] = l.source;
    rep["window"] = window_json(k, l1);
    const EntanglementCertificate c = moriya_certificate(*l.state, k, l1, o.region1, o.region2);
    rep["region1"] = c.region1;
    rep["region2"] = c.region2;
    rep["verdict"] = c.entangled ? "entangled" : "no_certificate";
    rep["max_abs_correlation"] = c.max_abs;
    rep["threshold"] = c.threshold;
    Json w;
    w["x"] = c.x_label;
    w["y"] = c.y_label;
    w["correlation"] = to_json(c.correlation);
    rep["witness"] = w;
    rep["pairs_tested"] = c.pairs_tested;
    rep["note"] = c.note;
    return rep.finish(o.mode_budget);
}

Json cmd_classical(const Options& o) {
    Report rep("classical", kPropClassical);
    Loaded l = load(o, false);
    const auto [k, l1] = window_of(o, "classical");
    rep["source"] = l.source;
    rep["window"] = window_json(k, l1);
    const ClassicalMarkovData c = extract_classical(*l.spec, k, l1);
    Json sites = Json::array();
    for (const auto& s : c.sites) {
        Json x;
        x["site"] = s.site;
        x["labels"] = s.labels;
        x["pi"] = s.pi;
        sites.push_back(x);
    }
    rep["sites"] = sites;
    rep["transitions"] = c.transitions;
    Json dropped = Json::array();
    for (const auto& d : c.dropped) dropped.push_back(Json{{"site", d.site}, {"label", d.label}, {"weight", d.weight}});
    rep["dropped"] = dropped;
    rep["row_sum_residual"] = c.row_sum_residual;
    rep["compat_residual"] = c.compat_residual;
    rep.check("row_sums", c.row_sum_residual, tol().stochastic);
    rep.check("compatibility", c.compat_residual, tol().compat);
    return rep.finish(o.mode_budget);
}

Json cmd_decompose(const Options& o) {
    Report rep("decompose", kPropDecompose);
    Loaded l = load(o, false);
    const auto [k, l1] = window_of(o, "decompose");
    rep["source"] = l.source;
    rep["window"] = window_json(k, l1);
    const DecompositionReport d = decompose(*l.spec, k, l1);
    Json comps = Json::array();
    for (const auto& c : d.components) {
        Json x;
        x["trajectory"] = c.trajectory;
        x["weight"] = c.weight;
        x["classical_joint"] = c.classical_joint;
        x["evenness"] = c.evenness;
        x["min_eigenvalue"] = c.min_eigenvalue;
        comps.push_back(x);
    }
    rep["components"] = comps;
    rep["weight_sum"] = d.weight_sum;
    rep["reconstruction_residual"] = d.reconstruction_residual;
    rep["weight_residual"] = d.weight_residual;
    Json dropped = Json::array();
    for (const auto& x : d.dropped) dropped.push_back(Json{{"site", x.site}, {"label", x.label}, {"weight", x.weight}});
    rep["dropped"] = dropped;
    rep.check("reconstruction", d.reconstruction_residual, tol().reconstruction);
    rep.check("weights_vs_classical_joint", d.weight_residual, tol().compat);
    return rep.finish(o.mode_budget);
}

Json cmd_diagonalize(const Options& o) {
    Report rep("diagonalize", kPropDiagonal);
    Loaded l = load(o, false);
    const auto [m, n] = window_of(o, "diagonalize");
    rep["source"] = l.source;
    rep["window"] = window_json(m, n);
    const DiagonalReport d = diagonal_subalgebra(*l.spec, m, n);
    rep["diagonal_dim"] = d.diagonal.dim();
    rep["ambient_dim"] = d.ambient.dim();
    rep["minimal_projections"] = d.minimal_projections.size();
    rep["maximal_abelian"] = d.maximal_abelian;
    rep["even"] = d.even;
    rep["expectation_residual"] = d.expectation_residual;
    rep["markov_residual"] = d.markov_residual;
    rep["entropy_full"] = d.entropy_full;
    rep["entropy_pinched"] = d.entropy_pinched;
    rep.require("maximal_abelian", d.maximal_abelian);
    rep.require("even", d.even);
    rep.check("state_preserved", d.expectation_residual, tol().reconstruction);
    rep.check("markov_factorization", d.markov_residual, tol().reconstruction);
    rep.check("pinching_entropy_drop", std::max(0.0, d.entropy_full - d.entropy_pinched), tol().reconstruction);
    return rep.finish(o.mode_budget);
}

Json cmd_reconstruct(const Options& o) {
    Report rep("reconstruct", kPropReconstruct);
    Loaded l = load(o, false);
    const MarkovSpec& s = *l.spec;
    int k = 0, l1 = 0;
    if (!o.window.empty()) {
        std::tie(k, l1) = window_of(o, "reconstruct");
    } else {
        // widest window from site 0 inside the budget, at most 3 sites
        int modes = s.site_modes(0);
        while (l1 < 2 && modes + s.site_modes(l1 + 1) <= o.mode_budget) modes += s.site_modes(++l1);
    }
    rep["source"] = l.source;
    rep["window"] = window_json(k, l1);
    const BlockData data = extract_blocks(s);
    const MarkovSpec rebuilt = build_from_blocks(data);
    double worst = 0;
    Json per = Json::array();
    for (int b = k; b <= l1; ++b) {
        const CMatrix a = marginal_density(s, k, b, o.mode_budget);
        const double d = frob_distance(a, marginal_density(rebuilt, k, b, o.mode_budget)) / double(a.rows());
        per.push_back(Json{{"window", window_json(k, b)}, {"distance", d}});
        worst = std::max(worst, d);
    }
    rep["marginals"] = per;
    rep["worst_distance"] = worst;
    rep.check("marginals_match", worst, tol().reconstruction);
    if (!o.spec_out.empty()) {
        write_file(o.spec_out, dump_json(spec_to_json(rebuilt, Json{{"rebuilt_from", l.source}})));
        rep["spec_written"] = o.spec_out;
    }
    return rep.finish(o.mode_budget);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"fermichain: Markov states on finite windows of CAR chains"};
    app.require_subcommand(1);
    Options o;
    std::string tol_text;

    auto common = [&](CLI::App* s) {
        s->add_option("--mode-budget", o.mode_budget, "largest window in modes (default 8, at most 10)");
        s->add_option("--tol", o.tol_override, "tolerance overrides key=value,... (after FERMICHAIN_TOL)");
        s->add_option("--out", o.out_path, "write the report here instead of stdout");
        s->add_option("--format", o.format, "json or text")->check(CLI::IsMember({"json", "text"}));
    };
    auto source = [&](CLI::App* s, bool fault) {
        s->add_option("--spec", o.spec_path, "spec file");
        s->add_option("--case", o.case_id, "build a gallery case in place (1, 2, 3, 4a .. 10b)");
        s->add_option("--chi", o.chi, "re,im");
        s->add_option("--eta", o.eta, "re,im");
        s->add_flag("--auto-eta", o.auto_eta, "Case 1: eta with a nonzero delta");
        s->add_option("--params", o.params_path, "case parameter file");
        if (fault) s->add_option("--fault", o.fault, "use the second order binary chain with this flip probability");
    };
    auto window = [&](CLI::App* s) { s->add_option("--window", o.window, "K L")->expected(2); };

    auto* build = app.add_subcommand("build-case", "build a gallery case and write its spec");
    build->add_option("--case", o.case_id, "1, 2, 3, 4a .. 10b");
    build->add_option("--chi", o.chi, "re,im");
    build->add_option("--eta", o.eta, "re,im");
    build->add_flag("--auto-eta", o.auto_eta, "Case 1: eta with a nonzero delta");
    build->add_option("--params", o.params_path, "case parameter file");
    build->add_option("--spec-out", o.spec_out, "write the spec here");
    common(build);
    build->get_option("--out")->description("write the spec here (report goes to stdout)");

    auto* verify = app.add_subcommand("verify", "verify every bond of a spec");
    source(verify, false);
    common(verify);

    auto* marginal = app.add_subcommand("marginal", "marginal density on a window");
    source(marginal, false);
    window(marginal);
    marginal->add_option("--method", o.method, "nested, dual or strongly-even");
    marginal->add_flag("--with-density", o.with_density, "include the density matrix");
    common(marginal);

    auto* entropy = app.add_subcommand("entropy", "entropy increments and mean entropy");
    source(entropy, true);
    entropy->add_option("--nmax", o.nmax, "largest n (default 4)");
    entropy->add_option("--first-site", o.first_site, "left edge k");
    common(entropy);

    auto* markov = app.add_subcommand("markov-test", "transition cocycle test on a window");
    source(markov, true);
    window(markov);
    markov->add_option("--t", o.t_grid, "t values, comma separated")->delimiter(',');
    common(markov);

    auto* entangle = app.add_subcommand("entangle", "odd-odd correlation certificate");
    source(entangle, true);
    window(entangle);
    entangle->add_option("--region1", o.region1, "sites, comma separated")->delimiter(',');
    entangle->add_option("--region2", o.region2, "sites, comma separated")->delimiter(',');
    common(entangle);

    auto* classical = app.add_subcommand("classical", "classical Markov chain of the center labels");
    source(classical, false);
    window(classical);
    common(classical);

    auto* decomp = app.add_subcommand("decompose", "center-trajectory decomposition of a marginal");
    source(decomp, false);
    window(decomp);
    common(decomp);

    auto* diag = app.add_subcommand("diagonalize", "diagonal subalgebra of a strongly even state");
    source(diag, false);
    window(diag);
    common(diag);

    auto* recon = app.add_subcommand("reconstruct", "rebuild a spec from its block data and compare marginals");
    source(recon, false);
    window(recon);
    recon->add_option("--spec-out", o.spec_out, "write the rebuilt spec here");
    common(recon);

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (o.mode_budget < 1 || o.mode_budget > kMaxModeBudget)
            fail("BadInput", "--mode-budget must lie in 1.." + std::to_string(kMaxModeBudget));
        if (!o.tol_override.empty()) {
            try {
                install_tolerance_policy(parse_tolerance_override(o.tol_override, tol()));
            } catch (const std::invalid_argument& e) {
                fail("BadInput", std::string("--tol: ") + e.what());
            }
        }
        Json report;
        if (build->parsed()) {
            // build-case writes the spec to --out; the report always goes to stdout
            Options b = o;
            if (!o.out_path.empty() && o.spec_out.empty()) b.spec_out = o.out_path;
            b.out_path.clear();
            report = cmd_build_case(b);
            emit(report, b, out);
        } else {
            if (verify->parsed()) report = cmd_verify(o);
            else if (marginal->parsed()) report = cmd_marginal(o);
            else if (entropy->parsed()) report = cmd_entropy(o);
            else if (markov->parsed()) report = cmd_markov(o);
            else if (entangle->parsed()) report = cmd_entangle(o);
            else if (classical->parsed()) report = cmd_classical(o);
            else if (decomp->parsed()) report = cmd_decompose(o);
            else if (diag->parsed()) report = cmd_diagonalize(o);
            else report = cmd_reconstruct(o);
            emit(report, o, out);
        }
        return report.value("passed", false) ? 0 : 2;
    } catch (const FermiError& e) {
        err << "fermichain: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "fermichain: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace fermichain
