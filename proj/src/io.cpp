#include "fermichain/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fermichain/errors.hpp"

namespace fermichain {

namespace {

const char* kSpecFormat = "fermichain.spec/1";

double number(const Json& j, const std::string& what) {
    if (!j.is_number()) fail("BadInput", what + ": expected a number");
    return j.get<double>();
}

int integer(const Json& j, const std::string& what) {
    if (!j.is_number_integer()) fail("BadInput", what + ": expected an integer");
    return j.get<int>();
}

const Json& field(const Json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) fail("BadInput", where + ": missing \"" + key + "\"");
    return j.at(key);
}

void scrub(Json& j) {
    if (j.is_number_float()) {
        if (j.get<double>() == 0.0) j = 0.0;  // drops the sign of -0
    } else if (j.is_structured()) {
        for (auto& v : j) scrub(v);
    }
}

OrbitKind kind_from(const std::string& s) {
    if (s == "single") return OrbitKind::Single;
    if (s == "double") return OrbitKind::Double;
    fail("BadInput", "block kind must be \"single\" or \"double\", got \"" + s + "\"");
}

Json bond_to_json(const TransitionExpectation& e) {
    Json b;
    b["left_modes"] = e.left_modes();
    b["right_modes"] = e.right_modes();
    if (e.blocks().empty()) {
        b["superop"] = to_json(e.superop());
        return b;
    }
    Json blocks = Json::array();
    for (const auto& blk : e.blocks()) {
        Json x;
        x["kind"] = blk.kind == OrbitKind::Single ? "single" : "double";
        x["p"] = to_json(blk.p);
        Json n = Json::array();
        for (const auto& m : blk.n.basis) n.push_back(to_json(m));
        x["n"] = n;
        x["psi"] = to_json(blk.psi);
        blocks.push_back(x);
    }
    b["blocks"] = blocks;
    return b;
}

TransitionExpectation bond_from_json(const Json& b, const std::string& where) {
    const int dl = integer(field(b, "left_modes", where), where + ".left_modes");
    const int dr = integer(field(b, "right_modes", where), where + ".right_modes");
    if (dl < 1 || dr < 1 || dl > 5 || dr > 5) fail("BadInput", where + ": site mode counts must lie in 1..5");
    if (b.contains("blocks")) {
        std::vector<BuiltBlock> blocks;
        std::size_t i = 0;
        for (const auto& x : b.at("blocks")) {
            const std::string w = where + ".blocks[" + std::to_string(i++) + "]";
            const CMatrix p = matrix_from_json(field(x, "p", w));
            std::vector<CMatrix> n;
            for (const auto& m : field(x, "n", w)) n.push_back(matrix_from_json(m));
            const CMatrix psi = matrix_from_json(field(x, "psi", w));
            if (!field(x, "kind", w).is_string()) fail("BadInput", w + ".kind: expected a string");
            try {
                blocks.push_back(
                    build_block({kind_from(x.at("kind").get<std::string>()), p, subalgebra_from_span(n, p), psi}, dr));
            } catch (const FermiError& e) {
                fail("InvalidSpec", w + ": " + e.what());
            }
        }
        return assemble(blocks, dl, dr);
    }
    return TransitionExpectation(dl, dr, matrix_from_json(field(b, "superop", where)));
}

}  // namespace

Json to_json(const CMatrix& m) {
    Json re = Json::array(), im = Json::array();
    bool any_im = false;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        Json r = Json::array(), c = Json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) {
            r.push_back(m(i, k).real());
            c.push_back(m(i, k).imag());
            any_im = any_im || m(i, k).imag() != 0.0;
        }
        re.push_back(r);
        im.push_back(c);
    }
    Json out;
    out["re"] = re;
    if (any_im) out["im"] = im;
    return out;
}

CMatrix matrix_from_json(const Json& j) {
    std::vector<std::vector<cplx>> rows;
    if (j.is_object()) {
        const Json& re = field(j, "re", "matrix");
        if (!re.is_array()) fail("BadInput", "matrix.re: expected rows");
        for (const auto& r : re) {
            if (!r.is_array()) fail("BadInput", "matrix.re: expected rows");
            std::vector<cplx> row;
            for (const auto& v : r) row.emplace_back(number(v, "matrix.re"), 0.0);
            rows.push_back(row);
        }
        if (j.contains("im")) {
            const Json& im = j.at("im");
            if (!im.is_array() || im.size() != rows.size()) fail("BadInput", "matrix.im: shape differs from matrix.re");
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (!im[i].is_array() || im[i].size() != rows[i].size())
                    fail("BadInput", "matrix.im: shape differs from matrix.re");
                for (std::size_t k = 0; k < rows[i].size(); ++k)
                    rows[i][k] = cplx(rows[i][k].real(), number(im[i][k], "matrix.im"));
            }
        }
    } else if (j.is_array()) {
        for (const auto& r : j) {
            if (!r.is_array()) fail("BadInput", "matrix: expected an array of rows");
            std::vector<cplx> row;
            for (const auto& v : r) row.push_back(v.is_array() ? complex_from_json(v) : cplx(number(v, "matrix"), 0.0));
            rows.push_back(row);
        }
    } else {
        fail("BadInput", "matrix: expected {re, im} or an array of rows");
    }
    if (rows.empty()) fail("BadInput", "matrix: no rows");
    const std::size_t c = rows.front().size();
    std::vector<cplx> data;
    for (const auto& r : rows) {
        if (r.size() != c || c == 0) fail("BadInput", "matrix: ragged or empty rows");
        data.insert(data.end(), r.begin(), r.end());
    }
    return CMatrix(rows.size(), c, std::move(data));
}

Json to_json(cplx z) { return Json::array({z.real(), z.imag()}); }

cplx complex_from_json(const Json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2) fail("BadInput", "complex: expected [re, im]");
    return {number(j[0], "complex"), number(j[1], "complex")};
}

Json spec_to_json(const MarkovSpec& spec, const Json& metadata) {
    Json out;
    out["format"] = kSpecFormat;
    Json chain;
    chain["homogeneous"] = spec.homogeneous;
    Json modes = Json::array();
    if (spec.homogeneous) {
        modes.push_back(spec.bonds.front().left_modes());
    } else {
        for (const auto& b : spec.bonds) modes.push_back(b.left_modes());
        modes.push_back(spec.bonds.back().right_modes());
    }
    chain["site_modes"] = modes;
    out["chain"] = chain;
    Json bonds = Json::array();
    for (const auto& b : spec.bonds) bonds.push_back(bond_to_json(b));
    out["bonds"] = bonds;
    Json init;
    init["rho"] = to_json(spec.rho);
    init["stationary"] = spec.stationary_initial;
    init["stationary_fixed_dim"] = spec.stationary_fixed_dim;
    out["initial"] = init;
    out["metadata"] = metadata;
    return out;
}

MarkovSpec spec_from_json(const Json& j) {
    if (!j.is_object()) fail("BadInput", "spec: expected an object");
    if (j.contains("format") && j.at("format") != kSpecFormat)
        fail("BadInput", std::string("spec: unknown format, expected ") + kSpecFormat);
    const Json& chain = field(j, "chain", "spec");
    const Json& h = field(chain, "homogeneous", "spec.chain");
    if (!h.is_boolean()) fail("BadInput", "spec.chain.homogeneous: expected true or false");
    const Json& bonds = field(j, "bonds", "spec");
    if (!bonds.is_array() || bonds.empty()) fail("BadInput", "spec.bonds: expected a nonempty array");
    std::vector<TransitionExpectation> es;
    for (std::size_t i = 0; i < bonds.size(); ++i) es.push_back(bond_from_json(bonds[i], "spec.bonds[" + std::to_string(i) + "]"));
    const Json& init = field(j, "initial", "spec");
    const CMatrix rho = matrix_from_json(field(init, "rho", "spec.initial"));
    MarkovSpec s;
    if (h.get<bool>()) {
        if (es.size() != 1) fail("BadInput", "spec: a homogeneous chain has exactly one bond");
        s = homogeneous_spec(es.front(), rho);
    } else {
        s = chain_spec(es, rho);
    }
    if (init.contains("stationary")) {
        if (!init.at("stationary").is_boolean()) fail("BadInput", "spec.initial.stationary: expected true or false");
        s.stationary_initial = init.at("stationary").get<bool>();
    }
    if (init.contains("stationary_fixed_dim"))
        s.stationary_fixed_dim = std::size_t(integer(init.at("stationary_fixed_dim"), "spec.initial.stationary_fixed_dim"));
    validate_spec(s);
    return s;
}

CaseParams case_params_from_json(const Json& j) {
    if (!j.is_object()) fail("BadInput", "case file: expected an object");
    CaseParams p;
    const Json& c = field(j, "case", "case file");
    if (c.is_string()) p.case_id = c.get<std::string>();
    else if (c.is_number_integer()) p.case_id = std::to_string(c.get<int>());
    else fail("BadInput", "case file: \"case\" must be a string such as \"4b\"");
    if (j.contains("chi")) p.chi = complex_from_json(j.at("chi"));
    if (j.contains("eta")) p.eta = complex_from_json(j.at("eta"));
    if (j.contains("auto_eta")) {
        if (!j.at("auto_eta").is_boolean()) fail("BadInput", "case file: auto_eta must be true or false");
        p.auto_eta = j.at("auto_eta").get<bool>();
    }
    if (j.contains("states")) {
        if (!j.at("states").is_object()) fail("BadInput", "case file: states must map names to matrices");
        for (const auto& [k, v] : j.at("states").items()) p.states[k] = matrix_from_json(v);
    }
    return p;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("BadInput", "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        fail("BadInput", path + ": " + e.what());
    }
}

std::string dump_json(const Json& j) {
    Json c = j;
    scrub(c);
    return c.dump(2) + "\n";
}

}  // namespace fermichain
