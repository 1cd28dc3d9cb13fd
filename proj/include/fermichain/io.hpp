#pragma once
// JSON forms of matrices, specs and case parameters.
//
//   matrix   {"re": [[...], ...], "im": [[...], ...]}   (im may be omitted)
//            or rows of numbers / [re, im] pairs on input
//   complex  [re, im]
//   spec     {"format", "chain", "bonds": [...], "initial", "metadata"}
//            bonds carry their blocks (kind, p, n basis, psi); a bond
//            without blocks carries its compact superoperator
//   case     {"case": "1".."10b", "chi": [re,im], "eta": [re,im],
//             "auto_eta": bool, "states": {name: matrix}}
//
// Output is deterministic: keys in insertion order, doubles in shortest
// round-trip form, negative zero written as 0.

#include <string>

#include "json.hpp"
#include "fermichain/gallery.hpp"
#include "fermichain/markov.hpp"

namespace fermichain {

using Json = nlohmann::ordered_json;

Json to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j);  // throws BadInput
Json to_json(cplx z);
cplx complex_from_json(const Json& j);

Json spec_to_json(const MarkovSpec& spec, const Json& metadata = Json::object());
MarkovSpec spec_from_json(const Json& j);  // throws BadInput, InvalidSpec

CaseParams case_params_from_json(const Json& j);

Json read_json_file(const std::string& path);  // throws BadInput
std::string dump_json(const Json& j);          // indent 2, trailing newline

}  // namespace fermichain
