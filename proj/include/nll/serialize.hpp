#pragma once

// JSON round-trips for the fitted objects. Doubles are written with full
// precision, so a save/load cycle is bit-exact.

#include "nll/activesub.hpp"
#include "nll/dataset.hpp"
#include "nll/regression.hpp"
#include "nll/revnet.hpp"

#include <json.hpp>

#include <string>

namespace nll {

using Json = nlohmann::json;

Json to_json(const Vec& v);
Json to_json(const Mat& m);  // array of rows
Vec vec_from_json(const Json& j);
Mat mat_from_json(const Json& j);

Json to_json(const RevNetParams& p);
RevNetParams revnet_from_json(const Json& j);

Json to_json(const ASModel& m);
ASModel as_model_from_json(const Json& j);

Json to_json(const Regressor& r);
Regressor regressor_from_json(const Json& j);

Json to_json(const DomainBox& b);
DomainBox box_from_json(const Json& j);

Json to_json(const Normalization& n);
Normalization normalization_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const Json& j, const std::string& path);

}  // namespace nll
