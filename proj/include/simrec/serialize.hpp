#pragma once

#include "simrec/agents.hpp"
#include "simrec/common.hpp"
#include "simrec/engine.hpp"

#include <json.hpp>

#include <string>

namespace simrec {

using Json = nlohmann::ordered_json;

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

/// {"rows": r, "cols": c, "values": [row-major]}
Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j);

Json to_json(const UserPool& users);
Json to_json(const ItemCatalog& items);
Json to_json(const CreatorPool& creators);
UserPool user_pool_from_json(const Json& j);
ItemCatalog item_catalog_from_json(const Json& j);
CreatorPool creator_pool_from_json(const Json& j);

/// Pools, log and step counter; the model is described by kind only.
Json state_to_json(const SimulationState& state);

}  // namespace simrec
