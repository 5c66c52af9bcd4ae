#include "simrec/serialize.hpp"

#include <charconv>
#include <cmath>

namespace simrec {

std::string format_double(double value) {
  if (!std::isfinite(value)) throw DomainError("format_double: non-finite value");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

Json matrix_to_json(const MatrixXd& m) {
  Json values = Json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}};
}

MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const Json& values = j.at("values");
  if (rows < 0 || cols < 0 || static_cast<Index>(values.size()) != rows * cols)
    throw ConfigError("matrix snapshot: value count does not match rows * cols");
  MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = values[static_cast<std::size_t>(r * cols + c)].get<double>();
  return m;
}

Json to_json(const UserPool& users) {
  return Json{{"actual_prefs", matrix_to_json(users.actual_prefs)},
              {"true_utility", matrix_to_json(users.true_utility)},
              {"known_utility", matrix_to_json(users.known_utility)},
              {"known_fraction", matrix_to_json(users.known_fraction)},
              {"interacted", users.interacted},
              {"drift_weight", users.drift_weight},
              {"attention_decay", users.attention_decay}};
}

UserPool user_pool_from_json(const Json& j) {
  UserPool users;
  users.actual_prefs = matrix_from_json(j.at("actual_prefs"));
  users.true_utility = matrix_from_json(j.at("true_utility"));
  users.known_utility = matrix_from_json(j.at("known_utility"));
  users.known_fraction = matrix_from_json(j.at("known_fraction"));
  users.interacted = j.at("interacted").get<std::vector<std::vector<ItemId>>>();
  users.drift_weight = j.at("drift_weight").get<double>();
  users.attention_decay = j.at("attention_decay").get<double>();
  if (static_cast<Index>(users.interacted.size()) != users.size())
    throw ConfigError("user snapshot: history count does not match user count");
  return users;
}

Json to_json(const ItemCatalog& items) {
  return Json{{"attributes", matrix_to_json(items.attributes)},
              {"created_at", items.created_at},
              {"interaction_counts", items.interaction_counts},
              {"creator", items.creator}};
}

ItemCatalog item_catalog_from_json(const Json& j) {
  ItemCatalog items;
  items.attributes = matrix_from_json(j.at("attributes"));
  items.created_at = j.at("created_at").get<std::vector<Timestep>>();
  items.interaction_counts = j.at("interaction_counts").get<std::vector<std::int64_t>>();
  items.creator = j.at("creator").get<std::vector<std::int64_t>>();
  const auto n = static_cast<std::size_t>(items.size());
  if (items.created_at.size() != n || items.interaction_counts.size() != n || items.creator.size() != n)
    throw ConfigError("item snapshot: per-item lists do not match the attribute columns");
  return items;
}

Json to_json(const CreatorPool& creators) {
  return Json{{"profiles", matrix_to_json(creators.profiles)},
              {"creation_prob", creators.creation_prob},
              {"item_concentration", creators.item_concentration},
              {"learn_rate", creators.learn_rate},
              {"mode", creators.mode == CreatorMode::dirichlet_attrs ? "dirichlet" : "bernoulli"},
              {"weight_by_count", creators.weight_by_count}};
}

CreatorPool creator_pool_from_json(const Json& j) {
  CreatorPool creators;
  creators.profiles = matrix_from_json(j.at("profiles"));
  creators.creation_prob = j.at("creation_prob").get<double>();
  creators.item_concentration = j.at("item_concentration").get<double>();
  creators.learn_rate = j.at("learn_rate").get<double>();
  const auto mode = j.at("mode").get<std::string>();
  if (mode == "dirichlet") creators.mode = CreatorMode::dirichlet_attrs;
  else if (mode == "bernoulli") creators.mode = CreatorMode::bernoulli_attrs;
  else throw ConfigError("creator snapshot: unknown mode '" + mode + "'");
  creators.weight_by_count = j.at("weight_by_count").get<bool>();
  return creators;
}

Json state_to_json(const SimulationState& state) {
  Json log = Json::array();
  for (const auto& e : state.log) log.push_back(Json::array({e.user, e.item, e.t}));
  Json out{{"t", state.t},
           {"active", state.active},
           {"model", std::string(to_string(state.model.kind()))},
           {"train_count", state.model.train_count()},
           {"users", to_json(state.users)},
           {"items", to_json(state.items)},
           {"log", std::move(log)}};
  if (state.creators) out["creators"] = to_json(*state.creators);
  return out;
}

}  // namespace simrec
