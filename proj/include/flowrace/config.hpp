#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flowrace/conflict.hpp"
#include "flowrace/entity.hpp"
#include "flowrace/interleave.hpp"
#include "flowrace/oracle.hpp"

namespace flowrace {

struct Config {
  PkRules pk_rules = PkRules::defaults();
  SqlMode sql_mode = SqlMode::skip;
  InstanceRules instance_rules;
  std::vector<std::string> idempotent_endpoints;
  OracleConfig oracle;
  std::vector<StoreInstance> coupled_stores;
  CampaignBudget budgets;

  ConflictOptions conflict_options() const { return {sql_mode, instance_rules, idempotent_endpoints}; }
};

// Unknown keys anywhere in the document raise ConfigError.
Config parse_config(const Json& doc);
Config load_config(const std::filesystem::path& path);
Json to_json(const Config& cfg);

}  // namespace flowrace
