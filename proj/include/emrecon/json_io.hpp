#pragma once

#include <json.hpp>

#include "emrecon/mech.hpp"
#include "emrecon/scenario.hpp"

namespace emrecon {

using nlohmann::json;

void to_json(json& j, const GridShape& s);
void from_json(const json& j, GridShape& s);

void to_json(json& j, const ElectroParams& p);
void from_json(const json& j, ElectroParams& p);

void to_json(json& j, const MechParams& p);
void from_json(const json& j, MechParams& p);

void to_json(json& j, const FiberConfig& f);
void from_json(const json& j, FiberConfig& f);

void to_json(json& j, const Protocol& p);
void from_json(const json& j, Protocol& p);

void to_json(json& j, const RunConfig& c);
void from_json(const json& j, RunConfig& c);

json load_json_file(const std::filesystem::path& path);
void save_json_file(const std::filesystem::path& path, const json& j);

}  // namespace emrecon
