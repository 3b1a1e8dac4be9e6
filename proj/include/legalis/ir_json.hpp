#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "legalis/ir.hpp"

namespace legalis::ir {

/// Program text format. See docs/formats.md for the field-by-field contract.
nlohmann::json to_json(const Program& p);
Program program_from_json(const nlohmann::json& j);

Program load_program(const std::string& path);
void save_program(const Program& p, const std::string& path);

}  // namespace legalis::ir
