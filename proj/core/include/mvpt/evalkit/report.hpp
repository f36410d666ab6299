#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "mvpt/evalkit/association.hpp"
#include "mvpt/evalkit/retrieval.hpp"

namespace mvpt::evalkit {

nlohmann::json to_json(const RetrievalReport& report);
nlohmann::json to_json(const std::vector<SweepPoint>& sweep, std::string_view parameter_name);
nlohmann::json to_json(const AssociationMatrix& matrix);

// One row per named report: name, then MedR and R@K per direction, then the
// average of the largest K over directions.
std::string report_csv(const std::vector<std::pair<std::string, RetrievalReport>>& rows);
std::string sweep_csv(const std::vector<SweepPoint>& sweep, std::string_view parameter_name);
std::string association_csv(const AssociationMatrix& matrix);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace mvpt::evalkit
