#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "rarepath/baseline.hpp"
#include "rarepath/last_particle.hpp"

namespace rarepath {

nlohmann::json to_json(const EstimateResult& r, bool include_timing = true);
nlohmann::json to_json(const McResult& r, bool include_timing = true);

// One CSV row per replicate; the header functions return the matching
// column names.
std::string estimate_csv_header();
std::string to_csv_row(std::size_t replicate, const EstimateResult& r);
std::string mc_csv_header();
std::string to_csv_row(std::size_t replicate, const McResult& r);

} // namespace rarepath
