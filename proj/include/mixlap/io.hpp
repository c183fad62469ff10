#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mixlap/first_eigen.hpp"
#include "mixlap/grid.hpp"
#include "mixlap/kernel.hpp"

namespace mixlap {

// Strict schema helper: rejects unknown keys so configs fail fast.
void validate_keys(const nlohmann::json& obj,
                   const std::vector<std::string>& allowed,
                   const std::string& where);

// {"shape": "...", "params": {...}}
nlohmann::json domain_to_json(const DomainSpec& spec);
DomainSpec domain_from_json(const nlohmann::json& j);

// {"family":"tent","radius":0.2,...}; {"family":"local"} selects local-only
// mode and is returned as an empty optional.
nlohmann::json kernel_to_json(const Kernel& k);
std::optional<Kernel> kernel_from_json(const nlohmann::json& j, int dim);

nlohmann::json eigenresult_to_json(const EigenResult& r);

// Shortest-precision decimal that round-trips a double (%.17g).
std::string format_double(double v);

// Standalone single-series SVG line chart (no external assets).
std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::string& ylabel, const std::vector<double>& x,
                           const std::vector<double>& y);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mixlap
