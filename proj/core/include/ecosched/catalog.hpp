#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ecosched/types.hpp"

namespace ecosched {

/// The eight reference data centers. COP is left unset for the caller to sample.
[[nodiscard]] std::vector<CloudSite> builtin_catalog();

[[nodiscard]] long long total_cpus(std::span<const CloudSite> sites);

/// Parses a site catalog from JSON text.
///
/// Schema: `{"sites": [{"id": str, "carbon_rate": num, "energy_price": num,
/// "beta": num, "alpha": num, "f_max": num, "cpu_count": int,
/// "f_min"?: num, "exec_price"?: num, "cop"?: num}, ...]}`.
/// Missing `f_min` defaults to 0.375 * f_max and missing `exec_price` to
/// $0.40 per CPU-hour. Every site is validated; the first violation throws.
[[nodiscard]] std::vector<CloudSite> parse_sites_json(const std::string& text);

[[nodiscard]] std::vector<CloudSite> load_sites_file(const std::filesystem::path& path);

[[nodiscard]] std::string sites_to_json(std::span<const CloudSite> sites);

}  // namespace ecosched
