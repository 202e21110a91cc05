#include "ecosched/catalog.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace ecosched {

namespace {

CloudSite catalog_site(std::string id, double carbon_rate, double energy_price, double beta,
                       double alpha, GHz f_max, int cpus) {
  CloudSite s;
  s.id = std::move(id);
  s.carbon_rate = carbon_rate;
  s.energy_price = energy_price;
  s.beta = beta;
  s.alpha = alpha;
  s.f_max = f_max;
  s.f_min = kMinFrequencyRatio * f_max;
  s.exec_price = kDefaultExecPrice;
  s.cpu_count = cpus;
  return s;
}

}  // namespace

std::vector<CloudSite> builtin_catalog() {
  return {
      catalog_site("New York, USA", 0.389, 0.15, 65, 7.5, 1.8, 2050),
      catalog_site("Pennsylvania, USA", 0.574, 0.09, 75, 5, 1.8, 2600),
      catalog_site("California, USA", 0.275, 0.13, 60, 60, 2.4, 650),
      catalog_site("Ohio, USA", 0.817, 0.09, 75, 5.2, 2.4, 540),
      catalog_site("North Carolina, USA", 0.563, 0.07, 90, 4.5, 3.0, 600),
      catalog_site("Texas, USA", 0.664, 0.1, 105, 6.5, 3.0, 350),
      catalog_site("France", 0.083, 0.17, 90, 4.0, 3.2, 200),
      catalog_site("Australia", 0.924, 0.11, 105, 4.4, 3.2, 250),
  };
}

long long total_cpus(std::span<const CloudSite> sites) {
  return std::accumulate(sites.begin(), sites.end(), 0LL,
                         [](long long acc, const CloudSite& s) { return acc + s.cpu_count; });
}

std::vector<CloudSite> parse_sites_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("site catalog: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("sites") || !doc["sites"].is_array()) {
    throw InvalidArgument("site catalog: expected an object with a 'sites' array");
  }

  std::vector<CloudSite> sites;
  for (const auto& entry : doc["sites"]) {
    CloudSite s;
    try {
      s.id = entry.at("id").get<std::string>();
      s.carbon_rate = entry.at("carbon_rate").get<double>();
      s.energy_price = entry.at("energy_price").get<double>();
      s.beta = entry.at("beta").get<double>();
      s.alpha = entry.at("alpha").get<double>();
      s.f_max = entry.at("f_max").get<double>();
      s.cpu_count = entry.at("cpu_count").get<int>();
      s.f_min = entry.value("f_min", kMinFrequencyRatio * s.f_max);
      s.exec_price = entry.value("exec_price", kDefaultExecPrice);
      if (entry.contains("cop") && !entry["cop"].is_null()) {
        s.cop = entry["cop"].get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("site catalog entry " + std::to_string(sites.size()) + ": " +
                            e.what());
    }
    validate(s);
    sites.push_back(std::move(s));
  }
  return sites;
}

std::vector<CloudSite> load_sites_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open site catalog '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sites_json(buf.str());
}

std::string sites_to_json(std::span<const CloudSite> sites) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : sites) {
    nlohmann::json e = {
        {"id", s.id},         {"carbon_rate", s.carbon_rate}, {"energy_price", s.energy_price},
        {"beta", s.beta},     {"alpha", s.alpha},             {"f_max", s.f_max},
        {"f_min", s.f_min},   {"exec_price", s.exec_price},   {"cpu_count", s.cpu_count},
    };
    if (s.cop) e["cop"] = *s.cop;
    arr.push_back(std::move(e));
  }
  return nlohmann::json{{"sites", arr}}.dump(2);
}

}  // namespace ecosched
