#include "msk/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <toml.hpp>

namespace msk {

using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::string measure_to_json(const DiscreteOrderedMeasure& mu) {
  json j;
  j["zeta"] = mu.zeta;
  j["q"] = json::array();
  for (const Vec& q : mu.q) j["q"].push_back(std::vector<double>(q.data(), q.data() + q.size()));
  return j.dump(2) + "\n";
}

DiscreteOrderedMeasure measure_from_json(const std::string& text) {
  DiscreteOrderedMeasure mu;
  try {
    const json j = json::parse(text);
    mu.zeta = j.at("zeta").get<std::vector<double>>();
    for (const auto& level : j.at("q")) {
      const auto v = level.get<std::vector<double>>();
      mu.q.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("measure JSON: ") + e.what());
  }
  if (mu.q.empty() && mu.zeta.empty()) throw ConfigError("measure JSON: empty measure");
  return mu;
}

DiscreteOrderedMeasure read_measure(const std::string& path) { return measure_from_json(read_text(path)); }

void write_measure(const std::string& path, const DiscreteOrderedMeasure& mu) { write_text(path, measure_to_json(mu)); }

std::string finite_n_records_json(const FiniteNSummary& summary) {
  json arr = json::array();
  for (const auto& r : summary.records) {
    json rec;
    rec["seed"] = r.seed;
    rec["t"] = r.t;
    rec["F_N"] = r.free_energy;
    rec["overlap_moments"] = {{"mean_B_dist", r.mean_B_dist}, {"ibp_rhs", r.ibp_rhs}, {"dF_dt", r.dF_dt}};
    arr.push_back(rec);
  }
  return arr.dump(2) + "\n";
}

std::string config_as_json(const std::string& path) {
  const std::string text = read_text(path);
  const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (is_json) return text;
  try {
    const toml::table tbl = toml::parse(text, path);
    std::ostringstream ss;
    ss << toml::json_formatter{tbl};
    return ss.str();
  } catch (const toml::parse_error& e) {
    std::ostringstream ss;
    ss << "TOML parse error in " << path << ": " << e.description() << " at " << e.source().begin;
    throw ConfigError(ss.str());
  }
}

}  // namespace msk
