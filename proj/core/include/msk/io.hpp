#pragma once

#include <stdexcept>
#include <string>

#include "msk/finite_n.hpp"
#include "msk/parisi.hpp"

namespace msk {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// {"zeta": [...], "q": [[q_1 per species], ...]}
std::string measure_to_json(const DiscreteOrderedMeasure& mu);
DiscreteOrderedMeasure measure_from_json(const std::string& text);
DiscreteOrderedMeasure read_measure(const std::string& path);
void write_measure(const std::string& path, const DiscreteOrderedMeasure& mu);

// One JSON object per record: {seed, t, F_N, overlap_moments: {...}}.
std::string finite_n_records_json(const FiniteNSummary& summary);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

// TOML or JSON (chosen by extension) converted to JSON text.
std::string config_as_json(const std::string& path);

// Shortest text that round-trips the double.
std::string format_double(double x);

}  // namespace msk
