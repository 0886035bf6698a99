// Data ingestion, scaling, permutation, and synthetic stream generation.
#pragma once

#include "conformal/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace conformal {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// USPS text format: one observation per line, label first, then 256 values
// in [-1,1]. A single leading non-numeric header line is skipped.
inline std::vector<Observation> load_usps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_usps: cannot open " + path);
  std::vector<Observation> observations;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::istringstream ss(line);
    double label;
    if (!(ss >> label)) {
      if (line_number == 1 || observations.empty()) continue;  // header / blank
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ParseError("load_usps: malformed line " + std::to_string(line_number));
    }
    Vector x(256);
    for (int j = 0; j < 256; ++j) {
      double v;
      if (!(ss >> v))
        throw ParseError("load_usps: line " + std::to_string(line_number) +
                         " has fewer than 256 feature values");
      if (v < -1.0 - 1e-6 || v > 1.0 + 1e-6)
        throw ParseError("load_usps: line " + std::to_string(line_number) +
                         " has a feature outside [-1,1]");
      x(j) = v;
    }
    double extra;
    if (ss >> extra)
      throw ParseError("load_usps: line " + std::to_string(line_number) +
                       " has more than 256 feature values");
    observations.emplace_back(std::move(x), static_cast<int>(std::lround(label)));
  }
  return observations;
}

namespace detail {

// Case-insensitive, punctuation-stripped header matching ("Disciplinary
// failure" == "Disciplinary_failure").
inline std::string normalize_header(const std::string& s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

inline std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
      field.pop_back();
    fields.push_back(field);
  }
  return fields;
}

}  // namespace detail

// UCI "Absenteeism at work": 740 rows. Features (Age/50, Education/3, Son/4),
// optionally extended with Social drinker and Social smoker; label is
// Disciplinary failure (used only as label, never as a feature). Both comma-
// and semicolon-separated variants are accepted.
inline std::vector<Observation> load_absenteeism(const std::string& path,
                                                 bool extended = false) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_absenteeism: cannot open " + path);
  std::string header;
  if (!std::getline(in, header))
    throw ParseError("load_absenteeism: empty file " + path);
  const char delim = header.find(';') != std::string::npos ? ';' : ',';
  const auto columns = detail::split(header, delim);

  auto column_index = [&](const std::string& wanted) {
    const std::string target = detail::normalize_header(wanted);
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (detail::normalize_header(columns[i]) == target) return i;
    std::string available;
    for (const auto& c : columns) available += (available.empty() ? "" : ", ") + c;
    throw ParseError("load_absenteeism: missing column '" + wanted +
                     "'; available: " + available);
  };

  const std::size_t age = column_index("Age");
  const std::size_t education = column_index("Education");
  const std::size_t son = column_index("Son");
  const std::size_t label = column_index("Disciplinary failure");
  std::size_t drinker = 0, smoker = 0;
  if (extended) {
    drinker = column_index("Social drinker");
    smoker = column_index("Social smoker");
  }

  std::vector<Observation> observations;
  std::string line;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = detail::split(line, delim);
    auto value = [&](std::size_t i) {
      if (i >= fields.size())
        throw ParseError("load_absenteeism: line " + std::to_string(line_number) +
                         " has too few fields");
      return std::stod(fields[i]);
    };
    Vector x(extended ? 5 : 3);
    x(0) = value(age) / 50.0;
    x(1) = value(education) / 3.0;
    x(2) = value(son) / 4.0;
    if (extended) {
      x(3) = value(drinker);
      x(4) = value(smoker);
    }
    observations.emplace_back(std::move(x), static_cast<int>(std::lround(value(label))));
  }
  return observations;
}

// Seeded Fisher-Yates; deterministic per seed, multiset preserved.
inline std::vector<Observation> permute(std::vector<Observation> stream,
                                        std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  for (std::size_t i = stream.size(); i > 1; --i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(engine);
    std::swap(stream[i - 1], stream[j]);
  }
  return stream;
}

// Synthetic stream: pre-change generator for steps n < T (1-based), the
// post-change generator from step T on. T = 0 means never IID (all post);
// no change point means the whole stream is drawn from the pre-generator.
struct StreamSpec {
  using Generator = std::function<Observation(SeededRandomness&)>;
  Generator pre;
  Generator post;
  std::optional<std::size_t> change_point;
  std::size_t length = 0;
};

inline std::vector<Observation> synth_stream(const StreamSpec& spec,
                                             std::uint64_t seed) {
  if (!spec.pre && !spec.change_point)
    throw std::domain_error("synth_stream: pre-change generator required");
  SeededRandomness rng(seed);
  std::vector<Observation> stream;
  stream.reserve(spec.length);
  for (std::size_t n = 1; n <= spec.length; ++n) {
    const bool post = spec.change_point && n >= *spec.change_point;
    if (post) {
      if (!spec.post) throw std::domain_error("synth_stream: post-change generator required");
      stream.push_back(spec.post(rng));
    } else {
      stream.push_back(spec.pre(rng));
    }
  }
  return stream;
}

inline StreamSpec::Generator bernoulli_generator(double p) {
  return [p](SeededRandomness& rng) {
    return Observation::scalar(rng.uniform() < p ? 1.0 : 0.0);
  };
}

inline StreamSpec::Generator uniform_generator() {
  return [](SeededRandomness& rng) { return Observation::scalar(rng.uniform()); };
}

}  // namespace conformal
