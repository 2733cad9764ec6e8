/*
 * Copyright 2026 The fedlab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fedlab/config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <utility>

#include "fedlab/algorithms.h"
#include "fedlab/types.h"

namespace fedlab {
namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::uint64_t to_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw InvalidArgument("expected a nonnegative integer, got '" + s + "'");
  return v;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() ||
      !std::isfinite(v))
    throw InvalidArgument("expected a finite real number, got '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw InvalidArgument("expected true or false, got '" + s + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(to_double(item));
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(s)) out.push_back(to_uint(item));
  return out;
}

// "1,2,3" or "1..20".
std::vector<std::uint64_t> to_seeds(const std::string& s) {
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t lo = to_uint(trim(s.substr(0, dots)));
    const std::uint64_t hi = to_uint(trim(s.substr(dots + 2)));
    if (hi < lo) throw InvalidArgument("empty seed range '" + s + "'");
    if (hi - lo >= 100000) throw InvalidArgument("seed range too large");
    std::vector<std::uint64_t> out;
    for (std::uint64_t v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) out.push_back(to_uint(item));
  return out;
}

std::string one_of(const std::string& s,
                   std::initializer_list<std::string_view> choices) {
  for (auto c : choices)
    if (s == c) return s;
  std::string list;
  for (auto c : choices) {
    if (!list.empty()) list += ", ";
    list += c;
  }
  throw InvalidArgument("expected one of {" + list + "}, got '" + s + "'");
}

using Setter = std::function<void(const std::string&, ExperimentConfig&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // [experiment]
    t["experiment.name"] = [](const std::string& v, ExperimentConfig& c) {
      if (v.empty() || v.find_first_of("/\\ ") != std::string::npos)
        throw InvalidArgument("name must be non-empty without spaces or "
                              "path separators");
      c.name = v;
    };
    t["experiment.seeds"] = [](const std::string& v, ExperimentConfig& c) {
      c.seeds = to_seeds(v);
    };
    t["experiment.output_dir"] = [](const std::string& v, ExperimentConfig& c) {
      c.output_dir = v;
    };
    // [problem]
    t["problem.kind"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.kind = one_of(v, {"quadratic_anchors", "counterexample",
                                  "logistic", "least_squares", "csv_logistic"});
    };
    t["problem.counts"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.counts = to_sizes(v);
    };
    t["problem.dim"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.dim = to_uint(v);
    };
    t["problem.clients"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.clients = to_uint(v);
    };
    t["problem.samples_per_client"] = [](const std::string& v,
                                         ExperimentConfig& c) {
      c.problem.samples_per_client = to_uint(v);
    };
    t["problem.lambda2"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.lambda2 = to_double(v);
    };
    t["problem.l1"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.l1 = to_double(v);
    };
    t["problem.heterogeneity"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.heterogeneity = to_double(v);
    };
    t["problem.condition"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.condition = to_double(v);
    };
    t["problem.data_seed"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.data_seed = to_uint(v);
    };
    t["problem.path"] = [](const std::string& v, ExperimentConfig& c) {
      c.problem.path = v;
    };
    // [sampling]
    t["sampling.kind"] = [](const std::string& v, ExperimentConfig& c) {
      c.sampling.kind = one_of(v, {"full", "uniform", "independent"});
    };
    t["sampling.m"] = [](const std::string& v, ExperimentConfig& c) {
      c.sampling.m = to_uint(v);
    };
    t["sampling.p"] = [](const std::string& v, ExperimentConfig& c) {
      c.sampling.p = to_doubles(v);
    };
    // [algorithm]
    auto& a = t;
    a["algorithm.kind"] = [](const std::string& v, ExperimentConfig& c) {
      const auto& kinds = algorithm_kinds();
      if (std::find(kinds.begin(), kinds.end(), v) == kinds.end())
        throw InvalidArgument("unknown algorithm '" + v + "'; expected one of {" +
                              join(kinds, ", ") + "}");
      c.algorithm.kind = v;
    };
    a["algorithm.rounds"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.rounds = to_uint(v);
    };
    a["algorithm.step"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.step = to_double(v);
    };
    a["algorithm.schedule"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.schedule = one_of(v, {"constant", "inverse_time"});
    };
    a["algorithm.step_offset"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.step_offset = to_double(v);
    };
    a["algorithm.compressor"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.compressor = parse_compressor(v);
    };
    a["algorithm.master_compressor"] = [](const std::string& v,
                                          ExperimentConfig& c) {
      c.algorithm.master_compressor = parse_compressor(v);
    };
    a["algorithm.error_feedback"] = [](const std::string& v,
                                       ExperimentConfig& c) {
      c.algorithm.error_feedback = to_bool(v);
    };
    a["algorithm.allow_biased"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.allow_biased = to_bool(v);
    };
    a["algorithm.regime"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.regime = one_of(v, {"uniform", "exponential", "decreasing"});
    };
    a["algorithm.kappa"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.kappa = to_double(v);
    };
    a["algorithm.oracle"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.oracle = one_of(v, {"exact", "stochastic"});
    };
    a["algorithm.batch"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.batch = to_uint(v);
    };
    a["algorithm.alpha"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.alpha = to_double(v);
    };
    a["algorithm.gamma"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.gamma = to_double(v);
    };
    a["algorithm.variant"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.variant = one_of(v, {"lsvrg", "saga"});
    };
    a["algorithm.epoch_length"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.epoch_length = to_uint(v);
    };
    a["algorithm.anchor_weights"] = [](const std::string& v,
                                       ExperimentConfig& c) {
      c.algorithm.anchor_weights = to_doubles(v);
    };
    a["algorithm.mode"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.mode = one_of(v, {"full", "uniform", "ocs", "aocs"});
    };
    a["algorithm.m"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.m = to_uint(v);
    };
    a["algorithm.j_max"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.j_max = to_uint(v);
    };
    a["algorithm.count_overhead"] = [](const std::string& v,
                                       ExperimentConfig& c) {
      c.algorithm.count_overhead = to_bool(v);
    };
    a["algorithm.local_steps"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.local_steps = to_uint(v);
    };
    a["algorithm.epochs"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.epochs = to_uint(v);
    };
    a["algorithm.eta_l"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.eta_l = to_double(v);
    };
    a["algorithm.eta_g"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.eta_g = to_double(v);
    };
    a["algorithm.preset"] = [](const std::string& v, ExperimentConfig& c) {
      if (!preset_from_name(v))
        throw InvalidArgument("unknown preset '" + v + "'");
      c.algorithm.preset = v;
    };
    a["algorithm.momentum"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.momentum = to_double(v);
    };
    a["algorithm.warmup_rounds"] = [](const std::string& v,
                                      ExperimentConfig& c) {
      c.algorithm.warmup_rounds = to_uint(v);
    };
    a["algorithm.x0"] = [](const std::string& v, ExperimentConfig& c) {
      c.algorithm.x0 = to_doubles(v);
    };
    return t;
  }();
  return table;
}

bool needs(const std::string& kind, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), kind) != set.end();
}

void validate_cross(const ExperimentConfig& c, std::vector<std::string>& errors) {
  const AlgorithmSpec& a = c.algorithm;
  const std::string& k = a.kind;
  if (c.seeds.empty()) errors.push_back("experiment.seeds: at least one seed");
  if (a.rounds < 1) errors.push_back("algorithm.rounds: must be >= 1");

  const ProblemSpec& p = c.problem;
  if (p.kind == "csv_logistic" && p.path.empty())
    errors.push_back("problem.path: required for csv_logistic");
  if (p.kind == "quadratic_anchors") {
    if (p.counts.empty()) errors.push_back("problem.counts: empty");
    if (p.dim < p.counts.size())
      errors.push_back("problem.dim: must be >= number of clients for "
                       "quadratic_anchors");
    for (std::size_t n : p.counts)
      if (n == 0) errors.push_back("problem.counts: counts must be >= 1");
  }
  if (p.lambda2 < 0.0 || p.l1 < 0.0)
    errors.push_back("problem: regularization weights must be nonnegative");

  const bool biased_worker = !is_unbiased(a.compressor);
  if (k == "dcsgd" && biased_worker && !a.error_feedback && !a.allow_biased)
    errors.push_back(
        "algorithm.compressor: '" + to_string(a.compressor) +
        "' is biased and requires error_feedback = true; without error "
        "feedback distributed compressed SGD diverges exponentially on the "
        "three-client counterexample (problem kind 'counterexample')");
  if (a.error_feedback && k != "dcsgd")
    errors.push_back("algorithm.error_feedback: only supported by dcsgd");
  if (a.error_feedback) {
    const std::size_t d = p.kind == "counterexample" ? 3 : p.dim;
    try {
      if (!declared_class(a.compressor, d).delta)
        errors.push_back("algorithm.compressor: error feedback needs a "
                         "contractive compressor");
    } catch (const std::invalid_argument& e) {
      errors.push_back(std::string("algorithm.compressor: ") + e.what());
    }
  }
  if (!is_unbiased(a.master_compressor) && !a.allow_biased && k == "dcsgd" &&
      !a.error_feedback)
    errors.push_back("algorithm.master_compressor: must be unbiased");
  if (needs(k, {"diana", "vr_diana", "svrg_diana"}) && biased_worker)
    errors.push_back("algorithm.compressor: " + k +
                     " requires an unbiased compressor");

  const bool decreasing = a.error_feedback && a.regime == "decreasing";
  if (needs(k, {"dcsgd", "cgd", "dsgd_ocs"}) && !decreasing && a.step <= 0.0)
    errors.push_back("algorithm.step: must be positive for " + k);
  if (a.schedule == "inverse_time" && a.step_offset <= 0.0)
    errors.push_back("algorithm.step_offset: must be positive");
  if (needs(k, {"diana", "svrg_diana"}) && a.gamma <= 0.0)
    errors.push_back("algorithm.gamma: must be positive for " + k);
  if (a.alpha < 0.0) errors.push_back("algorithm.alpha: must be nonnegative");
  if (needs(k, {"fedavg_ocs", "fedshuffle", "fedshuffle_gen", "fedshuffle_mvr"})) {
    if (a.eta_l <= 0.0) errors.push_back("algorithm.eta_l: must be positive");
    if (a.eta_g <= 0.0) errors.push_back("algorithm.eta_g: must be positive");
  }
  if (a.momentum < 0.0 || a.momentum > 1.0)
    errors.push_back("algorithm.momentum: must lie in [0, 1]");
  if (a.batch < 1) errors.push_back("algorithm.batch: must be >= 1");
  if (a.epochs < 1) errors.push_back("algorithm.epochs: must be >= 1");
  if (a.local_steps < 1) errors.push_back("algorithm.local_steps: must be >= 1");
  if (a.j_max < 1) errors.push_back("algorithm.j_max: must be >= 1");
  if (a.epoch_length < 1)
    errors.push_back("algorithm.epoch_length: must be >= 1");
  if (k == "svrg_diana" && a.epoch_length >= 1 && a.rounds % a.epoch_length)
    errors.push_back("algorithm.rounds: must be a multiple of epoch_length");

  const SamplingSpec& s = c.sampling;
  if (s.kind == "uniform" && s.m < 1)
    errors.push_back("sampling.m: must be >= 1");
  if (s.kind == "independent" && s.p.empty())
    errors.push_back("sampling.p: required for independent sampling");
  for (double q : s.p)
    if (q <= 0.0 || q > 1.0)
      errors.push_back("sampling.p: probabilities must lie in (0, 1]");
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("invalid configuration:\n  " + join(errors, "\n  ")),
      errors_(std::move(errors)) {}

const std::vector<std::string>& algorithm_kinds() {
  static const std::vector<std::string> kinds = {
      "cgd",          "dcsgd",       "diana",          "vr_diana",
      "svrg_diana",   "dsgd_ocs",    "fedavg_ocs",     "fedshuffle",
      "fedshuffle_gen", "fedshuffle_mvr"};
  return kinds;
}

ExperimentConfig parse_config(std::string_view text) {
  std::vector<std::string> errors;
  std::map<std::string, std::pair<std::string, std::size_t>> values;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.empty() || line[0] == '#' || line[0] == ';') {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        errors.push_back(where + "malformed section header '" + line + "'");
      } else {
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        if (section.empty()) errors.push_back(where + "empty section name");
      }
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        errors.push_back(where + "expected 'key = value', got '" + line + "'");
      } else {
        const std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        const auto hash = value.find(" #");
        if (hash != std::string::npos) value = trim(value.substr(0, hash));
        const std::string full = section.empty() ? key : section + "." + key;
        if (key.empty()) {
          errors.push_back(where + "missing key");
        } else if (auto it = values.find(full); it != values.end()) {
          errors.push_back(where + "duplicate key '" + full +
                           "' (first set on line " +
                           std::to_string(it->second.second) + ")");
        } else if (!setters().count(full)) {
          errors.push_back(where + "unknown key '" + full + "'");
        } else {
          values.emplace(full, std::make_pair(value, line_no));
        }
      }
    }
    if (end == text.size()) break;
  }

  ExperimentConfig config;
  for (const auto& [key, entry] : values) {
    try {
      setters().at(key)(entry.first, config);
    } catch (const std::invalid_argument& e) {
      errors.push_back("line " + std::to_string(entry.second) + ": " + key +
                       ": " + e.what());
    }
  }
  if (errors.empty()) validate_cross(config, errors);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open configuration file '" + path + "'"});
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace fedlab
