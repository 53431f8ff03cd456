#include "aggregame/scenario.hpp"

#include "aggregame/error.hpp"
#include "aggregame/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace aggregame {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

ScenarioParams validate(const ScenarioParams& p) {
  const auto finite = [](double x) { return std::isfinite(x); };
  require(finite(p.a), "a must be finite");
  require(finite(p.b) && p.b != 0.0, "b must be nonzero");
  require(finite(p.sigma) && p.sigma >= 0.0, "sigma must be nonnegative");
  require(finite(p.q) && p.q > 0.0, "q must be positive");
  require(finite(p.r) && p.r > 0.0, "r must be positive");
  require(finite(p.h) && p.h >= 0.0, "h must be nonnegative");
  require(finite(p.gamma), "gamma must be finite");
  require(finite(p.T) && p.T > 0.0, "T must be positive");
  require(finite(p.dt_obs) && p.dt_obs > 0.0, "dt_obs must be positive");
  require(p.dt_obs <= p.T, "dt_obs exceeds T");
  require(p.n_agents >= 2, "n_agents must be at least 2");
  return p;
}

int interval_count(const ScenarioParams& params) {
  // Slack so that e.g. 20 / 0.2 = 99.999... still counts 100 intervals.
  const double ratio = params.T / params.dt_obs;
  return std::max(1, static_cast<int>(std::floor(ratio * (1.0 + 1e-9))));
}

TimeGrid::TimeGrid(const ScenarioParams& params, int steps_per_interval)
    : steps_per_interval_(steps_per_interval) {
  require(steps_per_interval >= 2, "steps_per_interval must be at least 2");
  const int n = aggregame::interval_count(params);
  obs_times_.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) obs_times_[static_cast<std::size_t>(j)] = j * params.dt_obs;

  std::vector<double> nodes;
  boundaries_.clear();
  for (int j = 0; j < n; ++j) {
    const double start = obs_times_[static_cast<std::size_t>(j)];
    const double end = (j + 1 < n) ? obs_times_[static_cast<std::size_t>(j + 1)] : params.T;
    const double length = end - start;
    const int steps = (j + 1 < n)
                          ? steps_per_interval
                          : std::max(steps_per_interval,
                                     static_cast<int>(std::lround(steps_per_interval * length / params.dt_obs)));
    boundaries_.push_back(static_cast<Eigen::Index>(nodes.size()));
    for (int i = 0; i < steps; ++i) nodes.push_back(start + length * i / steps);
  }
  boundaries_.push_back(static_cast<Eigen::Index>(nodes.size()));
  nodes.push_back(params.T);

  times_ = Eigen::Map<const Eigen::VectorXd>(nodes.data(), static_cast<Eigen::Index>(nodes.size()));
  node_interval_.resize(nodes.size());
  for (int j = 0; j < n; ++j) {
    for (Eigen::Index k = interval_start(j); k < interval_end(j); ++k) node_interval_[static_cast<std::size_t>(k)] = j;
  }
  node_interval_.back() = n - 1;
}

int TimeGrid::interval_of_node(Eigen::Index k) const {
  if (k < 0 || k >= node_count()) throw ValidationError("node index out of range");
  return node_interval_[static_cast<std::size_t>(k)];
}

bool TimeGrid::is_node(double t, Eigen::Index* index) const {
  const double tol = 1e-12 * std::max(1.0, horizon());
  const auto* begin = times_.data();
  const auto* end = begin + times_.size();
  const auto* it = std::lower_bound(begin, end, t - tol);
  if (it != end && std::abs(*it - t) <= tol) {
    if (index) *index = static_cast<Eigen::Index>(it - begin);
    return true;
  }
  return false;
}

FeasibilityReport feasibility_check(const ScenarioParams& params) {
  const double k = params.control_authority();
  FeasibilityReport report;
  report.e_value = k * params.q * (params.gamma - 1.0) - params.a * params.a;
  report.w_terminal = k * params.h * (1.0 - params.gamma) - params.a;
  report.e_nonpositive = report.e_value <= 0.0;

  // Backward time from T until w reaches -infinity, if ever.
  const double E = report.e_value;
  const double w = report.w_terminal;
  double duration = std::numeric_limits<double>::infinity();
  if (E > 0.0) {
    const double root = std::sqrt(E);
    duration = (std::numbers::pi / 2.0 + std::atan(w / root)) / root;
  } else if (E == 0.0) {
    if (w < 0.0) duration = -1.0 / w;
  } else {
    const double s = std::sqrt(-E);
    if (w < -s) duration = std::log((w - s) / (w + s)) / (2.0 * s);
  }

  if (std::isfinite(duration)) {
    report.kind = FeasibilityCase::escape;
    report.t_esc = params.T - duration;
    report.feasible_on_horizon = *report.t_esc <= 0.0;
  } else {
    report.kind = FeasibilityCase::bounded;
    report.feasible_on_horizon = true;
  }
  return report;
}

std::string FeasibilityReport::describe() const {
  std::ostringstream out;
  out << "E = " << io::format_number(e_value) << ", case = "
      << (kind == FeasibilityCase::bounded ? "bounded" : "escape");
  if (t_esc) out << ", t_esc = " << io::format_number(*t_esc);
  out << (feasible_on_horizon ? ", feasible" : ", infeasible");
  return out.str();
}

std::string_view to_string(ObservationMode mode) {
  switch (mode) {
    case ObservationMode::delayed: return "delayed";
    case ObservationMode::zero_latency: return "zero_latency";
    case ObservationMode::continuous: return "continuous";
  }
  return "?";
}

std::string_view to_string(PriorMode mode) {
  return mode == PriorMode::zero ? "zero" : "known_mean";
}

ObservationMode parse_observation_mode(std::string_view text) {
  if (text == "delayed") return ObservationMode::delayed;
  if (text == "zero_latency") return ObservationMode::zero_latency;
  if (text == "continuous") return ObservationMode::continuous;
  throw ValidationError("unknown mode: " + std::string(text));
}

PriorMode parse_prior_mode(std::string_view text) {
  if (text == "zero") return PriorMode::zero;
  if (text == "known_mean") return PriorMode::known_mean;
  throw ValidationError("unknown prior_mode: " + std::string(text));
}

std::vector<ObservationMode> parse_mode_list(std::string_view text) {
  if (text == "all") {
    return {ObservationMode::delayed, ObservationMode::zero_latency, ObservationMode::continuous};
  }
  return {parse_observation_mode(text)};
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string where(int line, std::string_view key) {
  return "line " + std::to_string(line) + ", key " + std::string(key) + ": ";
}

double parse_double(std::string_view value, int line, std::string_view key) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto result = std::from_chars(value.data(), end, out);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ValidationError(where(line, key) + "not a number: '" + std::string(value) + "'");
  }
  return out;
}

template <typename Int>
Int parse_integer(std::string_view value, int line, std::string_view key) {
  Int out{};
  const auto* end = value.data() + value.size();
  const auto result = std::from_chars(value.data(), end, out);
  if (result.ec != std::errc() || result.ptr != end) {
    throw ValidationError(where(line, key) + "not an integer: '" + std::string(value) + "'");
  }
  return out;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  static const std::vector<std::string_view> required = {"a", "b", "sigma", "q", "r", "h",
                                                          "gamma", "T", "dt_obs", "n_agents"};
  static const std::vector<std::string_view> optional = {"steps_per_interval", "n_replications", "seed",
                                                          "mode", "prior_mode"};
  Scenario scenario;
  std::map<std::string, int, std::less<>> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto next = text.find('\n', pos);
    std::string_view line = text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    pos = (next == std::string_view::npos) ? text.size() + 1 : next + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const bool known = std::find(required.begin(), required.end(), key) != required.end() ||
                       std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) throw ValidationError(where(line_no, key) + "unknown key");
    if (seen.count(key)) throw ValidationError(where(line_no, key) + "duplicate key");
    seen.emplace(std::string(key), line_no);

    auto& p = scenario.params;
    if (key == "a") p.a = parse_double(value, line_no, key);
    else if (key == "b") p.b = parse_double(value, line_no, key);
    else if (key == "sigma") p.sigma = parse_double(value, line_no, key);
    else if (key == "q") p.q = parse_double(value, line_no, key);
    else if (key == "r") p.r = parse_double(value, line_no, key);
    else if (key == "h") p.h = parse_double(value, line_no, key);
    else if (key == "gamma") p.gamma = parse_double(value, line_no, key);
    else if (key == "T") p.T = parse_double(value, line_no, key);
    else if (key == "dt_obs") p.dt_obs = parse_double(value, line_no, key);
    else if (key == "n_agents") p.n_agents = parse_integer<int>(value, line_no, key);
    else if (key == "steps_per_interval") scenario.steps_per_interval = parse_integer<int>(value, line_no, key);
    else if (key == "n_replications") scenario.n_replications = parse_integer<int>(value, line_no, key);
    else if (key == "seed") scenario.seed = parse_integer<std::uint64_t>(value, line_no, key);
    else if (key == "mode") {
      try {
        scenario.modes = parse_mode_list(value);
      } catch (const ValidationError& e) {
        throw ValidationError(where(line_no, key) + e.what());
      }
    } else if (key == "prior_mode") {
      try {
        scenario.prior_mode = parse_prior_mode(value);
      } catch (const ValidationError& e) {
        throw ValidationError(where(line_no, key) + e.what());
      }
    }
  }
  for (const auto key : required) {
    if (!seen.count(key)) throw ValidationError("missing key: " + std::string(key));
  }
  require(scenario.steps_per_interval >= 2, "steps_per_interval must be at least 2");
  require(scenario.n_replications >= 1, "n_replications must be at least 1");
  scenario.params = validate(scenario.params);
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(io::read_file(path));
}

std::string format_scenario(const Scenario& s) {
  using io::format_number;
  std::ostringstream out;
  const auto& p = s.params;
  out << "a=" << format_number(p.a) << "\n"
      << "b=" << format_number(p.b) << "\n"
      << "sigma=" << format_number(p.sigma) << "\n"
      << "q=" << format_number(p.q) << "\n"
      << "r=" << format_number(p.r) << "\n"
      << "h=" << format_number(p.h) << "\n"
      << "gamma=" << format_number(p.gamma) << "\n"
      << "T=" << format_number(p.T) << "\n"
      << "dt_obs=" << format_number(p.dt_obs) << "\n"
      << "n_agents=" << p.n_agents << "\n"
      << "steps_per_interval=" << s.steps_per_interval << "\n"
      << "n_replications=" << s.n_replications << "\n"
      << "seed=" << s.seed << "\n"
      << "mode=" << (s.modes.size() == 3 ? std::string_view("all") : to_string(s.modes.front())) << "\n"
      << "prior_mode=" << to_string(s.prior_mode) << "\n";
  return out.str();
}

namespace io {

std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace io

}  // namespace aggregame
