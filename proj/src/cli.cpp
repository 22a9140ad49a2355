#include "wms/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "wms/detect.hpp"
#include "wms/errors.hpp"
#include "wms/scenarios.hpp"
#include "wms/simulate.hpp"

namespace fs = std::filesystem;

namespace wms {
namespace {

// Seed reserved for threshold calibration so experiment seeds never reuse
// its stream.
constexpr std::uint64_t kCalibrationSeed = 1000003;

// ---------------------------------------------------------------------- //
// Small text utilities for the sectioned key = value config format.

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  if (used != text.size()) {
    throw std::invalid_argument("trailing characters after number: '" + text + "'");
  }
  return value;
}

// Matrix literal: rows split by ';', entries by whitespace, e.g. "1 1; 0 1".
Matrix parse_matrix(const std::string& literal) {
  std::vector<std::vector<double>> rows;
  std::string row_text;
  std::istringstream row_stream(literal);
  while (std::getline(row_stream, row_text, ';')) {
    std::vector<double> row;
    std::istringstream entries(trim(row_text));
    std::string entry;
    while (entries >> entry) {
      row.push_back(parse_double(entry));
    }
    if (row.empty()) {
      throw std::invalid_argument("empty matrix row in '" + literal + "'");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("ragged matrix literal: '" + literal + "'");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::invalid_argument("empty matrix literal");
  }
  Matrix out(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    }
  }
  return out;
}

bool parse_flag(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("not a boolean: '" + text + "'");
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  for (int i = 0; i < m.rows(); ++i) {
    if (i > 0) out += "; ";
    for (int j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ' ';
      out += format_double(m(i, j));
    }
  }
  return out;
}

// A 1x1 literal for a covariance acts as a scalar that scales the identity
// of the required dimension; full matrices must match it exactly.
SpdMatrix covariance_from_literal(const Matrix& literal, int dim,
                                  const std::string& what) {
  if (literal.rows() == 1 && literal.cols() == 1 && dim != 1) {
    return SpdMatrix::scaled_identity(dim, literal(0, 0));
  }
  if (literal.rows() != dim || literal.cols() != dim) {
    throw std::invalid_argument(what + " must be " + std::to_string(dim) + "x" +
                                std::to_string(dim) + " or a scalar");
  }
  return SpdMatrix(literal);
}

std::string error_name(const Error& error) {
  if (dynamic_cast<const DimensionMismatch*>(&error)) return "DimensionMismatch";
  if (dynamic_cast<const NotPositiveSemidefinite*>(&error)) return "NotPositiveSemidefinite";
  if (dynamic_cast<const NotConverged*>(&error)) return "NotConverged";
  if (dynamic_cast<const NoConvergence*>(&error)) return "NoConvergence";
  if (dynamic_cast<const NotStabilizable*>(&error)) return "NotStabilizable";
  if (dynamic_cast<const NotDetectable*>(&error)) return "NotDetectable";
  if (dynamic_cast<const UnstableClosedLoop*>(&error)) return "UnstableClosedLoop";
  if (dynamic_cast<const NoWatermarkPath*>(&error)) return "NoWatermarkPath";
  if (dynamic_cast<const SingularExcitation*>(&error)) return "SingularExcitation";
  if (dynamic_cast<const NumericalBlowup*>(&error)) return "NumericalBlowup";
  if (dynamic_cast<const WindowTooShort*>(&error)) return "WindowTooShort";
  if (dynamic_cast<const OutOfRange*>(&error)) return "OutOfRange";
  if (dynamic_cast<const SingularWindow*>(&error)) return "SingularWindow";
  if (dynamic_cast<const NotSpecialCase*>(&error)) return "NotSpecialCase";
  return "Error";
}

int thread_cap() {
  if (const char* env = std::getenv("WMS_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != nullptr && *end == '\0' && value >= 1) {
      return static_cast<int>(std::min(value, 64L));
    }
    return 1;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw != 0 ? static_cast<int>(std::min(hw, 16u)) : 1;
}

// Runs work(0..jobs-1) on a worker pool capped by WMS_THREADS. Outputs must
// be written to per-job slots or files; the first captured exception is
// rethrown after all workers drain.
template <typename Work>
void run_pooled(std::size_t jobs, Work work) {
  const std::size_t team_size =
      std::min<std::size_t>(jobs, static_cast<std::size_t>(thread_cap()));
  if (team_size <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) {
      work(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> team;
  team.reserve(team_size);
  for (std::size_t t = 0; t < team_size; ++t) {
    team.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < jobs;) {
        try {
          work(i);
        } catch (...) {
          const std::lock_guard<std::mutex> guard(error_mutex);
          if (!first_error) {
            first_error = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread& worker : team) {
    worker.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
}

// ---------------------------------------------------------------------- //
// Scenario resolution: a validated RunConfig becomes one experiment.

struct Experiment {
  PlantModel world;
  ClosedLoopModel detector;
  std::optional<AttackSpec> attack;
  std::optional<AttackerModel> attacker_model;
  int ell = 0;
};

bool is_vehicle_scenario(const RunConfig& config) {
  return !config.inline_plant.has_value() &&
         (config.scenario == "vehicle" || config.scenario == "vehicle-wind");
}

void validate_config(const RunConfig& config) {
  if (!(config.alpha_fa > 0.0 && config.alpha_fa < 1.0)) {
    throw std::invalid_argument("alpha_fa must lie strictly between 0 and 1");
  }
  if (config.horizon < 1) {
    throw std::invalid_argument("horizon must be positive");
  }
  if (config.calibration_runs < 100) {
    throw std::invalid_argument("calibration needs at least 100 windows");
  }
  if (config.seeds.empty()) {
    throw std::invalid_argument("at least one seed is required");
  }
  if (config.ell < 0) {
    throw std::invalid_argument("window length must be nonnegative");
  }
  if (config.q_scale < 0.0 || config.r_scale < 0.0) {
    throw std::invalid_argument("controller weight scales must be nonnegative");
  }
  if (config.watermark_variance < 0.0) {
    throw std::invalid_argument("watermark variance must be nonnegative");
  }
  if (!config.inline_plant.has_value() && config.scenario != "double-integrator" &&
      config.scenario != "vehicle" && config.scenario != "vehicle-wind") {
    throw std::invalid_argument("unknown scenario '" + config.scenario + "'");
  }
  if (config.detector_wind && !is_vehicle_scenario(config)) {
    throw std::invalid_argument("a gust-aware detector requires a vehicle scenario");
  }
  if (config.attack != "none" && config.attack != "replay" &&
      config.attack != "vehicle-preset" && config.attack != "inline") {
    throw std::invalid_argument("unknown attack preset '" + config.attack + "'");
  }
  if (config.attack == "vehicle-preset" && !is_vehicle_scenario(config)) {
    throw std::invalid_argument("the vehicle attack preset requires a vehicle scenario");
  }
  if ((config.attack == "inline") != config.inline_attack.has_value()) {
    throw std::invalid_argument("inline attacks need the [attack] fields and vice versa");
  }
  if (config.inline_attack.has_value()) {
    const AttackSpec& spec = *config.inline_attack;
    if (spec.xi0.cols() != 1 || spec.xi0.rows() != spec.sigma_o.dim()) {
      throw std::invalid_argument("attack state and its covariance disagree on dimension");
    }
  }
}

Experiment build_experiment(const RunConfig& config) {
  validate_config(config);
  const bool vehicle = is_vehicle_scenario(config);

  PlantModel design;
  PlantModel world;
  if (config.inline_plant.has_value()) {
    design = *config.inline_plant;
    world = design;
  } else if (config.scenario == "double-integrator") {
    design = build_double_integrator();
    world = design;
  } else if (config.scenario == "vehicle") {
    design = build_vehicle(config.detector_wind);
    world = design;
  } else {  // vehicle-wind: the world always carries the gust
    design = build_vehicle(config.detector_wind);
    world = build_vehicle(true);
  }

  const double q_scale =
      config.q_scale > 0.0 ? config.q_scale : (vehicle ? kVehicleQScale : 1.0);
  const double r_scale =
      config.r_scale > 0.0 ? config.r_scale : (vehicle ? kVehicleRScale : 1.0);

  SpdMatrix sigma_e;
  if (config.watermark.has_value()) {
    sigma_e = covariance_from_literal(*config.watermark, design.q(), "watermark matrix");
  } else if (config.watermark_variance > 0.0) {
    sigma_e = SpdMatrix::scaled_identity(design.q(), config.watermark_variance);
  } else {
    sigma_e = SpdMatrix::scaled_identity(
        design.q(), vehicle ? kVehicleWatermarkVariance
                            : kDoubleIntegratorWatermarkVariance);
  }

  Experiment experiment;
  experiment.detector = design_closed_loop(design, sigma_e, q_scale, r_scale);
  experiment.world = world;
  experiment.ell =
      config.ell > 0
          ? config.ell
          : (vehicle ? kVehicleWindowLength : 20 * (design.m() + design.q()));
  if (config.horizon < experiment.ell + experiment.detector.kprime + 1) {
    throw std::invalid_argument(
        "horizon must cover at least one window past the watermark delay");
  }

  // The attacker models the gust-free vehicle under the same weights even
  // when the detector is gust-aware.
  auto plain_vehicle_attacker = [&]() -> AttackerModel {
    if (experiment.detector.plant.p() == 5) {
      return AttackerModel{experiment.detector.closed_a(), experiment.detector.plant.c};
    }
    const ClosedLoopModel plain =
        design_closed_loop(build_vehicle(false), sigma_e, q_scale, r_scale);
    return AttackerModel{plain.closed_a(), plain.plant.c};
  };

  if (config.attack == "replay") {
    const PlantModel attacked_plant = vehicle ? build_vehicle(false) : design;
    experiment.attack = replay_attack_preset(attacked_plant);
    if (vehicle) {
      experiment.attacker_model = plain_vehicle_attacker();
    }
  } else if (config.attack == "vehicle-preset") {
    experiment.attack = vehicle_attack_preset();
    experiment.attacker_model = plain_vehicle_attacker();
  } else if (config.attack == "inline") {
    experiment.attack = *config.inline_attack;
    const int attack_dim = config.inline_attack->xi0.rows();
    if (attack_dim == experiment.detector.plant.p()) {
      // default attacker model: the detector's own closed loop
    } else if (vehicle && attack_dim == 5) {
      experiment.attacker_model = plain_vehicle_attacker();
    } else {
      throw std::invalid_argument(
          "inline attack dimension matches neither the detector nor the plain vehicle");
    }
  }
  return experiment;
}

// The config actually executed: scenario defaults resolved into explicit
// values so the serialized file reproduces the run verbatim.
RunConfig effective_config(const RunConfig& config, const Experiment& experiment) {
  RunConfig effective = config;
  effective.ell = experiment.ell;
  if (effective.q_scale == 0.0) {
    effective.q_scale = is_vehicle_scenario(config) ? kVehicleQScale : 1.0;
  }
  if (effective.r_scale == 0.0) {
    effective.r_scale = is_vehicle_scenario(config) ? kVehicleRScale : 1.0;
  }
  if (!effective.watermark.has_value() && effective.watermark_variance == 0.0) {
    effective.watermark_variance = experiment.detector.sigma_e(0, 0);
  }
  return effective;
}

// ---------------------------------------------------------------------- //
// Threshold cache.

void write_tau_cache(const fs::path& path, int ell, double alpha_fa, int runs,
                     double tau, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open threshold cache: " + path.string());
  }
  out << "ell,alpha_fa,runs,tau,seed\n"
      << ell << ',' << format_double(alpha_fa) << ',' << runs << ','
      << format_double(tau) << ',' << seed << '\n';
}

bool load_tau_cache(const fs::path& path, int ell, double alpha_fa, int runs,
                    double* tau) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return false;
  }
  std::string header, row;
  if (!std::getline(in, header) || header != "ell,alpha_fa,runs,tau,seed" ||
      !std::getline(in, row)) {
    return false;
  }
  std::istringstream fields(row);
  std::string field;
  try {
    std::getline(fields, field, ',');
    if (std::stoi(field) != ell) return false;
    std::getline(fields, field, ',');
    if (std::stod(field) != alpha_fa) return false;
    std::getline(fields, field, ',');
    if (std::stoi(field) != runs) return false;
    if (!std::getline(fields, field, ',')) return false;
    *tau = std::stod(field);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

struct SummaryRow {
  std::uint64_t seed = 0;
  double final_d1 = 0.0;
  double final_d2 = 0.0;
  double reject_rate = 0.0;
};

void append_summary_row(std::ofstream& out, const SummaryRow& row, double tau,
                        int ell, int horizon) {
  out << row.seed << ',' << format_double(row.final_d1) << ','
      << format_double(row.final_d2) << ',' << format_double(row.reject_rate) << ','
      << format_double(tau) << ',' << ell << ',' << horizon << '\n';
}

template <typename Body>
int guarded_command(std::ostream& diag, Body body) {
  try {
    body();
    return 0;
  } catch (const std::invalid_argument& e) {
    diag << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    diag << "error: " << error_name(e) << ": " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace

// ------------------------------------------------------------------------ //
// Config text.

RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  std::optional<Matrix> plant_a, plant_b, plant_c, plant_sw, plant_sz;
  std::optional<double> attack_alpha;
  std::optional<Matrix> attack_xi0, attack_so, attack_ss;
  bool attack_preset_seen = false;

  std::string section;
  std::istringstream lines(text);
  std::string raw;
  while (std::getline(lines, raw)) {
    const auto comment = raw.find('#');
    if (comment != std::string::npos) {
      raw.erase(comment);
    }
    const std::string line = trim(raw);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("malformed section header: '" + line + "'");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto equals = line.find('=');
    if (equals == std::string::npos) {
      throw std::invalid_argument("expected key = value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, equals));
    const std::string value = trim(line.substr(equals + 1));
    if (key.empty() || value.empty()) {
      throw std::invalid_argument("empty key or value in '" + line + "'");
    }

    if (section == "scenario") {
      if (key == "name") config.scenario = value;
      else if (key == "a") plant_a = parse_matrix(value);
      else if (key == "b") plant_b = parse_matrix(value);
      else if (key == "c") plant_c = parse_matrix(value);
      else if (key == "sigma_w") plant_sw = parse_matrix(value);
      else if (key == "sigma_z") plant_sz = parse_matrix(value);
      else throw std::invalid_argument("unknown scenario key '" + key + "'");
    } else if (section == "controller") {
      if (key == "q_scale") config.q_scale = parse_double(value);
      else if (key == "r_scale") config.r_scale = parse_double(value);
      else throw std::invalid_argument("unknown controller key '" + key + "'");
    } else if (section == "watermark") {
      if (key == "variance") config.watermark_variance = parse_double(value);
      else if (key == "matrix") config.watermark = parse_matrix(value);
      else throw std::invalid_argument("unknown watermark key '" + key + "'");
    } else if (section == "attack") {
      if (key == "preset") {
        config.attack = value;
        attack_preset_seen = true;
      } else if (key == "alpha") attack_alpha = parse_double(value);
      else if (key == "xi0") attack_xi0 = parse_matrix(value);
      else if (key == "sigma_o") attack_so = parse_matrix(value);
      else if (key == "sigma_s") attack_ss = parse_matrix(value);
      else throw std::invalid_argument("unknown attack key '" + key + "'");
    } else if (section == "detector") {
      if (key == "wind") config.detector_wind = parse_flag(value);
      else throw std::invalid_argument("unknown detector key '" + key + "'");
    } else if (section == "sim") {
      if (key == "horizon") config.horizon = static_cast<int>(parse_double(value));
      else if (key == "seeds") {
        config.seeds.clear();
        std::istringstream entries(value);
        std::string entry;
        while (entries >> entry) {
          config.seeds.push_back(
              static_cast<std::uint64_t>(std::stoull(entry)));
        }
        if (config.seeds.empty()) {
          throw std::invalid_argument("empty seed list");
        }
      } else if (key == "ell") config.ell = static_cast<int>(parse_double(value));
      else if (key == "alpha_fa") config.alpha_fa = parse_double(value);
      else if (key == "calibration_runs")
        config.calibration_runs = static_cast<int>(parse_double(value));
      else if (key == "out") config.output_dir = value;
      else throw std::invalid_argument("unknown sim key '" + key + "'");
    } else {
      throw std::invalid_argument("unknown config section '" + section + "'");
    }
  }

  const bool any_plant = plant_a || plant_b || plant_c || plant_sw || plant_sz;
  if (any_plant) {
    if (!(plant_a && plant_b && plant_c && plant_sw && plant_sz)) {
      throw std::invalid_argument(
          "an inline system needs all of a, b, c, sigma_w, sigma_z");
    }
    PlantModel plant;
    plant.a = *plant_a;
    plant.b = *plant_b;
    plant.c = *plant_c;
    plant.sigma_w = covariance_from_literal(*plant_sw, plant_a->rows(), "sigma_w");
    plant.sigma_z = covariance_from_literal(*plant_sz, plant_c->rows(), "sigma_z");
    config.inline_plant = std::move(plant);
  }

  const bool any_attack_field = attack_alpha || attack_xi0 || attack_so || attack_ss;
  if (any_attack_field) {
    if (attack_preset_seen) {
      throw std::invalid_argument("give either an attack preset or inline fields");
    }
    if (!(attack_alpha && attack_so && attack_ss)) {
      throw std::invalid_argument("an inline attack needs alpha, sigma_o, sigma_s");
    }
    AttackSpec spec;
    spec.alpha = *attack_alpha;
    spec.sigma_o = covariance_from_literal(*attack_so, attack_so->rows(), "sigma_o");
    spec.sigma_s = covariance_from_literal(*attack_ss, attack_ss->rows(), "sigma_s");
    spec.xi0 = attack_xi0.value_or(Matrix(spec.sigma_o.dim(), 1));
    config.inline_attack = std::move(spec);
    config.attack = "inline";
  }
  return config;
}

std::string serialize_run_config(const RunConfig& config) {
  std::ostringstream out;
  out << "[scenario]\n";
  if (config.inline_plant.has_value()) {
    const PlantModel& plant = *config.inline_plant;
    out << "a = " << format_matrix(plant.a) << '\n';
    out << "b = " << format_matrix(plant.b) << '\n';
    out << "c = " << format_matrix(plant.c) << '\n';
    out << "sigma_w = " << format_matrix(plant.sigma_w.matrix()) << '\n';
    out << "sigma_z = " << format_matrix(plant.sigma_z.matrix()) << '\n';
  } else {
    out << "name = " << config.scenario << '\n';
  }
  out << "\n[controller]\n";
  out << "q_scale = " << format_double(config.q_scale) << '\n';
  out << "r_scale = " << format_double(config.r_scale) << '\n';
  out << "\n[watermark]\n";
  if (config.watermark.has_value()) {
    out << "matrix = " << format_matrix(*config.watermark) << '\n';
  } else {
    out << "variance = " << format_double(config.watermark_variance) << '\n';
  }
  out << "\n[attack]\n";
  if (config.inline_attack.has_value()) {
    const AttackSpec& spec = *config.inline_attack;
    out << "alpha = " << format_double(spec.alpha) << '\n';
    out << "xi0 = " << format_matrix(spec.xi0) << '\n';
    out << "sigma_o = " << format_matrix(spec.sigma_o.matrix()) << '\n';
    out << "sigma_s = " << format_matrix(spec.sigma_s.matrix()) << '\n';
  } else {
    out << "preset = " << config.attack << '\n';
  }
  out << "\n[detector]\n";
  out << "wind = " << (config.detector_wind ? "true" : "false") << '\n';
  out << "\n[sim]\n";
  out << "horizon = " << config.horizon << '\n';
  out << "seeds =";
  for (std::uint64_t seed : config.seeds) {
    out << ' ' << seed;
  }
  out << '\n';
  out << "ell = " << config.ell << '\n';
  out << "alpha_fa = " << format_double(config.alpha_fa) << '\n';
  out << "calibration_runs = " << config.calibration_runs << '\n';
  out << "out = " << config.output_dir << '\n';
  return out.str();
}

// ------------------------------------------------------------------------ //
// Commands.

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& diag) {
  return guarded_command(diag, [&] {
    const Experiment experiment = build_experiment(config);
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);

    double tau = 0.0;
    if (!load_tau_cache(dir / "tau.csv", experiment.ell, config.alpha_fa,
                        config.calibration_runs, &tau)) {
      tau = calibrate_threshold(experiment.detector, experiment.ell, config.alpha_fa,
                                config.calibration_runs, kCalibrationSeed);
    }

    std::vector<SummaryRow> rows(config.seeds.size());
    run_pooled(config.seeds.size(), [&](std::size_t i) {
      SimulationConfig sim;
      sim.world = experiment.world;
      sim.detector = experiment.detector;
      sim.attack = experiment.attack;
      sim.attacker_model = experiment.attacker_model;
      sim.horizon = config.horizon;
      sim.seed = config.seeds[i];

      const SimulationTrace trace = run_simulation(sim);
      const DetectionReport report =
          analyze_trace(trace, experiment.detector, tau, experiment.ell, config.alpha_fa);

      const std::string tag = std::to_string(sim.seed);
      write_trace_csv(trace, (dir / ("trace_" + tag + ".csv")).string());
      write_report_csv(report, (dir / ("report_" + tag + ".csv")).string());
      rows[i] = SummaryRow{sim.seed, report.d1.back(), report.d2.back(),
                           report.reject_rate()};
    });

    std::ofstream summary(dir / "summary.csv", std::ios::binary);
    if (!summary) {
      throw Error("cannot open summary file");
    }
    summary << "seed,final_d1,final_d2,reject_rate,tau,ell,N\n";
    for (const SummaryRow& row : rows) {
      append_summary_row(summary, row, tau, experiment.ell, config.horizon);
    }

    std::ofstream echo(dir / "config.cfg", std::ios::binary);
    echo << serialize_run_config(effective_config(config, experiment));

    out << "ran " << config.seeds.size() << " seed(s) into " << dir.string() << '\n';
  });
}

int cmd_calibrate(const RunConfig& config, std::ostream& out, std::ostream& diag) {
  return guarded_command(diag, [&] {
    if (config.attack != "none") {
      throw std::invalid_argument("calibration runs on the honest system; drop the attack");
    }
    const Experiment experiment = build_experiment(config);
    const double tau =
        calibrate_threshold(experiment.detector, experiment.ell, config.alpha_fa,
                            config.calibration_runs, kCalibrationSeed);
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    write_tau_cache(dir / "tau.csv", experiment.ell, config.alpha_fa,
                    config.calibration_runs, tau, kCalibrationSeed);
    out << "tau = " << format_double(tau) << '\n';
  });
}

int cmd_demo(const std::string& scenario, const RunConfig& config, std::ostream& out,
             std::ostream& diag) {
  return guarded_command(diag, [&] {
    if (scenario != "vehicle") {
      throw std::invalid_argument("only the vehicle scenario has a demo");
    }
    if (!(config.alpha_fa > 0.0 && config.alpha_fa < 1.0)) {
      throw std::invalid_argument("alpha_fa must lie strictly between 0 and 1");
    }
    if (config.calibration_runs < 100) {
      throw std::invalid_argument("calibration needs at least 100 windows");
    }
    const int ell = config.ell > 0 ? config.ell : kVehicleWindowLength;
    if (config.horizon < ell + 1) {
      throw std::invalid_argument(
          "horizon must cover at least one window past the watermark delay");
    }

    constexpr int kGroups = 4;
    constexpr std::uint64_t kDemoSeeds = 10;
    static const char* const kGroupNames[kGroups] = {
        "nowind-honest", "nowind-attacked", "wind-honest", "wind-attacked"};

    // Each detector is calibrated against its own honest loop.
    const std::vector<SimulationConfig> prototype = experiment_matrix(config.horizon, 1);
    const double tau_plain =
        calibrate_threshold(prototype[0].detector, ell, config.alpha_fa,
                            config.calibration_runs, kCalibrationSeed);
    const double tau_wind =
        calibrate_threshold(prototype[2].detector, ell, config.alpha_fa,
                            config.calibration_runs, kCalibrationSeed);

    struct DemoRow {
      SummaryRow row;
      double tau = 0.0;
    };
    std::vector<DemoRow> rows(kGroups * kDemoSeeds);
    run_pooled(rows.size(), [&](std::size_t job) {
      const int group = static_cast<int>(job / kDemoSeeds);
      const std::uint64_t seed = 1 + job % kDemoSeeds;
      SimulationConfig sim = prototype[group];
      sim.seed = seed;
      const double tau = group < 2 ? tau_plain : tau_wind;

      const SimulationTrace trace = run_simulation(sim);
      const DetectionReport report =
          analyze_trace(trace, sim.detector, tau, ell, config.alpha_fa);
      rows[job] = DemoRow{SummaryRow{seed, report.d1.back(), report.d2.back(),
                                     report.reject_rate()},
                          tau};
    });

    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    std::ofstream summary(dir / "demo_summary.csv", std::ios::binary);
    if (!summary) {
      throw Error("cannot open demo summary file");
    }
    summary << "group,seed,final_d1,final_d2,reject_rate,tau,ell,N\n";
    for (std::size_t job = 0; job < rows.size(); ++job) {
      summary << kGroupNames[job / kDemoSeeds] << ',';
      append_summary_row(summary, rows[job].row, rows[job].tau, ell, config.horizon);
    }

    RunConfig echo_config = config;
    echo_config.scenario = "vehicle";
    echo_config.ell = ell;
    std::ofstream echo(dir / "config.cfg", std::ios::binary);
    echo << serialize_run_config(echo_config);

    for (int group = 0; group < kGroups; ++group) {
      double mean_reject = 0.0;
      for (std::uint64_t s = 0; s < kDemoSeeds; ++s) {
        mean_reject += rows[group * kDemoSeeds + s].row.reject_rate;
      }
      mean_reject /= kDemoSeeds;
      out << kGroupNames[group] << ": reject rate " << format_double(mean_reject)
          << '\n';
    }
  });
}

}  // namespace wms
