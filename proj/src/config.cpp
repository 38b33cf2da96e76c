#include "atomarray/runner.hpp"

#include "atomarray/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

namespace atomarray {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMHz = kTwoPi * 1e6;  // 2 pi x 1 MHz in rad/s
constexpr double kResonanceGamma = 0.172;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(fmt::format("{}: '{}' is not a finite number", what, s));
  return v;
}

long long parse_integer(std::string_view text, std::string_view what) {
  const std::string s = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(fmt::format("{}: '{}' is not an integer", what, s));
  return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
  std::string s = trim(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", what, s));
}

template <class E>
E parse_enum(std::string_view text, std::string_view what,
             std::initializer_list<std::pair<std::string_view, E>> table) {
  const std::string s = trim(text);
  std::string known;
  for (const auto& [name, value] : table) {
    if (s == name) return value;
    known += known.empty() ? std::string(name) : fmt::format(", {}", name);
  }
  throw ConfigError(fmt::format("{}: '{}' is not one of {}", what, s, known));
}

std::vector<double> resonance_grid(double center_gamma) {
  std::vector<double> grid;
  for (int k = -20; k <= 20; ++k) grid.push_back(center_gamma + 0.05 * k);
  return grid;
}

CVec3 dipole_from_name(std::string_view name) {
  using cd = std::complex<double>;
  const double h = 1.0 / std::sqrt(2.0);
  const std::string s = trim(name);
  if (s == "sigma+") return circular_dipole();
  if (s == "sigma-") return CVec3(cd(h, 0.0), cd(0.0, -h), cd(0.0, 0.0));
  if (s == "x") return CVec3(cd(1.0, 0.0), cd(0.0, 0.0), cd(0.0, 0.0));
  if (s == "y") return CVec3(cd(0.0, 0.0), cd(1.0, 0.0), cd(0.0, 0.0));
  if (s == "z") return CVec3(cd(0.0, 0.0), cd(0.0, 0.0), cd(1.0, 0.0));
  throw ConfigError(fmt::format("species.dipole: '{}' is not one of sigma+, sigma-, x, y, z", s));
}

}  // namespace

std::size_t RunConfig::atoms() const {
  return (n_x > 0 && n_y > 0) ? static_cast<std::size_t>(n_x) * static_cast<std::size_t>(n_y) : 0;
}

SchemeConfig RunConfig::scheme_config(double detuning) const {
  SchemeConfig sc;
  sc.probe = gaussian_pulse(duration, mean_photons, detuning);
  sc.probe.center = 0.5 * window_tau * duration;
  sc.probe.shape = shape;
  sc.beam = {waist, species.wavenumber()};
  if (scheme == SchemeKind::two_level) {
    sc.level = TwoLevel{include_doubles};
  } else {
    FourLevel f;
    f.drive.rabi = drive_rabi;
    f.drive.detuning = drive_detuning;
    f.drive.wavevector = drive_wavevector;
    f.cavity.strength = cavity_strength;
    f.cavity.detuning = cavity_detuning;
    f.cavity.photon_number = photon_number;
    f.gamma_s = gamma_s;
    f.gamma_r = gamma_r;
    sc.level = f;
  }
  return sc;
}

void RunConfig::validate() const {
  try {
    species.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (n_x < 0 || n_y < 0) throw ConfigError("array: n_x and n_y must be non-negative");
  if (!(spacing > 0.0)) throw ConfigError("array: spacing must be positive");
  if (sigma_xy < 0.0 || sigma_z < 0.0) throw ConfigError("array: disorder widths must be non-negative");
  if (!(duration > 0.0)) throw ConfigError("probe: tau must be positive");
  if (!(mean_photons > 0.0)) throw ConfigError("probe: mean_photons must be positive");
  if (!(waist > 0.0)) throw ConfigError("probe: waist must be positive");
  if (!(window_tau > 0.0)) throw ConfigError("probe: window_tau must be positive");
  if (detunings_gamma.empty()) throw ConfigError("probe: detuning list is empty");
  if (gamma_s < 0.0 || gamma_r < 0.0) throw ConfigError("scheme: Rydberg decay rates must be non-negative");
  if (photon_number < 0) throw ConfigError("scheme: photon_number must be non-negative");
  if (include_doubles && scheme != SchemeKind::two_level)
    throw ConfigError("scheme: the doubles sector is available for the two-level scheme only");
  if (trajectories < 2) throw ConfigError("mc: at least two trajectories are needed");
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("mc: tolerances must be positive");
  if (!(output_spacing_gamma > 0.0)) throw ConfigError("mc: output_spacing_gamma must be positive");
  if (include_doubles && propagator == PropagatorChoice::modal)
    throw ConfigError("mc: the modal propagator does not support the doubles sector");
  if (sweep == SweepKind::disorder) {
    if (sigmas.empty()) throw ConfigError("sweep: disorder sweep needs a sigma list");
    if (std::any_of(sigmas.begin(), sigmas.end(), [](double s) { return s < 0.0; }))
      throw ConfigError("sweep: sigma values must be non-negative");
    if (sigma_base < 0.0) throw ConfigError("sweep: sigma_base must be non-negative");
    if (detunings_gamma.size() != 1)
      throw ConfigError("sweep: a disorder sweep runs at exactly one detuning");
  }
}

std::vector<std::string> preset_names() {
  return {"fig1", "fig3-empty", "fig3-photon", "fig4-empty", "fig4-photon"};
}

RunConfig preset(std::string_view name) {
  RunConfig c;
  c.preset = std::string(name);
  const double gamma_e = c.species.gamma_e;
  c.detunings_gamma = resonance_grid(kResonanceGamma);
  if (name == "fig1") return c;

  const bool photon = name == "fig3-photon" || name == "fig4-photon";
  c.photon_number = photon ? 1 : 0;
  c.gamma_s = c.gamma_r = 1e-3 * gamma_e;
  c.drive_wavevector = Vec3(0.0, 0.0, kTwoPi / 480e-9);
  if (name == "fig3-empty" || name == "fig3-photon") {
    c.scheme = SchemeKind::scheme_a;
    c.drive_rabi = 2.0 * kMHz;
    c.drive_detuning = -kResonanceGamma * gamma_e;
    c.cavity_strength = 2.0 * kMHz;
    c.cavity_detuning = 0.0;
    return c;
  }
  if (name == "fig4-empty" || name == "fig4-photon") {
    c.scheme = SchemeKind::scheme_b;
    c.drive_rabi = 4.0 * kMHz;
    c.drive_detuning = -20.0 * kMHz;
    c.cavity_strength = 4.0 * kMHz;
    c.cavity_detuning = -c.drive_detuning - kResonanceGamma * gamma_e;
    const double stark = c.drive_rabi * c.drive_rabi / c.drive_detuning;
    c.detunings_gamma = resonance_grid(kResonanceGamma + stark / gamma_e);
    return c;
  }
  std::string known;
  for (const auto& n : preset_names()) known += known.empty() ? n : ", " + n;
  throw ConfigError(fmt::format("unknown preset '{}'; known presets: {}", name, known));
}

std::vector<double> parse_list(std::string_view text) {
  const std::string s = trim(text);
  if (s.empty()) throw ConfigError("empty list");
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ConfigError(fmt::format("range '{}' must be start:stop:count", s));
    const double a = parse_double(parts[0], "range start");
    const double b = parse_double(parts[1], "range stop");
    const long long n = parse_integer(parts[2], "range count");
    if (n < 1) throw ConfigError(fmt::format("range '{}' needs a positive count", s));
    std::vector<double> out(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k)
      out[static_cast<std::size_t>(k)] =
          n == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
    return out;
  }
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(parse_double(p, "list entry"));
  return out;
}

RunConfig parse_config(std::istream& in, const RunConfig& base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config: {}", e.what()));
  }

  RunConfig c = base;
  using Setter = std::function<void(const std::string&)>;
  std::map<std::string, std::map<std::string, Setter>> keys;
  std::map<std::string, int> unit_choice;  // detects mhz/gamma duplicates
  const double* gamma_e = &c.species.gamma_e;

  auto mhz_rate = [&](double& field, const std::string& id) {
    return [&, id](const std::string& v) {
      if (++unit_choice[id] > 1) throw ConfigError(fmt::format("{} is given in two units", id));
      field = parse_double(v, id) * kMHz;
    };
  };
  // Gamma-relative values are resolved after the whole file is read, so the
  // order of [species] and [scheme] does not matter.
  std::vector<std::function<void()>> deferred;
  auto gamma_rate = [&](double& field, const std::string& id) {
    return [&, id](const std::string& v) {
      if (++unit_choice[id] > 1) throw ConfigError(fmt::format("{} is given in two units", id));
      const double x = parse_double(v, id);
      deferred.push_back([&field, x, gamma_e] { field = x * *gamma_e; });
    };
  };

  keys["array"] = {
      {"n_x", [&](const std::string& v) { c.n_x = static_cast<int>(parse_integer(v, "array.n_x")); }},
      {"n_y", [&](const std::string& v) { c.n_y = static_cast<int>(parse_integer(v, "array.n_y")); }},
      {"spacing_m", [&](const std::string& v) { c.spacing = parse_double(v, "array.spacing_m"); }},
      {"sigma_xy_m", [&](const std::string& v) { c.sigma_xy = parse_double(v, "array.sigma_xy_m"); }},
      {"sigma_z_m", [&](const std::string& v) { c.sigma_z = parse_double(v, "array.sigma_z_m"); }},
      {"frozen_disorder",
       [&](const std::string& v) { c.frozen_disorder = parse_bool(v, "array.frozen_disorder"); }},
  };
  keys["species"] = {
      {"lambda_m", [&](const std::string& v) { c.species.lambda_e = parse_double(v, "species.lambda_m"); }},
      {"gamma_mhz",
       [&](const std::string& v) { c.species.gamma_e = parse_double(v, "species.gamma_mhz") * kMHz; }},
      {"dipole", [&](const std::string& v) { c.species.dipole = dipole_from_name(v); }},
  };
  keys["probe"] = {
      {"tau_s", [&](const std::string& v) { c.duration = parse_double(v, "probe.tau_s"); }},
      {"mean_photons", [&](const std::string& v) { c.mean_photons = parse_double(v, "probe.mean_photons"); }},
      {"waist_m", [&](const std::string& v) { c.waist = parse_double(v, "probe.waist_m"); }},
      {"window_tau", [&](const std::string& v) { c.window_tau = parse_double(v, "probe.window_tau"); }},
      {"detuning_gamma", [&](const std::string& v) { c.detunings_gamma = parse_list(v); }},
      {"shape",
       [&](const std::string& v) {
         c.shape = parse_enum<PulseShape>(v, "probe.shape",
                                          {{"gaussian", PulseShape::gaussian},
                                           {"continuous", PulseShape::continuous}});
       }},
  };
  keys["scheme"] = {
      {"type",
       [&](const std::string& v) {
         c.scheme = parse_enum<SchemeKind>(v, "scheme.type",
                                           {{"two-level", SchemeKind::two_level},
                                            {"scheme-a", SchemeKind::scheme_a},
                                            {"scheme-b", SchemeKind::scheme_b}});
       }},
      {"doubles", [&](const std::string& v) { c.include_doubles = parse_bool(v, "scheme.doubles"); }},
      {"drive_rabi_mhz", mhz_rate(c.drive_rabi, "scheme.drive_rabi")},
      {"drive_detuning_mhz", mhz_rate(c.drive_detuning, "scheme.drive_detuning")},
      {"drive_detuning_gamma", gamma_rate(c.drive_detuning, "scheme.drive_detuning")},
      {"drive_k",
       [&](const std::string& v) {
         const auto k = parse_list(v);
         if (k.size() != 3) throw ConfigError("scheme.drive_k needs three components (rad/m)");
         c.drive_wavevector = Vec3(k[0], k[1], k[2]);
       }},
      {"cavity_eta_mhz", mhz_rate(c.cavity_strength, "scheme.cavity_eta")},
      {"cavity_detuning_mhz", mhz_rate(c.cavity_detuning, "scheme.cavity_detuning")},
      {"cavity_detuning_gamma", gamma_rate(c.cavity_detuning, "scheme.cavity_detuning")},
      {"photon_number",
       [&](const std::string& v) {
         c.photon_number = static_cast<int>(parse_integer(v, "scheme.photon_number"));
       }},
      {"gamma_s_gamma", gamma_rate(c.gamma_s, "scheme.gamma_s")},
      {"gamma_r_gamma", gamma_rate(c.gamma_r, "scheme.gamma_r")},
  };
  keys["mc"] = {
      {"trajectories",
       [&](const std::string& v) {
         const long long m = parse_integer(v, "mc.trajectories");
         if (m < 0) throw ConfigError("mc.trajectories must be non-negative");
         c.trajectories = static_cast<std::size_t>(m);
       }},
      {"seed",
       [&](const std::string& v) {
         const std::string s = trim(v);
         std::uint64_t x = 0;
         const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
         if (ec != std::errc() || ptr != s.data() + s.size())
           throw ConfigError(fmt::format("mc.seed: '{}' is not an unsigned integer", s));
         c.seed = x;
       }},
      {"jump_mode",
       [&](const std::string& v) {
         c.jump_mode = parse_enum<JumpMode>(
             v, "mc.jump_mode", {{"stochastic", JumpMode::stochastic}, {"no-jump", JumpMode::no_jump}});
       }},
      {"threads",
       [&](const std::string& v) {
         const long long t = parse_integer(v, "mc.threads");
         if (t < 0) throw ConfigError("mc.threads must be non-negative");
         c.threads = static_cast<unsigned>(t);
       }},
      {"rtol", [&](const std::string& v) { c.rtol = parse_double(v, "mc.rtol"); }},
      {"atol", [&](const std::string& v) { c.atol = parse_double(v, "mc.atol"); }},
      {"output_spacing_gamma",
       [&](const std::string& v) { c.output_spacing_gamma = parse_double(v, "mc.output_spacing_gamma"); }},
      {"propagator",
       [&](const std::string& v) {
         c.propagator = parse_enum<PropagatorChoice>(v, "mc.propagator",
                                                     {{"auto", PropagatorChoice::automatic},
                                                      {"direct", PropagatorChoice::direct},
                                                      {"modal", PropagatorChoice::modal}});
       }},
      {"diagnostics", [&](const std::string& v) { c.diagnostics = parse_bool(v, "mc.diagnostics"); }},
  };
  keys["sweep"] = {
      {"kind",
       [&](const std::string& v) {
         c.sweep = parse_enum<SweepKind>(
             v, "sweep.kind", {{"detuning", SweepKind::detuning}, {"disorder", SweepKind::disorder}});
       }},
      {"axis",
       [&](const std::string& v) {
         c.axis = parse_enum<DisorderAxis>(
             v, "sweep.axis",
             {{"xy", DisorderAxis::xy}, {"z", DisorderAxis::z}, {"xyz", DisorderAxis::xyz}});
       }},
      {"sigma_m", [&](const std::string& v) { c.sigmas = parse_list(v); }},
      {"sigma_base_m", [&](const std::string& v) { c.sigma_base = parse_double(v, "sweep.sigma_base_m"); }},
  };
  keys["output"] = {
      {"dir", [&](const std::string& v) { c.out_dir = trim(v); }},
      {"format",
       [&](const std::string& v) {
         c.format = parse_enum<OutputFormat>(
             v, "output.format",
             {{"csv", OutputFormat::csv}, {"json", OutputFormat::json}, {"both", OutputFormat::both}});
       }},
      {"positions", [&](const std::string& v) { c.dump_positions = parse_bool(v, "output.positions"); }},
      {"channels", [&](const std::string& v) { c.dump_channels = parse_bool(v, "output.channels"); }},
      {"trajectory", [&](const std::string& v) { c.dump_trajectory = parse_bool(v, "output.trajectory"); }},
  };

  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw ConfigError(fmt::format("config: key '{}' outside a section", section));
    const auto sec = keys.find(section);
    if (sec == keys.end()) throw ConfigError(fmt::format("config: unknown section [{}]", section));
    for (const auto& [key, value] : body) {
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end())
        throw ConfigError(fmt::format("config: unknown key '{}' in [{}]", key, section));
      setter->second(value.data());
    }
  }
  for (auto& f : deferred) f();
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("config: cannot open '{}'", path.string()));
  return parse_config(in, base);
}

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::scheme_a: return "scheme-a";
    case SchemeKind::scheme_b: return "scheme-b";
    case SchemeKind::two_level:
    default: return "two-level";
  }
}

std::string to_string(DisorderAxis axis) {
  switch (axis) {
    case DisorderAxis::xy: return "xy";
    case DisorderAxis::z: return "z";
    case DisorderAxis::xyz:
    default: return "xyz";
  }
}

nlohmann::json config_to_json(const RunConfig& c) {
  using nlohmann::json;
  json dipole = json::array();
  for (int k = 0; k < 3; ++k) dipole.push_back({c.species.dipole[k].real(), c.species.dipole[k].imag()});
  const char* format = c.format == OutputFormat::csv ? "csv" : c.format == OutputFormat::json ? "json" : "both";
  const char* prop = c.propagator == PropagatorChoice::direct  ? "direct"
                     : c.propagator == PropagatorChoice::modal ? "modal"
                                                               : "auto";
  return {
      {"preset", c.preset},
      {"array",
       {{"n_x", c.n_x},
        {"n_y", c.n_y},
        {"spacing_m", c.spacing},
        {"sigma_xy_m", c.sigma_xy},
        {"sigma_z_m", c.sigma_z},
        {"frozen_disorder", c.frozen_disorder}}},
      {"species", {{"lambda_m", c.species.lambda_e}, {"gamma_rad_s", c.species.gamma_e}, {"dipole", dipole}}},
      {"probe",
       {{"tau_s", c.duration},
        {"mean_photons", c.mean_photons},
        {"waist_m", c.waist},
        {"shape", c.shape == PulseShape::gaussian ? "gaussian" : "continuous"},
        {"window_tau", c.window_tau},
        {"detuning_gamma", c.detunings_gamma}}},
      {"scheme",
       {{"type", to_string(c.scheme)},
        {"doubles", c.include_doubles},
        {"drive_rabi_rad_s", c.drive_rabi},
        {"drive_detuning_rad_s", c.drive_detuning},
        {"drive_k_rad_m", {c.drive_wavevector.x(), c.drive_wavevector.y(), c.drive_wavevector.z()}},
        {"cavity_eta_rad_s", c.cavity_strength},
        {"cavity_detuning_rad_s", c.cavity_detuning},
        {"photon_number", c.photon_number},
        {"gamma_s_rad_s", c.gamma_s},
        {"gamma_r_rad_s", c.gamma_r}}},
      {"mc",
       {{"trajectories", c.trajectories},
        {"seed", c.seed},
        {"jump_mode", c.jump_mode == JumpMode::stochastic ? "stochastic" : "no-jump"},
        {"threads", c.threads},
        {"rtol", c.rtol},
        {"atol", c.atol},
        {"output_spacing_gamma", c.output_spacing_gamma},
        {"propagator", prop},
        {"diagnostics", c.diagnostics}}},
      {"sweep",
       {{"kind", c.sweep == SweepKind::detuning ? "detuning" : "disorder"},
        {"axis", to_string(c.axis)},
        {"sigma_m", c.sigmas},
        {"sigma_base_m", c.sigma_base}}},
      {"output",
       {{"dir", c.out_dir},
        {"format", format},
        {"positions", c.dump_positions},
        {"channels", c.dump_channels},
        {"trajectory", c.dump_trajectory}}},
  };
}

std::string config_hash(const RunConfig& config) {
  nlohmann::json j = config_to_json(config);
  // Neither affects the numbers.
  j.erase("output");
  j["mc"].erase("threads");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::vector<std::string> bandwidth_warnings(const RunConfig& c) {
  std::vector<std::string> out;
  const double gamma_e = c.species.gamma_e;
  const double bandwidth = kTwoPi / c.duration;
  const double ratio = c.species.lambda_e / c.spacing;
  const double collective = 3.0 / (4.0 * std::numbers::pi) * ratio * ratio * gamma_e;
  const double cavity = c.photon_number > 0
                            ? c.cavity_strength * std::sqrt(static_cast<double>(c.photon_number))
                            : c.cavity_strength;
  auto check = [&](double limit, std::string_view what) {
    if (bandwidth > limit)
      out.push_back(fmt::format("pulse bandwidth 2pi/tau = {:.3g} Gamma_e exceeds {} = {:.3g} Gamma_e",
                                bandwidth / gamma_e, what, limit / gamma_e));
  };
  switch (c.scheme) {
    case SchemeKind::two_level:
      check(collective, "the collective width");
      break;
    case SchemeKind::scheme_a:
      check(c.drive_rabi * c.drive_rabi / gamma_e, "|Omega_d|^2/Gamma_e");
      check(cavity * cavity / gamma_e, "|Omega_c|^2/Gamma_e");
      break;
    case SchemeKind::scheme_b: {
      check(collective, "the collective width");
      if (c.drive_detuning != 0.0) {
        const double two_photon = cavity * c.drive_rabi / c.drive_detuning;
        check(two_photon * two_photon / gamma_e, "|Omega^(2)|^2/Gamma_e");
      }
      break;
    }
  }
  return out;
}

}  // namespace atomarray
