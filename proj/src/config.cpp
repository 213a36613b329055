#include "mdwkb/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace mdwkb {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::InvalidConfig, key + ": expected on/off, got '" + v + "'");
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k = {
      {"grid", {"mode", "lo", "hi", "n", "periodic"}},
      {"phase", {"initial"}},
      {"amplitude", {"profiles"}},
      {"run", {"T", "epsilons", "coupling", "corrector", "dt", "substeps", "charge_tolerance", "defect_tolerance"}},
      {"backend", {"potentials"}},
      {"output", {"dir"}},
  };
  return k;
}

}  // namespace

double parse_number(const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    const auto slash = t.find('/');
    double v;
    if (slash != std::string::npos) {
      const std::string a = trim(t.substr(0, slash)), b = trim(t.substr(slash + 1));
      std::size_t ub = 0;
      v = std::stod(a, &used) / std::stod(b, &ub);
      if (used != a.size() || ub != b.size()) throw std::invalid_argument(t);
    } else {
      v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
    }
    if (!std::isfinite(v)) throw std::invalid_argument(t);
    return v;
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidConfig, "not a number: '" + t + "'");
  }
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& s : split(text, ',')) out.push_back(parse_number(s));
  return out;
}

NamedForm NamedForm::parse(const std::string& text) {
  const std::string t = trim(text);
  NamedForm f;
  const auto open = t.find('(');
  if (open == std::string::npos) {
    f.name = t;
  } else {
    if (t.back() != ')') throw Error(ErrorKind::InvalidConfig, "unbalanced parentheses in '" + t + "'");
    f.name = trim(t.substr(0, open));
    f.args = split(t.substr(open + 1, t.size() - open - 2), ',');
  }
  if (f.name.empty()) throw Error(ErrorKind::InvalidConfig, "empty form name in '" + t + "'");
  return f;
}

double NamedForm::number(std::size_t i) const {
  if (i >= args.size()) throw Error(ErrorKind::InvalidConfig, name + ": missing argument " + std::to_string(i + 1));
  return parse_number(args[i]);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Io, "sha256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return out.str();
}

std::string RunConfig::hash() const { return sha256_hex(text); }

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree pt;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  for (const auto& [section, body] : pt) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw Error(ErrorKind::InvalidConfig, "unknown section [" + section + "]");
    for (const auto& [key, v] : body) {
      (void)v;
      if (!it->second.count(key)) throw Error(ErrorKind::InvalidConfig, "unknown key " + section + "." + key);
    }
  }
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (auto v = pt.get_optional<std::string>(key)) return trim(*v);
    return std::nullopt;
  };
  auto number = [&](const std::string& key, double fallback) {
    const auto v = get(key);
    if (!v) return fallback;
    try {
      return parse_number(*v);
    } catch (const Error&) {
      throw Error(ErrorKind::InvalidConfig, key + ": not a number: '" + *v + "'");
    }
  };

  RunConfig c;
  c.text = text;
  const std::string mode = get("grid.mode").value_or("reduced_1d");
  const double lo = number("grid.lo", -4), hi = number("grid.hi", 4);
  const double n = number("grid.n", 256);
  if (n != std::floor(n) || n < 8) throw Error(ErrorKind::InvalidConfig, "grid.n must be an integer >= 8");
  const bool periodic = parse_bool("grid.periodic", get("grid.periodic").value_or("on"));
  if (mode == "reduced_1d")
    c.grid = GridSpec::reduced_1d(lo, hi, int(n), periodic);
  else if (mode == "full_3d")
    c.grid = GridSpec::full_3d(lo, hi, int(n), periodic);
  else
    throw Error(ErrorKind::InvalidConfig, "grid.mode: unknown mode '" + mode + "'");
  if (!(lo < hi)) throw Error(ErrorKind::InvalidConfig, "grid: lo must be below hi");

  c.phase_init = NamedForm::parse(get("phase.initial").value_or("zero"));
  make_phase(c.phase_init);  // validates the name and arguments
  if (const auto p = get("amplitude.profiles"))
    for (const auto& item : split(*p, ';')) c.profiles.push_back(NamedForm::parse(item));
  for (const auto& f : c.profiles) {
    if (f.name != "gaussian") throw Error(ErrorKind::InvalidConfig, "amplitude.profiles: unknown profile '" + f.name + "'");
    const auto band = std::find_if(f.args.begin(), f.args.end(), [](const std::string& a) { return a == "plus" || a == "minus"; });
    const auto before = band - f.args.begin();
    if (band == f.args.end() || (before != 2 && before != 4) || f.args.end() - band > 2)
      throw Error(ErrorKind::InvalidConfig, "gaussian(center, width, band[, weight]) expected");
  }

  c.T = number("run.T", 0.5);
  if (!(c.T > 0)) throw Error(ErrorKind::InvalidConfig, "run.T must be positive");
  if (const auto e = get("run.epsilons")) {
    try {
      c.epsilons = parse_number_list(*e);
    } catch (const Error&) {
      throw Error(ErrorKind::InvalidConfig, "run.epsilons: cannot parse '" + *e + "'");
    }
    for (double x : c.epsilons)
      if (!(x > 0)) throw Error(ErrorKind::InvalidConfig, "run.epsilons must be positive");
  }
  c.coupling = parse_bool("run.coupling", get("run.coupling").value_or("on"));
  c.corrector = parse_bool("run.corrector", get("run.corrector").value_or("off"));
  c.dt = number("run.dt", 0.0);
  c.substeps = int(number("run.substeps", 8));
  if (c.substeps < 1) throw Error(ErrorKind::InvalidConfig, "run.substeps must be >= 1");
  c.charge_tolerance = number("run.charge_tolerance", 1e-6);
  c.defect_tolerance = number("run.defect_tolerance", 1e-8);
  const std::string backend = get("backend.potentials").value_or("leapfrog2");
  if (backend == "leapfrog2")
    c.potential_order = 2;
  else if (backend == "leapfrog4")
    c.potential_order = 4;
  else
    throw Error(ErrorKind::InvalidConfig, "backend.potentials: unknown backend '" + backend + "'");
  c.output_dir = get("output.dir").value_or("out");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse_config(s.str());
}

InitialPhase make_phase(const NamedForm& f) {
  auto vec = [&](std::size_t from) {
    Vec3 k = Vec3::Zero();
    const std::size_t n = f.args.size() - from;
    if (n != 0 && n != 1 && n != 3) throw Error(ErrorKind::InvalidConfig, f.name + ": wave vector needs 1 or 3 components");
    for (std::size_t i = 0; i < n; ++i) k(static_cast<Eigen::Index>(i)) = f.number(from + i);
    return k;
  };
  if (f.name == "zero") {
    if (!f.args.empty()) throw Error(ErrorKind::InvalidConfig, "zero takes no arguments");
    return InitialPhase::zero();
  }
  if (f.name == "plane") {
    if (f.args.empty()) throw Error(ErrorKind::InvalidConfig, "plane(k1[, k2, k3]) expected");
    return InitialPhase::plane(vec(0));
  }
  if (f.name == "quadratic") return InitialPhase::quadratic(f.number(0), vec(1));
  throw Error(ErrorKind::InvalidConfig, "unknown phase form '" + f.name + "'");
}

InitialAmplitudes make_amplitudes(const RunConfig& c) {
  const auto n = static_cast<Eigen::Index>(c.grid.size());
  InitialAmplitudes a{SpinorArray::Zero(4, n), SpinorArray::Zero(4, n), false};
  for (const auto& f : c.profiles) {
    const auto band = std::find_if(f.args.begin(), f.args.end(), [](const std::string& s) { return s == "plus" || s == "minus"; });
    const auto before = static_cast<std::size_t>(band - f.args.begin());
    Vec3 center = Vec3::Zero();
    for (std::size_t i = 0; i + 1 < before; ++i) center(static_cast<Eigen::Index>(i)) = f.number(i);
    const double width = f.number(before - 1);
    const double weight = f.args.size() > before + 1 ? f.number(before + 1) : 1.0;
    if (!(width > 0)) throw Error(ErrorKind::InvalidConfig, "gaussian width must be positive");
    const bool plus = *band == "plus";
    a.has_minus = a.has_minus || !plus;
    for (Eigen::Index i = 0; i < n; ++i) {
      Vec3 d = c.grid.node(static_cast<std::size_t>(i)) - center;
      if (c.grid.active_axes() == 1) d.tail<2>().setZero();
      const double g = weight * std::exp(-d.squaredNorm() / (2 * width * width));
      (plus ? a.plus(0, i) : a.minus(2, i)) += g;
    }
  }
  return a;
}

WkbOptions wkb_options(const RunConfig& c) {
  WkbOptions o;
  o.grid = c.grid;
  o.phase = make_phase(c.phase_init);
  const InitialAmplitudes a = make_amplitudes(c);
  o.chi0 = a.plus;
  if (a.has_minus) o.chi0_minus = a.minus;
  o.T = c.T;
  o.dt = c.dt;
  o.coupling = c.coupling;
  o.corrector = c.corrector;
  o.potential_order = c.potential_order;
  o.charge_tolerance = c.charge_tolerance;
  o.defect_tolerance = c.defect_tolerance;
  return o;
}

}  // namespace mdwkb
