#include "rfa/config.hpp"

#include <fstream>

#include "rfa/codec.hpp"

namespace rfa {

EngineConfig EngineConfig::breast() { return EngineConfig{}; }

EngineConfig EngineConfig::liver() {
  EngineConfig c;
  c.preset = "liver";
  c.table = MaterialTable::liver();
  c.bioheat = BioheatConfig::liver();
  return c;
}

EngineConfig EngineConfig::from_preset(const std::string& name) {
  if (name == "breast") return breast();
  if (name == "liver") return liver();
  throw invalid_argument("unknown preset '" + name + "'");
}

SimulationRequest EngineConfig::request(const LabelVolume& labels, const ElectrodePose& pose) const {
  SimulationRequest req;
  req.labels = labels;
  req.pose = pose;
  req.table = table;
  req.bioheat = bioheat;
  req.arrhenius = arrhenius;
  req.solver_tol = solver_tol;
  return req;
}

void to_json(nlohmann::json& j, const TissueProperties& p) {
  j = {{"sigma", p.sigma}, {"rho", p.rho}, {"c", p.c}, {"k", p.k}, {"omega_b", p.omega_b}, {"Q_m", p.q_m}};
}

void from_json(const nlohmann::json& j, TissueProperties& p) {
  p.sigma = j.value("sigma", p.sigma);
  p.rho = j.value("rho", p.rho);
  p.c = j.value("c", p.c);
  p.k = j.value("k", p.k);
  p.omega_b = j.value("omega_b", p.omega_b);
  p.q_m = j.value("Q_m", p.q_m);
  p.validate();
}

namespace {
constexpr std::pair<Tissue, const char*> kTissueNames[] = {
    {Tissue::kNormal, "normal"}, {Tissue::kTumor, "tumor"}, {Tissue::kElectrode, "electrode"}};
}

void to_json(nlohmann::json& j, const MaterialTable& t) {
  j = nlohmann::json::object();
  nlohmann::json labels = nlohmann::json::object();
  for (auto [tissue, name] : kTissueNames)
    if (t.has(tissue)) labels[name] = *t.find(to_label(tissue));
  j["labels"] = labels;
  j["blood"] = {{"rho_b", t.blood.rho}, {"c_b", t.blood.c}, {"T_b", t.blood.temperature}};
}

void from_json(const nlohmann::json& j, MaterialTable& t) {
  MaterialTable out;
  const auto& labels = j.at("labels");
  for (auto [tissue, name] : kTissueNames)
    if (labels.contains(name)) out.set(tissue, labels.at(name).get<TissueProperties>());
  if (j.contains("blood")) {
    const auto& b = j.at("blood");
    out.blood.rho = b.value("rho_b", out.blood.rho);
    out.blood.c = b.value("c_b", out.blood.c);
    out.blood.temperature = b.value("T_b", out.blood.temperature);
  }
  t = out;
}

void to_json(nlohmann::json& j, const BioheatConfig& c) {
  j = {{"dt", c.dt},
       {"duration", c.duration},
       {"T_init", c.t_init},
       {"T_boundary", c.t_boundary},
       {"record_snapshots", c.record_snapshots},
       {"snapshot_every", c.snapshot_every}};
}

void from_json(const nlohmann::json& j, BioheatConfig& c) {
  c.dt = j.value("dt", c.dt);
  c.duration = j.value("duration", c.duration);
  c.t_init = j.value("T_init", c.t_init);
  c.t_boundary = j.value("T_boundary", c.t_boundary);
  c.record_snapshots = j.value("record_snapshots", c.record_snapshots);
  c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
  c.validate();
}

void to_json(nlohmann::json& j, const ArrheniusParams& p) {
  j = {{"A", p.frequency_factor}, {"E_a", p.activation_energy}, {"R", p.gas_constant}, {"threshold", p.threshold}};
}

void from_json(const nlohmann::json& j, ArrheniusParams& p) {
  p.frequency_factor = j.value("A", p.frequency_factor);
  p.activation_energy = j.value("E_a", p.activation_energy);
  p.gas_constant = j.value("R", p.gas_constant);
  p.threshold = j.value("threshold", p.threshold);
  p.validate();
}

void to_json(nlohmann::json& j, const EngineConfig& c) {
  j = {{"preset", c.preset},     {"materials", c.table},       {"bioheat", c.bioheat},
       {"arrhenius", c.arrhenius}, {"v_applied", c.v_applied}, {"tip_length", c.tip_length},
       {"tip_radius", c.tip_radius}, {"solver_tol", c.solver_tol}};
}

void from_json(const nlohmann::json& j, EngineConfig& c) {
  c = apply_overrides(EngineConfig::from_preset(j.value("preset", std::string("breast"))), j);
}

EngineConfig apply_overrides(const EngineConfig& base, const nlohmann::json& o) {
  if (!o.is_object()) throw invalid_argument("config overrides must be a JSON object");
  EngineConfig c = base;
  try {
    if (o.contains("materials")) c.table = o.at("materials").get<MaterialTable>();
    if (o.contains("bioheat")) {
      BioheatConfig b = c.bioheat;
      from_json(o.at("bioheat"), b);
      c.bioheat = b;
    }
    if (o.contains("arrhenius")) {
      ArrheniusParams a = c.arrhenius;
      from_json(o.at("arrhenius"), a);
      c.arrhenius = a;
    }
    c.v_applied = o.value("v_applied", c.v_applied);
    c.tip_length = o.value("tip_length", c.tip_length);
    c.tip_radius = o.value("tip_radius", c.tip_radius);
    c.solver_tol = o.value("solver_tol", c.solver_tol);
  } catch (const nlohmann::json::exception& e) {
    throw invalid_argument(std::string("invalid config: ") + e.what());
  }
  if (!std::isfinite(c.v_applied)) throw invalid_argument("v_applied must be finite");
  return c;
}

std::uint64_t config_hash(const EngineConfig& c) { return fnv1a64(nlohmann::json(c).dump()); }

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kNotFound, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

}  // namespace rfa
