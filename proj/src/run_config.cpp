#include "amtm/run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace amtm {

namespace {

using nlohmann::json;

QosKind qos_from_string(const std::string& s) {
  if (s == "delay_sensitive") return QosKind::delay_sensitive;
  if (s == "delay_tolerant") return QosKind::delay_tolerant;
  throw std::invalid_argument("unknown qos kind: " + s);
}

QueueRegime regime_from_string(const std::string& s) {
  if (s == "flow_based") return QueueRegime::flow_based;
  if (s == "shallow") return QueueRegime::shallow;
  if (s == "deep") return QueueRegime::deep;
  throw std::invalid_argument("unknown queue regime: " + s);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("run config parse failure: ") + e.what());
  }
  RunConfig rc;
  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc[key].template get<std::decay_t<decltype(field)>>();
  };
  get("kind", rc.kind);
  get("out_dir", rc.out_dir);
  get("topology_file", rc.topology_file);
  get("capacity_mbps", rc.capacity_mbps);
  get("capacity_jitter", rc.capacity_jitter);
  get("k_paths", rc.k_paths);
  get("alpha", rc.alpha);
  get("arrival_rate_per_s", rc.arrival_rate_per_s);
  get("preload_flows", rc.preload_flows);
  get("duration_s", rc.duration_s);
  get("tick_s", rc.tick_s);
  get("scheme", rc.scheme);
  get("regime", rc.regime);
  get("mu", rc.mu);
  get("epsilon", rc.epsilon);
  get("n0", rc.n0);
  get("w_star_s", rc.w_star_s);
  get("adaptive_n", rc.adaptive_n);
  get("nipu_interval_s", rc.nipu_interval_s);
  get("te_period_s", rc.te_period_s);
  get("b_max_mbit", rc.b_max_mbit);
  get("initial_price", rc.initial_price);
  get("seed", rc.seed);
  get("warmup_s", rc.warmup_s);
  get("parallel", rc.parallel);
  get("solver_tol_rel", rc.solver_tol_rel);
  get("solver_max_iters", rc.solver_max_iters);
  get("sample_links", rc.sample_links);
  get("oracle_every", rc.oracle_every);
  get("n_grid", rc.n_grid);
  get("intensity_grid", rc.intensity_grid);

  if (doc.contains("classes")) {
    rc.classes.clear();
    for (const auto& c : doc["classes"]) {
      TrafficClass tc;
      tc.name = c.at("name").get<std::string>();
      tc.peak_mbps = c.at("peak_mbps").get<double>();
      tc.qos = qos_from_string(c.at("qos").get<std::string>());
      tc.duration_min_s = c.at("duration_min_s").get<double>();
      tc.duration_max_s = c.at("duration_max_s").get<double>();
      tc.weight = c.at("weight").get<double>();
      tc.probability = c.at("probability").get<double>();
      rc.classes.push_back(tc);
    }
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

SimConfig to_sim_config(const RunConfig& rc) {
  SimConfig cfg;
  cfg.network = rc.topology_file.empty()
                    ? make_sample_topology(rc.capacity_mbps, rc.capacity_jitter)
                    : load_topology_file(rc.topology_file);
  cfg.k_paths = rc.k_paths;
  cfg.classes = rc.classes;
  cfg.alpha = rc.alpha;
  cfg.arrival_rate_per_s = rc.arrival_rate_per_s;
  cfg.preload_flows = rc.preload_flows;
  cfg.duration_s = rc.duration_s;
  cfg.tick_s = rc.tick_s;
  cfg.scheme = scheme_from_string(rc.scheme);
  cfg.price.regime = regime_from_string(rc.regime);
  cfg.price.mu = rc.mu;
  cfg.price.epsilon = rc.epsilon;
  cfg.price.n_gain = rc.n0;
  cfg.price.w_star_s = rc.w_star_s;
  cfg.price.adaptive_n = rc.adaptive_n;
  cfg.price.nipu_interval_s = rc.nipu_interval_s;
  cfg.te_period_s = rc.te_period_s;
  cfg.b_max_mbit = rc.b_max_mbit;
  cfg.initial_price = rc.initial_price;
  cfg.seed = rc.seed;
  cfg.warmup_s = rc.warmup_s;
  cfg.parallel = rc.parallel;
  cfg.solver.tol_rel = rc.solver_tol_rel;
  cfg.solver.max_iters = rc.solver_max_iters;
  return cfg;
}

}  // namespace amtm
