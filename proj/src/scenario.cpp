#include "iotsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "iotsim/rng.hpp"

namespace iotsim {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ScenarioError(path + ": " + what); }

/// Reads fields from one JSON object, tracking which keys were consumed.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "(root)" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    convert(j_.at(key), at(key), out);
  }

  template <class T>
  void require(const std::string& key, T& out) {
    if (!j_.contains(key)) fail(at(key), "missing required field");
    get(key, out);
  }

  const Json* child(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.contains(key)) fail(at(key), "unknown field");
  }

 private:
  static void convert(const Json& v, const std::string& path, double& out) {
    if (!v.is_number()) fail(path, "expected a number");
    out = v.get<double>();
  }
  static void convert(const Json& v, const std::string& path, int& out) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    out = v.get<int>();
  }
  static void convert(const Json& v, const std::string& path, std::uint64_t& out) {
    if (!v.is_number_unsigned()) fail(path, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void convert(const Json& v, const std::string& path, std::uint32_t& out) {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > UINT32_MAX) fail(path, "expected a non-negative integer");
    out = v.get<std::uint32_t>();
  }
  static void convert(const Json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    out = v.get<bool>();
  }
  static void convert(const Json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) fail(path, "expected a string");
    out = v.get<std::string>();
  }
  template <class T>
  static void convert(const Json& v, const std::string& path, std::optional<T>& out) {
    if (v.is_null()) {
      out.reset();
      return;
    }
    T tmp{};
    convert(v, path, tmp);
    out = tmp;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class E>
E parse_enum(const std::string& path, const std::string& value,
             std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  fail(path, "unknown value '" + value + "' (expected one of: " + names + ")");
}

constexpr std::initializer_list<std::pair<const char*, Technology>> kTech{{"lora", Technology::Lora},
                                                                          {"wpan", Technology::Wpan}};
constexpr std::initializer_list<std::pair<const char*, airtime::Ldro>> kLdro{
    {"auto", airtime::Ldro::Auto}, {"on", airtime::Ldro::On}, {"off", airtime::Ldro::Off}};
constexpr std::initializer_list<std::pair<const char*, lora::DutyPacing>> kPacing{
    {"fixed_gap", lora::DutyPacing::FixedGap}, {"rolling_ledger", lora::DutyPacing::RollingLedger}};
constexpr std::initializer_list<std::pair<const char*, LinkMode>> kLinkMode{{"path_loss", LinkMode::PathLoss},
                                                                            {"explicit", LinkMode::ExplicitMatrix}};

template <class E>
const char* enum_name(E e, std::initializer_list<std::pair<const char*, E>> options) {
  for (const auto& [name, v] : options)
    if (v == e) return name;
  return "?";
}

template <class E>
void get_enum(Reader& r, const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> options) {
  std::string s;
  r.get(key, s);
  if (r.has(key)) out = parse_enum(r.at(key), s, options);
}

Position read_position(const Json& j, const std::string& path) {
  Reader r(j, path);
  Position p;
  r.require("x", p.x);
  r.require("y", p.y);
  r.get("floor", p.floor);
  r.finish();
  return p;
}

DeviceSpec read_device(const Json& j, const std::string& path, bool gateway) {
  Reader r(j, path);
  DeviceSpec d;
  r.require("name", d.name);
  if (const Json* p = r.child("position"); p && !p->is_null()) d.position = read_position(*p, r.at("position"));
  if (!gateway) {
    r.get("occupancy", d.occupancy);
    r.get("start_time_s", d.start_time_s);
    r.get("sensing", d.sensing);
  }
  r.finish();
  return d;
}

void read_lora(const Json& j, lora::LoraConfig& c) {
  Reader r(j, "lora");
  int sf = c.radio.sf;
  r.get("sf", sf);
  c.radio.sf = sf;
  double bw_khz = c.radio.bandwidth_hz / 1000.0;
  r.get("bandwidth_khz", bw_khz);
  c.radio.bandwidth_hz = static_cast<std::uint32_t>(std::llround(bw_khz * 1000.0));
  r.get("coding_rate", c.radio.coding_rate);
  r.get("preamble_symbols", c.radio.preamble_symbols);
  r.get("explicit_header", c.radio.explicit_header);
  r.get("crc_on", c.radio.crc_on);
  get_enum(r, "ldro", c.radio.ldro, kLdro);
  r.get("channel", c.channel);
  r.get("drp_payload", c.drp_payload);
  r.get("dp_payload", c.dp_payload);
  r.get("beacon_payload", c.beacon_payload);
  r.get("join_req_payload", c.join_req_payload);
  r.get("join_ack_payload", c.join_ack_payload);
  r.get("gw_delay_s", c.gw_delay_s);
  r.get("sensor_latency_s", c.sensor_latency_s);
  r.get("join_window_s", c.join_window_s);
  r.get("refresh_interval_s", c.refresh_interval_s);
  r.get("pir_period_s", c.pir_period_s);
  r.get("timeout_margin_s", c.timeout_margin_s);
  r.get("max_retries", c.max_retries);
  get_enum(r, "pacing", c.pacing, kPacing);
  r.get("tx_power_dbm", c.tx_power_dbm);
  r.finish();
}

void read_wpan(const Json& j, wpan::WpanConfig& c) {
  Reader r(j, "wpan");
  if (const Json* cj = r.child("csma")) {
    Reader cr(*cj, "wpan.csma");
    auto& p = c.csma;
    cr.get("min_be", p.min_be);
    cr.get("max_be", p.max_be);
    cr.get("max_backoffs", p.max_backoffs);
    cr.get("backoff_unit_s", p.backoff_unit_s);
    cr.get("cca_duration_s", p.cca_duration_s);
    cr.get("ack_timeout_s", p.ack_timeout_s);
    cr.get("turnaround_s", p.turnaround_s);
    cr.get("max_frame_retries", p.max_frame_retries);
    cr.get("bit_rate", p.bit_rate);
    cr.get("cca_threshold_dbm", p.cca_threshold_dbm);
    cr.finish();
  }
  r.get("channel", c.channel);
  r.get("phy_overhead", c.phy_overhead);
  r.get("ack_length", c.ack_length);
  r.get("edp_period_s", c.edp_period_s);
  r.get("pir_period_s", c.pir_period_s);
  r.get("edp_payload", c.edp_payload);
  r.get("pdp_payload", c.pdp_payload);
  r.get("join_payload", c.join_payload);
  r.get("rssi_join_threshold_dbm", c.rssi_join_threshold_dbm);
  r.get("join_retry_s", c.join_retry_s);
  r.get("join_jitter_s", c.join_jitter_s);
  r.get("queue_depth", c.queue_depth);
  r.get("tx_power_dbm", c.tx_power_dbm);
  r.finish();
}

void read_channel(const Json& j, ChannelSettings& c) {
  Reader r(j, "channel");
  get_enum(r, "link_mode", c.link_mode, kLinkMode);
  if (const Json* links = r.child("rssi_links")) {
    if (!links->is_array()) fail("channel.rssi_links", "expected an array");
    c.rssi_links.clear();
    for (std::size_t i = 0; i < links->size(); ++i) {
      Reader lr((*links)[i], "channel.rssi_links[" + std::to_string(i) + "]");
      RssiLink l;
      lr.require("from", l.from);
      lr.require("to", l.to);
      lr.require("rssi_dbm", l.rssi_dbm);
      lr.get("symmetric", l.symmetric);
      lr.finish();
      c.rssi_links.push_back(l);
    }
  }
  if (const Json* pl = r.child("path_loss")) {
    Reader pr(*pl, "channel.path_loss");
    pr.get("pl0_db", c.pl0_db);
    pr.get("d0_m", c.d0_m);
    pr.get("gamma", c.gamma);
    pr.get("wall_loss_db", c.wall_loss_db);
    pr.get("floor_loss_db", c.floor_loss_db);
    pr.get("floor_height_m", c.floor_height_m);
    pr.finish();
  }
  r.get("jitter_sd_db", c.jitter_sd_db);
  r.get("sensitivity_dbm", c.sensitivity_dbm);
  r.get("capture_margin_db", c.capture_margin_db);
  if (const Json* pc = r.child("p_corrupt")) {
    if (!pc->is_array() || pc->empty()) fail("channel.p_corrupt", "expected a non-empty array of [margin_db, p] pairs");
    c.p_corrupt.clear();
    for (std::size_t i = 0; i < pc->size(); ++i) {
      const Json& pt = (*pc)[i];
      const std::string path = "channel.p_corrupt[" + std::to_string(i) + "]";
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
        fail(path, "expected [margin_db, p]");
      c.p_corrupt.emplace_back(pt[0].get<double>(), pt[1].get<double>());
    }
  }
  r.finish();
}

Json position_json(const std::optional<Position>& p) {
  if (!p) return nullptr;
  return Json{{"x", p->x}, {"y", p->y}, {"floor", p->floor}};
}

Json device_json(const DeviceSpec& d, bool gateway) {
  Json j{{"name", d.name}, {"position", position_json(d.position)}};
  if (!gateway) {
    j["occupancy"] = d.occupancy;
    j["start_time_s"] = d.start_time_s;
    j["sensing"] = d.sensing;
  }
  return j;
}

void check(bool ok, const std::string& path, const std::string& what) {
  if (!ok) fail(path, what);
}

}  // namespace

std::string_view to_string(Technology t) { return enum_name(t, kTech); }

Scenario parse_scenario(const std::string& json_text) {
  Json root;
  try {
    root = Json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(std::string("(root): malformed JSON: ") + e.what());
  }
  Reader r(root, "");
  Scenario s;
  r.require("schema_version", s.schema_version);
  if (s.schema_version != kSchemaVersion)
    fail("schema_version", "unsupported version " + std::to_string(s.schema_version) + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
  r.get("name", s.name);
  r.get("seed", s.seed);
  r.get("duration_s", s.duration_s);
  std::string tech;
  r.require("technology", tech);
  s.technology = parse_enum("technology", tech, kTech);
  if (const Json* j = r.child("lora")) read_lora(*j, s.lora);
  if (const Json* j = r.child("wpan")) read_wpan(*j, s.wpan);
  if (const Json* j = r.child("regulatory")) {
    Reader rr(*j, "regulatory");
    rr.get("duty_cycle", s.regulatory.duty_cycle);
    rr.get("window_s", s.regulatory.window_s);
    rr.finish();
  }
  s.lora.limit = s.regulatory;
  const Json* gw = r.child("gateway");
  if (!gw) fail("gateway", "missing required field");
  s.gateway = read_device(*gw, "gateway", true);
  const Json* nodes = r.child("nodes");
  if (!nodes || !nodes->is_array()) fail("nodes", "expected an array of nodes");
  for (std::size_t i = 0; i < nodes->size(); ++i)
    s.nodes.push_back(read_device((*nodes)[i], "nodes[" + std::to_string(i) + "]", false));
  if (const Json* walls = r.child("walls")) {
    if (!walls->is_array()) fail("walls", "expected an array");
    for (std::size_t i = 0; i < walls->size(); ++i) {
      Reader wr((*walls)[i], "walls[" + std::to_string(i) + "]");
      Wall w;
      wr.require("x1", w.x1);
      wr.require("y1", w.y1);
      wr.require("x2", w.x2);
      wr.require("y2", w.y2);
      wr.finish();
      s.walls.push_back(w);
    }
  }
  if (const Json* j = r.child("channel")) read_channel(*j, s.channel);
  if (const Json* j = r.child("reporting")) {
    Reader rr(*j, "reporting");
    rr.get("window_s", s.reporting.window_s);
    rr.get("series_window_s", s.reporting.series_window_s);
    rr.get("max_packets", s.reporting.max_packets);
    rr.finish();
  }
  r.finish();
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
  const auto& l = s.lora;
  const auto& w = s.wpan;
  const auto& c = s.channel;
  Json links = Json::array();
  for (const auto& link : c.rssi_links)
    links.push_back({{"from", link.from}, {"to", link.to}, {"rssi_dbm", link.rssi_dbm}, {"symmetric", link.symmetric}});
  Json curve = Json::array();
  for (const auto& [m, p] : c.p_corrupt) curve.push_back(Json::array({m, p}));
  Json nodes = Json::array();
  for (const auto& n : s.nodes) nodes.push_back(device_json(n, false));
  Json walls = Json::array();
  for (const auto& wall : s.walls)
    walls.push_back({{"x1", wall.x1}, {"y1", wall.y1}, {"x2", wall.x2}, {"y2", wall.y2}});

  Json root;
  root["schema_version"] = s.schema_version;
  root["name"] = s.name;
  root["seed"] = s.seed;
  root["duration_s"] = s.duration_s;
  root["technology"] = to_string(s.technology);
  root["lora"] = {{"sf", l.radio.sf},
                  {"bandwidth_khz", l.radio.bandwidth_hz / 1000.0},
                  {"coding_rate", l.radio.coding_rate},
                  {"preamble_symbols", l.radio.preamble_symbols},
                  {"explicit_header", l.radio.explicit_header},
                  {"crc_on", l.radio.crc_on},
                  {"ldro", enum_name(l.radio.ldro, kLdro)},
                  {"channel", l.channel},
                  {"drp_payload", l.drp_payload},
                  {"dp_payload", l.dp_payload},
                  {"beacon_payload", l.beacon_payload},
                  {"join_req_payload", l.join_req_payload},
                  {"join_ack_payload", l.join_ack_payload},
                  {"gw_delay_s", l.gw_delay_s},
                  {"sensor_latency_s", l.sensor_latency_s},
                  {"join_window_s", l.join_window_s},
                  {"refresh_interval_s", l.refresh_interval_s},
                  {"pir_period_s", l.pir_period_s},
                  {"timeout_margin_s", l.timeout_margin_s},
                  {"max_retries", l.max_retries},
                  {"pacing", enum_name(l.pacing, kPacing)},
                  {"tx_power_dbm", l.tx_power_dbm}};
  root["wpan"] = {{"csma",
                   {{"min_be", w.csma.min_be},
                    {"max_be", w.csma.max_be},
                    {"max_backoffs", w.csma.max_backoffs},
                    {"backoff_unit_s", w.csma.backoff_unit_s},
                    {"cca_duration_s", w.csma.cca_duration_s},
                    {"ack_timeout_s", w.csma.ack_timeout_s},
                    {"turnaround_s", w.csma.turnaround_s},
                    {"max_frame_retries", w.csma.max_frame_retries},
                    {"bit_rate", w.csma.bit_rate},
                    {"cca_threshold_dbm", w.csma.cca_threshold_dbm}}},
                  {"channel", w.channel},
                  {"phy_overhead", w.phy_overhead},
                  {"ack_length", w.ack_length},
                  {"edp_period_s", w.edp_period_s},
                  {"pir_period_s", w.pir_period_s},
                  {"edp_payload", w.edp_payload},
                  {"pdp_payload", w.pdp_payload},
                  {"join_payload", w.join_payload},
                  {"rssi_join_threshold_dbm", w.rssi_join_threshold_dbm},
                  {"join_retry_s", w.join_retry_s},
                  {"join_jitter_s", w.join_jitter_s},
                  {"queue_depth", w.queue_depth},
                  {"tx_power_dbm", w.tx_power_dbm}};
  root["regulatory"] = {{"duty_cycle", s.regulatory.duty_cycle}, {"window_s", s.regulatory.window_s}};
  root["gateway"] = device_json(s.gateway, true);
  root["nodes"] = nodes;
  root["walls"] = walls;
  root["channel"] = {{"link_mode", enum_name(c.link_mode, kLinkMode)},
                     {"rssi_links", links},
                     {"path_loss",
                      {{"pl0_db", c.pl0_db},
                       {"d0_m", c.d0_m},
                       {"gamma", c.gamma},
                       {"wall_loss_db", c.wall_loss_db},
                       {"floor_loss_db", c.floor_loss_db},
                       {"floor_height_m", c.floor_height_m}}},
                     {"jitter_sd_db", c.jitter_sd_db},
                     {"sensitivity_dbm", c.sensitivity_dbm ? Json(*c.sensitivity_dbm) : Json(nullptr)},
                     {"capture_margin_db", c.capture_margin_db},
                     {"p_corrupt", curve}};
  root["reporting"] = {{"window_s", s.reporting.window_s},
                       {"series_window_s", s.reporting.series_window_s},
                       {"max_packets", s.reporting.max_packets ? Json(*s.reporting.max_packets) : Json(nullptr)}};
  return root.dump(2) + "\n";
}

std::uint64_t scenario_hash(const Scenario& s) { return fnv1a64(serialize_scenario(s)); }

// --- validation --------------------------------------------------------------

void Scenario::validate() const {
  check(schema_version == kSchemaVersion, "schema_version", "unsupported version");
  check(std::isfinite(duration_s) && duration_s > 0, "duration_s", "must be positive");
  check(regulatory.duty_cycle > 0 && regulatory.duty_cycle <= 1, "regulatory.duty_cycle", "must be in (0, 1]");
  check(regulatory.window_s > 0, "regulatory.window_s", "must be positive");
  check(reporting.window_s > 0, "reporting.window_s", "must be positive");
  check(reporting.series_window_s > 0, "reporting.series_window_s", "must be positive");
  check(!reporting.max_packets || *reporting.max_packets > 0, "reporting.max_packets", "must be positive");
  check(!nodes.empty(), "nodes", "at least one node is required");

  std::set<std::string> names{gateway.name};
  check(!gateway.name.empty(), "gateway.name", "must not be empty");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "nodes[" + std::to_string(i) + "]";
    const auto& n = nodes[i];
    check(!n.name.empty(), path + ".name", "must not be empty");
    check(names.insert(n.name).second, path + ".name", "duplicate device name '" + n.name + "'");
    check(n.occupancy >= 0 && n.occupancy <= 1, path + ".occupancy", "must be in [0, 1]");
    check(n.start_time_s >= 0 && n.start_time_s < duration_s, path + ".start_time_s", "must be in [0, duration_s)");
  }

  const auto& c = channel;
  if (c.link_mode == LinkMode::PathLoss) {
    check(gateway.position.has_value(), "gateway.position", "required in path_loss mode");
    for (std::size_t i = 0; i < nodes.size(); ++i)
      check(nodes[i].position.has_value(), "nodes[" + std::to_string(i) + "].position", "required in path_loss mode");
    check(c.d0_m > 0, "channel.path_loss.d0_m", "must be positive");
    check(c.gamma > 0, "channel.path_loss.gamma", "must be positive");
    check(c.floor_height_m >= 0, "channel.path_loss.floor_height_m", "must be >= 0");
  } else {
    check(!c.rssi_links.empty(), "channel.rssi_links", "required in explicit mode");
  }
  for (std::size_t i = 0; i < c.rssi_links.size(); ++i) {
    const std::string path = "channel.rssi_links[" + std::to_string(i) + "]";
    check(names.contains(c.rssi_links[i].from), path + ".from", "unknown device '" + c.rssi_links[i].from + "'");
    check(names.contains(c.rssi_links[i].to), path + ".to", "unknown device '" + c.rssi_links[i].to + "'");
    check(c.rssi_links[i].from != c.rssi_links[i].to, path, "link endpoints must differ");
  }
  check(c.jitter_sd_db >= 0, "channel.jitter_sd_db", "must be >= 0");
  check(c.capture_margin_db >= 0, "channel.capture_margin_db", "must be >= 0");
  try {
    CorruptionCurve curve(c.p_corrupt);
  } catch (const std::invalid_argument& e) {
    fail("channel.p_corrupt", e.what());
  }

  if (technology == Technology::Lora) {
    try {
      lora.radio.validate();
    } catch (const std::invalid_argument& e) {
      fail("lora", e.what());
    }
    const auto& l = lora;
    check(l.drp_payload >= 0 && l.drp_payload <= 255, "lora.drp_payload", "must be in [0, 255]");
    check(l.dp_payload >= 5 && l.dp_payload <= 255, "lora.dp_payload", "must be in [5, 255]");
    check(l.beacon_payload >= 0 && l.beacon_payload <= 255, "lora.beacon_payload", "must be in [0, 255]");
    check(l.join_req_payload >= 0 && l.join_req_payload <= 255, "lora.join_req_payload", "must be in [0, 255]");
    check(l.join_ack_payload >= 0 && l.join_ack_payload <= 255, "lora.join_ack_payload", "must be in [0, 255]");
    check(l.gw_delay_s >= 0, "lora.gw_delay_s", "must be >= 0");
    check(l.sensor_latency_s >= 0, "lora.sensor_latency_s", "must be >= 0");
    check(l.join_window_s > 0, "lora.join_window_s", "must be positive");
    check(l.refresh_interval_s > l.join_window_s, "lora.refresh_interval_s", "must exceed join_window_s");
    check(l.pir_period_s > 0, "lora.pir_period_s", "must be positive");
    check(l.timeout_margin_s >= 0, "lora.timeout_margin_s", "must be >= 0");
    check(l.max_retries >= 0, "lora.max_retries", "must be >= 0");
  } else {
    try {
      wpan.validate();
    } catch (const std::invalid_argument& e) {
      fail("wpan", e.what());
    }
  }
}

DeviceId Scenario::device_id(const std::string& n) const {
  if (n == gateway.name) return kGateway;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].name == n) return static_cast<DeviceId>(i + 1);
  throw ScenarioError("unknown device '" + n + "'");
}

std::vector<std::string> Scenario::node_names() const {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.name);
  return out;
}

ChannelModel Scenario::channel_model() const {
  ChannelModel m;
  const auto& c = channel;
  m.link.mode = c.link_mode;
  for (const auto& l : c.rssi_links) {
    const DeviceId a = device_id(l.from);
    const DeviceId b = device_id(l.to);
    m.link.matrix[{a, b}] = l.rssi_dbm;
    if (l.symmetric) m.link.matrix[{b, a}] = l.rssi_dbm;
  }
  if (c.link_mode == LinkMode::PathLoss) {
    m.link.positions.push_back(gateway.position.value_or(Position{}));
    for (const auto& n : nodes) m.link.positions.push_back(n.position.value_or(Position{}));
  }
  m.link.walls = walls;
  m.link.pl0_db = c.pl0_db;
  m.link.d0_m = c.d0_m;
  m.link.gamma = c.gamma;
  m.link.wall_loss_db = c.wall_loss_db;
  m.link.floor_loss_db = c.floor_loss_db;
  m.link.floor_height_m = c.floor_height_m;
  m.link.jitter_sd_db = c.jitter_sd_db;
  m.sensitivity_dbm = c.sensitivity_dbm;
  m.capture_margin_db = c.capture_margin_db;
  m.p_corrupt = CorruptionCurve(c.p_corrupt);
  return m;
}

lora::LoraConfig Scenario::lora_config() const {
  lora::LoraConfig c = lora;
  c.limit = regulatory;
  return c;
}

std::vector<lora::LoraNodeSpec> Scenario::lora_nodes() const {
  std::vector<lora::LoraNodeSpec> out;
  for (const auto& n : nodes) out.push_back({n.name, n.occupancy, n.start_time_s});
  return out;
}

std::vector<wpan::WpanNodeSpec> Scenario::wpan_nodes() const {
  std::vector<wpan::WpanNodeSpec> out;
  for (const auto& n : nodes) out.push_back({n.name, n.occupancy, n.start_time_s, n.sensing});
  return out;
}

std::uint64_t Scenario::max_packets_per_window() const {
  if (reporting.max_packets) return *reporting.max_packets;
  if (technology == Technology::Lora)
    return lora_config().max_packets_per_window(static_cast<int>(nodes.size()), reporting.window_s);
  return wpan.max_packets_per_window(reporting.window_s);
}

}  // namespace iotsim
