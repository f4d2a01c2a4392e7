#include "qconf/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace qconf {

using nlohmann::json;

namespace {

class Validator {
 public:
  void fail(const std::string& path, const std::string& why) {
    problems_.push_back(path + ": " + why);
  }
  void require(bool ok, const std::string& path, const std::string& why) {
    if (!ok) fail(path, why);
  }
  void finish(const char* what) const {
    if (problems_.empty()) return;
    std::string msg = std::string(what) + " invalid:";
    for (const auto& p : problems_) msg += "\n  " + p;
    throw ConfigError(msg);
  }

 private:
  std::vector<std::string> problems_;
};

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& path, Validator& v) {
  for (const auto& [key, value] : object.items()) {
    (void)value;
    if (!allowed.count(key)) v.fail(path + key, "unknown key");
  }
}

bool probability_ok(double p) { return p >= 0.0 && p <= 1.0; }

AttackStrategy parse_attack(const json& j, Validator& v) {
  AttackStrategy attack;
  reject_unknown_keys(j, {"kind", "basis", "from", "to"}, "attack.", v);
  const std::string kind = j.value("kind", "none");
  if (kind == "none") {
    attack.kind = AttackKind::None;
  } else if (kind == "intercept_resend") {
    attack.kind = AttackKind::InterceptResend;
  } else if (kind == "traveling_measure_z") {
    attack.kind = AttackKind::TravelingMeasureZ;
  } else {
    v.fail("attack.kind", "must be none, intercept_resend or traveling_measure_z");
    return attack;
  }
  if (attack.kind == AttackKind::None) return attack;

  attack.link_from = j.value("from", 0);
  attack.link_to = j.value("to", 1);
  if (attack.kind == AttackKind::InterceptResend) {
    const std::string basis = j.value("basis", "Z");
    if (basis == "Z") attack.basis = AttackBasis::Z;
    else if (basis == "X") attack.basis = AttackBasis::X;
    else if (basis == "Y") attack.basis = AttackBasis::Y;
    else if (basis == "random_zx") attack.basis = AttackBasis::RandomZX;
    else v.fail("attack.basis", "must be Z, X, Y or random_zx");
  }
  return attack;
}

}  // namespace

LinkConfig ScenarioConfig::link_between(int from, int to) const {
  for (const LinkConfig& link : links)
    if (link.from == from && link.to == to) return link;
  return LinkConfig{from, to, 1.0, 0.0};
}

double ScenarioConfig::detector_p_d(int party) const {
  for (const DetectorConfig& det : detectors)
    if (det.party == party) return det.p_d;
  return 1.0;
}

std::vector<LinkConfig> ScenarioConfig::star_links() const {
  std::vector<LinkConfig> out;
  for (int l = 1; l < parties; ++l) out.push_back(link_between(0, l));
  return out;
}

std::vector<LinkConfig> ScenarioConfig::chain_links(int sender_party) const {
  std::vector<LinkConfig> out;
  int prev = sender_party;
  for (int step = 1; step < parties; ++step) {
    const int next = (sender_party + step) % parties;
    out.push_back(link_between(prev, next));
    prev = next;
  }
  return out;
}

std::vector<DetectorConfig> ScenarioConfig::all_detectors() const {
  std::vector<DetectorConfig> out;
  for (int l = 0; l < parties; ++l) out.push_back(DetectorConfig{l, detector_p_d(l)});
  return out;
}

namespace {

ScenarioConfig parse_scenario_object(const json& j);
SweepConfig parse_sweep_object(const json& j);

}  // namespace

ScenarioConfig parse_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario: top level must be an object");
  try {
    return parse_scenario_object(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: wrong value type: ") + e.what());
  }
}

namespace {

ScenarioConfig parse_scenario_object(const json& j) {
  Validator v;
  reject_unknown_keys(j,
                      {"scheme", "parties", "seed", "trials", "rounds", "sample_ratio",
                       "abort_threshold_z", "abort_threshold_x", "key_length", "check_fraction",
                       "reuse_check_fraction", "sender", "message_bits", "links", "detectors",
                       "attack"},
                      "", v);

  ScenarioConfig c;
  c.scheme = j.value("scheme", 1);
  v.require(c.scheme == 1 || c.scheme == 2, "scheme", "must be 1 or 2");

  c.parties = j.value("parties", 3);
  v.require(c.parties >= 3 && c.parties <= 12, "parties", "must be in [3,12]");

  if (!j.contains("seed")) v.fail("seed", "required (runs must be reproducible)");
  else c.seed = j.at("seed").get<std::uint64_t>();

  c.trials = j.value("trials", 1);
  v.require(c.trials >= 1, "trials", "must be >= 1");

  c.rounds = j.value("rounds", std::int64_t{0});
  v.require(c.rounds >= 0, "rounds", "must be >= 0");
  c.sample_ratio = j.value("sample_ratio", 0.0);
  v.require(c.sample_ratio >= 0.0 && c.sample_ratio <= 2.0, "sample_ratio", "must be in [0,2]");
  c.abort_threshold_z = j.value("abort_threshold_z", 0.02);
  c.abort_threshold_x = j.value("abort_threshold_x", 0.02);
  v.require(c.abort_threshold_z >= 0.0, "abort_threshold_z", "must be >= 0");
  v.require(c.abort_threshold_x >= 0.0, "abort_threshold_x", "must be >= 0");

  c.key_length = j.value("key_length", std::int64_t{0});
  v.require(c.key_length >= 0, "key_length", "must be >= 0");
  c.check_fraction = j.value("check_fraction", 0.2);
  v.require(c.check_fraction >= 0.0 && c.check_fraction < 1.0, "check_fraction",
            "must be in [0,1)");
  c.reuse_check_fraction = j.value("reuse_check_fraction", 0.1);
  v.require(c.reuse_check_fraction >= 0.0 && c.reuse_check_fraction <= 1.0,
            "reuse_check_fraction", "must be in [0,1]");
  c.sender = j.value("sender", 0);
  v.require(c.sender >= 0 && c.sender < c.parties, "sender", "must name a party");

  c.message_bits = j.value("message_bits", std::int64_t{0});
  v.require(c.message_bits >= 0, "message_bits", "must be >= 0");

  if (j.contains("links")) {
    const json& links = j.at("links");
    if (!links.is_array()) v.fail("links", "must be an array");
    else {
      for (std::size_t i = 0; i < links.size(); ++i) {
        const std::string path = "links[" + std::to_string(i) + "]";
        const json& lj = links[i];
        reject_unknown_keys(lj, {"from", "to", "p_t", "q_depol"}, path + ".", v);
        LinkConfig link;
        link.from = lj.value("from", 0);
        link.to = lj.value("to", 0);
        link.p_t = lj.value("p_t", 1.0);
        link.q_depol = lj.value("q_depol", 0.0);
        v.require(link.from >= 0 && link.from < c.parties, path + ".from", "must name a party");
        v.require(link.to >= 0 && link.to < c.parties, path + ".to", "must name a party");
        v.require(link.from != link.to, path, "from and to must differ");
        v.require(probability_ok(link.p_t), path + ".p_t", "must be in [0,1]");
        v.require(probability_ok(link.q_depol), path + ".q_depol", "must be in [0,1]");
        for (const LinkConfig& seen : c.links)
          if (seen.from == link.from && seen.to == link.to)
            v.fail(path, "duplicate link for this ordered pair");
        c.links.push_back(link);
      }
    }
  }

  if (j.contains("detectors")) {
    const json& dets = j.at("detectors");
    if (!dets.is_array()) v.fail("detectors", "must be an array");
    else {
      for (std::size_t i = 0; i < dets.size(); ++i) {
        const std::string path = "detectors[" + std::to_string(i) + "]";
        const json& dj = dets[i];
        reject_unknown_keys(dj, {"party", "p_d"}, path + ".", v);
        DetectorConfig det;
        det.party = dj.value("party", 0);
        det.p_d = dj.value("p_d", 1.0);
        v.require(det.party >= 0 && det.party < c.parties, path + ".party", "must name a party");
        v.require(probability_ok(det.p_d), path + ".p_d", "must be in [0,1]");
        for (const DetectorConfig& seen : c.detectors)
          if (seen.party == det.party) v.fail(path, "duplicate detector for this party");
        c.detectors.push_back(det);
      }
    }
  }

  if (j.contains("attack")) {
    const json& aj = j.at("attack");
    if (!aj.is_object()) v.fail("attack", "must be an object");
    else {
      c.attack = parse_attack(aj, v);
      if (c.attack.active()) {
        v.require(c.attack.link_from >= 0 && c.attack.link_from < c.parties, "attack.from",
                  "must name a party");
        v.require(c.attack.link_to >= 0 && c.attack.link_to < c.parties, "attack.to",
                  "must name a party");
      }
    }
  }

  if (c.scheme == 1) v.require(c.rounds >= 1, "rounds", "scheme 1 needs rounds >= 1");
  if (c.scheme == 2) v.require(c.key_length >= 1, "key_length", "scheme 2 needs key_length >= 1");

  v.finish("scenario");
  return c;
}

}  // namespace

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_json(buffer.str());
}

SweepConfig parse_sweep_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("sweep parse error: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("sweep: top level must be an object");
  try {
    return parse_sweep_object(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sweep: wrong value type: ") + e.what());
  }
}

namespace {

SweepConfig parse_sweep_object(const json& j) {
  Validator v;
  reject_unknown_keys(j, {"parties", "sample_ratio", "p_t", "p_d", "rounds", "trials", "seed"},
                      "", v);

  SweepConfig s;
  if (!j.contains("seed")) v.fail("seed", "required");
  else s.seed = j.at("seed").get<std::uint64_t>();
  s.rounds = j.value("rounds", std::int64_t{0});
  v.require(s.rounds >= 1, "rounds", "must be >= 1");
  s.trials = j.value("trials", 1);
  v.require(s.trials >= 1, "trials", "must be >= 1");

  auto read_axis = [&](const char* key, auto& out, auto check, const char* why) {
    if (!j.contains(key)) {
      v.fail(key, "required");
      return;
    }
    const json& arr = j.at(key);
    if (!arr.is_array() || arr.empty()) {
      v.fail(key, "must be a non-empty array");
      return;
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      auto value = arr[i].get<typename std::decay_t<decltype(out)>::value_type>();
      if (!check(value)) v.fail(std::string(key) + "[" + std::to_string(i) + "]", why);
      out.push_back(value);
    }
  };

  read_axis("parties", s.parties, [](int m) { return m >= 3 && m <= 12; }, "must be in [3,12]");
  read_axis("sample_ratio", s.sample_ratio,
            [](double r) { return r >= 0.0 && r <= 2.0; }, "must be in [0,2]");
  read_axis("p_t", s.p_t, probability_ok, "must be in [0,1]");
  read_axis("p_d", s.p_d, probability_ok, "must be in [0,1]");

  v.finish("sweep");
  return s;
}

}  // namespace

SweepConfig load_sweep(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sweep file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_sweep_json(buffer.str());
}

}  // namespace qconf
