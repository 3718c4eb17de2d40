#include "teamrace/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "teamrace/util.hpp"

namespace teamrace {

namespace {

using nlohmann::json;

json parse_document(const std::string& text, const std::string& origin) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw ConfigError(origin + ": not valid JSON");
  if (!doc.is_object()) throw ConfigError(origin + ": expected a JSON object");
  return doc;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& origin) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (allowed.find(key) == allowed.end()) {
      throw ConfigError(origin + ": unknown key \"" + key + "\"");
    }
  }
}

double require_number(const json& obj, const char* key, const std::string& origin) {
  if (!obj.contains(key)) throw ConfigError(origin + ": missing key \"" + key + "\"");
  if (!obj[key].is_number()) throw ConfigError(origin + ": key \"" + key + "\" must be a number");
  return obj[key].get<double>();
}

int require_int(const json& obj, const char* key, const std::string& origin) {
  if (!obj.contains(key)) throw ConfigError(origin + ": missing key \"" + key + "\"");
  if (!obj[key].is_number_integer()) {
    throw ConfigError(origin + ": key \"" + key + "\" must be an integer");
  }
  return obj[key].get<int>();
}

std::string require_string(const json& obj, const char* key, const std::string& origin) {
  if (!obj.contains(key)) throw ConfigError(origin + ": missing key \"" + key + "\"");
  if (!obj[key].is_string()) throw ConfigError(origin + ": key \"" + key + "\" must be a string");
  return obj[key].get<std::string>();
}

SegmentSpec parse_segment(const json& seg, const std::string& origin) {
  if (!seg.is_object()) throw ConfigError(origin + ": each segment must be an object");
  const std::string kind = require_string(seg, "kind", origin);
  if (kind == "straight") {
    reject_unknown_keys(seg, {"kind", "length"}, origin);
    return SegmentSpec::straight(require_number(seg, "length", origin));
  }
  if (kind == "arc") {
    reject_unknown_keys(seg, {"kind", "radius", "angle", "direction"}, origin);
    const std::string dir = require_string(seg, "direction", origin);
    if (dir != "left" && dir != "right") {
      throw ConfigError(origin + ": segment direction must be \"left\" or \"right\"");
    }
    return SegmentSpec::arc(require_number(seg, "radius", origin),
                            require_number(seg, "angle", origin),
                            dir == "left" ? ArcDirection::kLeft : ArcDirection::kRight);
  }
  throw ConfigError(origin + ": segment kind must be \"straight\" or \"arc\", got \"" + kind +
                    "\"");
}

ControllerSpec controller_spec_of(const std::string& kind_name, const std::string& origin) {
  ControllerSpec spec;
  try {
    spec.kind = controller_kind_from_string(kind_name);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return spec;
}

json waypoint_to_json(const PlanWaypoint& wp) {
  return json{{"checkpoint", wp.checkpoint},     {"lane", wp.lane},
              {"target_velocity", wp.target_velocity}, {"x", wp.position.x},
              {"y", wp.position.y},              {"heading", wp.heading}};
}

PlanWaypoint waypoint_from_json(const json& obj, const std::string& origin) {
  PlanWaypoint wp;
  wp.checkpoint = require_int(obj, "checkpoint", origin);
  wp.lane = require_int(obj, "lane", origin);
  wp.target_velocity = require_number(obj, "target_velocity", origin);
  wp.position.x = require_number(obj, "x", origin);
  wp.position.y = require_number(obj, "y", origin);
  wp.heading = require_number(obj, "heading", origin);
  return wp;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw ConfigError("failed writing file: " + path);
}

TrackSpec parse_track_spec(const std::string& text, const std::string& origin) {
  const json doc = parse_document(text, origin);
  reject_unknown_keys(doc,
                      {"name", "lanes", "lane_width", "track_half_width", "lane_change_limit",
                       "checkpoint_spacing", "segments"},
                      origin);
  TrackSpec spec;
  spec.name = require_string(doc, "name", origin);
  spec.lane_count = require_int(doc, "lanes", origin);
  spec.lane_width = require_number(doc, "lane_width", origin);
  spec.track_half_width = require_number(doc, "track_half_width", origin);
  spec.lane_change_limit = require_int(doc, "lane_change_limit", origin);
  spec.checkpoint_spacing = require_number(doc, "checkpoint_spacing", origin);
  if (!doc.contains("segments") || !doc["segments"].is_array()) {
    throw ConfigError(origin + ": missing \"segments\" array");
  }
  for (const json& seg : doc["segments"]) spec.segments.push_back(parse_segment(seg, origin));
  spec.validate();
  return spec;
}

TrackSpec load_track_spec(const std::string& path) {
  return parse_track_spec(read_text_file(path), path);
}

VehicleParams parse_vehicle_params(const std::string& text, const std::string& origin) {
  const json doc = parse_document(text, origin);
  reject_unknown_keys(doc,
                      {"a", "b", "v_max", "a_max", "a_min", "wear_rate", "vehicle_radius",
                       "L_straight", "L_curve"},
                      origin);
  VehicleParams params;
  auto grab = [&](const char* key, double& field) {
    if (doc.contains(key)) {
      if (!doc[key].is_number()) {
        throw ConfigError(origin + ": key \"" + std::string(key) + "\" must be a number");
      }
      field = doc[key].get<double>();
    }
  };
  grab("a", params.a);
  grab("b", params.b);
  grab("v_max", params.v_max);
  grab("a_max", params.a_max);
  grab("a_min", params.a_min);
  grab("wear_rate", params.wear_rate);
  grab("vehicle_radius", params.vehicle_radius);
  grab("L_straight", params.L_straight);
  grab("L_curve", params.L_curve);
  params.validate();
  return params;
}

VehicleParams load_vehicle_params(const std::string& path) {
  return parse_vehicle_params(read_text_file(path), path);
}

TournamentConfig parse_tournament_config(const std::string& text, const std::string& origin) {
  const json doc = parse_document(text, origin);
  reject_unknown_keys(doc,
                      {"track", "vehicle", "pairings", "races_per_pairing", "seed", "time_limit",
                       "mcts_iterations", "mcts_rollout", "high_level_period"},
                      origin);
  TournamentConfig config;
  config.track_path = require_string(doc, "track", origin);
  config.vehicle_path = require_string(doc, "vehicle", origin);
  if (!doc.contains("pairings") || !doc["pairings"].is_array() || doc["pairings"].empty()) {
    throw ConfigError(origin + ": missing non-empty \"pairings\" array");
  }
  for (const json& p : doc["pairings"]) {
    if (!p.is_object()) throw ConfigError(origin + ": each pairing must be an object");
    reject_unknown_keys(p, {"name", "team_a", "team_b"}, origin);
    TournamentPairing pairing;
    const std::string a = require_string(p, "team_a", origin);
    const std::string b = require_string(p, "team_b", origin);
    pairing.team_a = controller_spec_of(a, origin);
    pairing.team_b = controller_spec_of(b, origin);
    pairing.name = p.contains("name") ? require_string(p, "name", origin) : a + "_vs_" + b;
    config.pairings.push_back(pairing);
  }
  if (doc.contains("races_per_pairing")) {
    config.races_per_pairing = require_int(doc, "races_per_pairing", origin);
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer()) {
      throw ConfigError(origin + ": key \"seed\" must be an integer");
    }
    config.base_seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("time_limit")) {
    config.base_params.time_limit = require_number(doc, "time_limit", origin);
  }
  if (doc.contains("mcts_iterations")) {
    const int iters = require_int(doc, "mcts_iterations", origin);
    for (TournamentPairing& pairing : config.pairings) {
      pairing.team_a.mcts.iterations = iters;
      pairing.team_b.mcts.iterations = iters;
    }
  }
  if (doc.contains("mcts_rollout")) {
    const std::string name = require_string(doc, "mcts_rollout", origin);
    RolloutPolicy policy;
    if (name == "uniform") {
      policy = RolloutPolicy::kUniform;
    } else if (name == "greedy") {
      policy = RolloutPolicy::kGreedy;
    } else {
      throw ConfigError(origin + ": key \"mcts_rollout\" must be \"uniform\" or \"greedy\"");
    }
    for (TournamentPairing& pairing : config.pairings) {
      pairing.team_a.mcts.rollout = policy;
      pairing.team_b.mcts.rollout = policy;
    }
  }
  if (doc.contains("high_level_period")) {
    config.base_params.schedule.high_level_period = require_int(doc, "high_level_period", origin);
  }
  return config;
}

TournamentConfig load_tournament_config(const std::string& path) {
  TournamentConfig config = parse_tournament_config(read_text_file(path), path);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path candidate(p);
    if (candidate.is_absolute() || base.empty()) return p;
    return (base / candidate).string();
  };
  config.track_path = resolve(config.track_path);
  config.vehicle_path = resolve(config.vehicle_path);
  return config;
}

void save_racing_line(const RacingLine& line, std::uint64_t track_hash,
                      std::uint64_t vehicle_hash, const std::string& path) {
  json doc;
  doc["track_hash"] = track_hash;
  doc["vehicle_hash"] = vehicle_hash;
  doc["predicted_time"] = line.predicted_time;
  doc["waypoints"] = json::array();
  for (const PlanWaypoint& wp : line.waypoints) doc["waypoints"].push_back(waypoint_to_json(wp));
  write_text_file(path, doc.dump(2) + "\n");
}

std::optional<RacingLine> load_racing_line(const std::string& path, std::uint64_t track_hash,
                                           std::uint64_t vehicle_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  const json doc = json::parse(buf.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  if (!doc.contains("track_hash") || !doc.contains("vehicle_hash")) return std::nullopt;
  if (doc["track_hash"].get<std::uint64_t>() != track_hash ||
      doc["vehicle_hash"].get<std::uint64_t>() != vehicle_hash) {
    return std::nullopt;
  }
  RacingLine line;
  line.predicted_time = doc.value("predicted_time", 0.0);
  if (!doc.contains("waypoints") || !doc["waypoints"].is_array()) return std::nullopt;
  for (const json& w : doc["waypoints"]) line.waypoints.push_back(waypoint_from_json(w, path));
  return line;
}

std::string results_to_json(const TournamentResult& result) {
  json doc;
  doc["rows"] = json::array();
  for (const RaceRow& row : result.rows) {
    const RaceResult& r = row.result;
    json j;
    j["pairing"] = row.pairing;
    j["seed"] = r.seed;
    j["grid_id"] = r.grid_id;
    j["winner_team"] = r.aborted ? -2 : r.score.winner;
    j["points_A"] = r.score.team_points[0];
    j["points_B"] = r.score.team_points[1];
    j["collisions_at_fault_A"] = r.collisions_at_fault[0];
    j["collisions_at_fault_B"] = r.collisions_at_fault[1];
    j["illegal_lane_changes_A"] = r.illegal_lane_changes[0];
    j["illegal_lane_changes_B"] = r.illegal_lane_changes[1];
    j["safety_A"] = r.safety[0];
    j["safety_B"] = r.safety[1];
    j["lane_dist_A"] = r.lane_deviation[0];
    j["lane_dist_B"] = r.lane_deviation[1];
    j["vel_diff_A"] = r.velocity_deviation[0];
    j["vel_diff_B"] = r.velocity_deviation[1];
    j["trace_hash"] = r.trace_hash;
    doc["rows"].push_back(std::move(j));
  }
  doc["aggregates"] = json::array();
  for (const PairingAggregate& agg : result.aggregates) {
    json j;
    j["pairing"] = agg.pairing;
    j["races"] = agg.races;
    j["wins_A"] = agg.wins_a;
    j["wins_B"] = agg.wins_b;
    j["draws"] = agg.draws;
    j["points_A"] = agg.points_a;
    j["points_B"] = agg.points_b;
    j["avg_collisions_A"] = agg.avg_collisions_a;
    j["avg_collisions_B"] = agg.avg_collisions_b;
    j["avg_illegal_A"] = agg.avg_illegal_a;
    j["avg_illegal_B"] = agg.avg_illegal_b;
    j["safety_A"] = agg.safety_a;
    j["safety_B"] = agg.safety_b;
    j["lane_dist_A"] = agg.lane_dev_a;
    j["lane_dist_B"] = agg.lane_dev_b;
    j["vel_diff_A"] = agg.vel_dev_a;
    j["vel_diff_B"] = agg.vel_dev_b;
    doc["aggregates"].push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

TournamentResult results_from_json(const std::string& text) {
  const json doc = parse_document(text, "results");
  TournamentResult result;
  if (doc.contains("rows")) {
    for (const json& j : doc["rows"]) {
      RaceRow row;
      row.pairing = j.at("pairing").get<std::string>();
      RaceResult& r = row.result;
      r.seed = j.at("seed").get<std::uint64_t>();
      r.grid_id = j.at("grid_id").get<int>();
      const int winner = j.at("winner_team").get<int>();
      r.aborted = winner == -2;
      r.score.winner = r.aborted ? -1 : winner;
      r.score.team_points[0] = j.at("points_A").get<double>();
      r.score.team_points[1] = j.at("points_B").get<double>();
      r.collisions_at_fault[0] = j.at("collisions_at_fault_A").get<int>();
      r.collisions_at_fault[1] = j.at("collisions_at_fault_B").get<int>();
      r.illegal_lane_changes[0] = j.at("illegal_lane_changes_A").get<int>();
      r.illegal_lane_changes[1] = j.at("illegal_lane_changes_B").get<int>();
      r.safety[0] = j.at("safety_A").get<double>();
      r.safety[1] = j.at("safety_B").get<double>();
      r.lane_deviation[0] = j.at("lane_dist_A").get<double>();
      r.lane_deviation[1] = j.at("lane_dist_B").get<double>();
      r.velocity_deviation[0] = j.at("vel_diff_A").get<double>();
      r.velocity_deviation[1] = j.at("vel_diff_B").get<double>();
      r.trace_hash = j.at("trace_hash").get<std::uint64_t>();
      result.rows.push_back(std::move(row));
    }
  }
  if (doc.contains("aggregates")) {
    for (const json& j : doc["aggregates"]) {
      PairingAggregate agg;
      agg.pairing = j.at("pairing").get<std::string>();
      agg.races = j.at("races").get<int>();
      agg.wins_a = j.at("wins_A").get<int>();
      agg.wins_b = j.at("wins_B").get<int>();
      agg.draws = j.at("draws").get<int>();
      agg.points_a = j.at("points_A").get<double>();
      agg.points_b = j.at("points_B").get<double>();
      agg.avg_collisions_a = j.at("avg_collisions_A").get<double>();
      agg.avg_collisions_b = j.at("avg_collisions_B").get<double>();
      agg.avg_illegal_a = j.at("avg_illegal_A").get<double>();
      agg.avg_illegal_b = j.at("avg_illegal_B").get<double>();
      agg.safety_a = j.at("safety_A").get<double>();
      agg.safety_b = j.at("safety_B").get<double>();
      agg.lane_dev_a = j.at("lane_dist_A").get<double>();
      agg.lane_dev_b = j.at("lane_dist_B").get<double>();
      agg.vel_dev_a = j.at("vel_diff_A").get<double>();
      agg.vel_dev_b = j.at("vel_diff_B").get<double>();
      result.aggregates.push_back(std::move(agg));
    }
  }
  return result;
}

}  // namespace teamrace
