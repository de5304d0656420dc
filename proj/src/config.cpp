#include "roadmesh/config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace roadmesh {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw InvalidInput("'" + key + "' expects a number, got '" + v + "'");
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long l = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return l;
  } catch (const std::logic_error&) {
    throw InvalidInput("'" + key + "' expects an integer, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long u = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return u;
  } catch (const std::logic_error&) {
    throw InvalidInput("'" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InvalidInput("'" + key + "' expects a boolean, got '" + v + "'");
}

using Setter = std::function<void(const std::string& key, const std::string& value)>;

void apply(const KeyValueFile& file, const std::map<std::string, Setter>& setters,
           const Setter& fallback = {}) {
  for (const auto& [key, value] : file.entries()) {
    const auto it = setters.find(key);
    if (it != setters.end()) {
      it->second(key, value);
    } else if (fallback) {
      fallback(key, value);
    } else {
      throw InvalidInput("unknown configuration key '" + key + "'");
    }
  }
}

}  // namespace

KeyValueFile KeyValueFile::parse(const std::string& text) {
  KeyValueFile f;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidInput("line " + std::to_string(lineno) + ": empty key");
    f.add(std::move(key), trim(line.substr(eq + 1)));
  }
  return f;
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  std::optional<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k == key) out = v;
  }
  return out;
}

std::vector<std::string> KeyValueFile::get_all(const std::string& key) const {
  std::vector<std::string> out;
  for (const auto& [k, v] : entries_) {
    if (k == key) out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------

TrainConfig train_config_from(const KeyValueFile& file, TrainConfig c) {
  const std::map<std::string, Setter> setters = {
      {"batch_size", [&](auto& k, auto& v) { c.batch_size = static_cast<int>(to_long(k, v)); }},
      {"epochs", [&](auto& k, auto& v) { c.epochs = static_cast<int>(to_long(k, v)); }},
      {"window_distance", [&](auto& k, auto& v) { c.window_distance = to_double(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = to_u64(k, v); }},
      {"lambda_rgb", [&](auto& k, auto& v) { c.weights.rgb = to_double(k, v); }},
      {"lambda_sem", [&](auto& k, auto& v) { c.weights.sem = to_double(k, v); }},
      {"lambda_z", [&](auto& k, auto& v) { c.weights.z = to_double(k, v); }},
      {"lambda_smooth", [&](auto& k, auto& v) { c.weights.smooth = to_double(k, v); }},
      {"lr_elevation_mlp", [&](auto& k, auto& v) { c.learning_rates.elevation_mlp = to_double(k, v); }},
      {"lr_color_mlps", [&](auto& k, auto& v) { c.learning_rates.color_mlps = to_double(k, v); }},
      {"lr_sem_logits", [&](auto& k, auto& v) { c.learning_rates.sem_logits = to_double(k, v); }},
      {"lr_color_codes", [&](auto& k, auto& v) { c.learning_rates.color_codes = to_double(k, v); }},
      {"edge_length", [&](auto& k, auto& v) { c.edge_length = to_double(k, v); }},
      {"half_width", [&](auto& k, auto& v) { c.half_width = to_double(k, v); }},
      {"neighborhood_radius", [&](auto& k, auto& v) { c.neighborhood_radius = to_double(k, v); }},
      {"smooth_normalization",
       [&](auto& k, auto& v) {
         if (v == "sum") c.smooth_normalization = SmoothNormalization::Sum;
         else if (v == "per_vertex") c.smooth_normalization = SmoothNormalization::PerVertex;
         else throw InvalidInput("'" + k + "' must be 'sum' or 'per_vertex'");
       }},
      {"shuffle_batches", [&](auto& k, auto& v) { c.shuffle_batches = to_bool(k, v); }},
      {"threads", [&](auto& k, auto& v) { c.threads = static_cast<int>(to_long(k, v)); }},
      {"ablation",
       [&](auto&, auto& v) {
         c.ablation = Ablation{};
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) c.ablation.enable(trim(item));
       }},
  };
  apply(file, setters);
  return c;
}

std::string to_text(const TrainConfig& c) {
  std::ostringstream out;
  out << "batch_size = " << c.batch_size << "\n"
      << "epochs = " << c.epochs << "\n"
      << "window_distance = " << fmt(c.window_distance) << "\n"
      << "seed = " << c.seed << "\n"
      << "lambda_rgb = " << fmt(c.weights.rgb) << "\n"
      << "lambda_sem = " << fmt(c.weights.sem) << "\n"
      << "lambda_z = " << fmt(c.weights.z) << "\n"
      << "lambda_smooth = " << fmt(c.weights.smooth) << "\n"
      << "lr_elevation_mlp = " << fmt(c.learning_rates.elevation_mlp) << "\n"
      << "lr_color_mlps = " << fmt(c.learning_rates.color_mlps) << "\n"
      << "lr_sem_logits = " << fmt(c.learning_rates.sem_logits) << "\n"
      << "lr_color_codes = " << fmt(c.learning_rates.color_codes) << "\n"
      << "edge_length = " << fmt(c.edge_length) << "\n"
      << "half_width = " << fmt(c.half_width) << "\n"
      << "neighborhood_radius = " << fmt(c.neighborhood_radius) << "\n"
      << "smooth_normalization = "
      << (c.smooth_normalization == SmoothNormalization::Sum ? "sum" : "per_vertex") << "\n"
      << "shuffle_batches = " << (c.shuffle_batches ? "true" : "false") << "\n"
      << "threads = " << c.threads << "\n"
      << "ablation = " << c.ablation.to_string() << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------

namespace {

CameraSpec parse_camera(const std::string& value) {
  std::istringstream in(value);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  if (tok.size() != 14 && tok.size() != 21) {
    throw InvalidInput("camera line needs 14 or 21 fields, got " + std::to_string(tok.size()));
  }
  const std::string key = "camera";
  CameraSpec c;
  c.id = static_cast<int>(to_long(key, tok[0]));
  c.fx = to_double(key, tok[1]);
  c.fy = to_double(key, tok[2]);
  c.cx = to_double(key, tok[3]);
  c.cy = to_double(key, tok[4]);
  c.width = static_cast<int>(to_long(key, tok[5]));
  c.height = static_cast<int>(to_long(key, tok[6]));
  c.gain = to_double(key, tok[7]);
  c.gamma = to_double(key, tok[8]);
  if (tok.size() == 14) {
    c.vehicle_from_camera = CameraSpec::mount(
        {to_double(key, tok[9]), to_double(key, tok[10]), to_double(key, tok[11])},
        to_double(key, tok[12]), to_double(key, tok[13]));
  } else {
    Eigen::Matrix<double, 3, 4> m;
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 4; ++k) m(r, k) = to_double(key, tok[static_cast<std::size_t>(9 + 4 * r + k)]);
    }
    c.vehicle_from_camera = Eigen::Isometry3d::Identity();
    c.vehicle_from_camera.linear() = m.leftCols<3>();
    c.vehicle_from_camera.translation() = m.col(3);
  }
  return c;
}

}  // namespace

SceneSpec scene_spec_from(const KeyValueFile& file, SceneSpec s) {
  bool cameras_given = false;
  const std::map<std::string, Setter> setters = {
      {"route_length", [&](auto& k, auto& v) { s.route_length = to_double(k, v); }},
      {"heading_deg", [&](auto& k, auto& v) { s.heading_deg = to_double(k, v); }},
      {"profile", [&](auto&, auto& v) { s.profile = ElevationProfile::parse(v); }},
      {"lane_count", [&](auto& k, auto& v) { s.lane_count = static_cast<int>(to_long(k, v)); }},
      {"lane_width", [&](auto& k, auto& v) { s.lane_width = to_double(k, v); }},
      {"marking_width", [&](auto& k, auto& v) { s.marking_width = to_double(k, v); }},
      {"dash_length", [&](auto& k, auto& v) { s.dash_length = to_double(k, v); }},
      {"dash_gap", [&](auto& k, auto& v) { s.dash_gap = to_double(k, v); }},
      {"curb_width", [&](auto& k, auto& v) { s.curb_width = to_double(k, v); }},
      {"manhole_spacing", [&](auto& k, auto& v) { s.manhole_spacing = to_double(k, v); }},
      {"manhole_radius", [&](auto& k, auto& v) { s.manhole_radius = to_double(k, v); }},
      {"edge_softness", [&](auto& k, auto& v) { s.edge_softness = to_double(k, v); }},
      {"footprint_half_width", [&](auto& k, auto& v) { s.footprint_half_width = to_double(k, v); }},
      {"trajectory_spacing", [&](auto& k, auto& v) { s.trajectory_spacing = to_double(k, v); }},
      {"frame_spacing", [&](auto& k, auto& v) { s.frame_spacing = to_double(k, v); }},
      {"speed", [&](auto& k, auto& v) { s.speed = to_double(k, v); }},
      {"lidar_density", [&](auto& k, auto& v) { s.lidar_density = to_double(k, v); }},
      {"lidar_sigma", [&](auto& k, auto& v) { s.lidar_sigma = to_double(k, v); }},
      {"dynamic_probability", [&](auto& k, auto& v) { s.dynamic_probability = to_double(k, v); }},
      {"seed", [&](auto& k, auto& v) { s.seed = to_u64(k, v); }},
      {"camera",
       [&](auto&, auto& v) {
         if (!cameras_given) s.cameras.clear();
         cameras_given = true;
         s.cameras.push_back(parse_camera(v));
       }},
  };
  apply(file, setters);
  return s;
}

std::string to_text(const SceneSpec& s) {
  std::ostringstream out;
  out << "route_length = " << fmt(s.route_length) << "\n"
      << "heading_deg = " << fmt(s.heading_deg) << "\n"
      << "profile = " << s.profile.to_string() << "\n"
      << "lane_count = " << s.lane_count << "\n"
      << "lane_width = " << fmt(s.lane_width) << "\n"
      << "marking_width = " << fmt(s.marking_width) << "\n"
      << "dash_length = " << fmt(s.dash_length) << "\n"
      << "dash_gap = " << fmt(s.dash_gap) << "\n"
      << "curb_width = " << fmt(s.curb_width) << "\n"
      << "manhole_spacing = " << fmt(s.manhole_spacing) << "\n"
      << "manhole_radius = " << fmt(s.manhole_radius) << "\n"
      << "edge_softness = " << fmt(s.edge_softness) << "\n"
      << "footprint_half_width = " << fmt(s.footprint_half_width) << "\n"
      << "trajectory_spacing = " << fmt(s.trajectory_spacing) << "\n"
      << "frame_spacing = " << fmt(s.frame_spacing) << "\n"
      << "speed = " << fmt(s.speed) << "\n"
      << "lidar_density = " << fmt(s.lidar_density) << "\n"
      << "lidar_sigma = " << fmt(s.lidar_sigma) << "\n"
      << "dynamic_probability = " << fmt(s.dynamic_probability) << "\n"
      << "seed = " << s.seed << "\n";
  for (const auto& c : s.cameras) {
    out << "camera = " << c.id << ' ' << fmt(c.fx) << ' ' << fmt(c.fy) << ' ' << fmt(c.cx) << ' '
        << fmt(c.cy) << ' ' << c.width << ' ' << c.height << ' ' << fmt(c.gain) << ' '
        << fmt(c.gamma);
    const Eigen::Matrix<double, 3, 4> m = c.vehicle_from_camera.matrix().topRows<3>();
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 4; ++k) out << ' ' << fmt(m(r, k));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace roadmesh
