#include "roadmesh/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "roadmesh/config.hpp"

namespace roadmesh {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno));
  return f;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return in;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

/// Writes rows with libpng; `setup` configures the header (and palette).
template <typename Setup>
void write_png(const fs::path& path, int width, int height,
               const std::vector<std::vector<std::uint8_t>>& rows, Setup&& setup) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FilePtr f = open_file(path, "wb");
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  if (!png) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot encode '" + path.string() + "': " + error);
  }
  png_init_io(png, f.get());
  setup(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height));
  png_write_info(png, info);
  for (const auto& row : rows) png_write_row(png, row.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int color_type = 0;
  int channels = 0;
  std::vector<std::vector<std::uint8_t>> rows;
};

/// Decodes to 8-bit samples. Paletted images keep their indices unless
/// `expand_palette` is set.
DecodedPng read_png(const fs::path& path, bool expand_palette) {
  FilePtr f = open_file(path, "rb");
  std::uint8_t sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("'" + path.string() + "' is not a PNG file");
  }
  std::string error;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, png_warn);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  DecodedPng out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("cannot decode '" + path.string() + "': " + error);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (bit_depth < 8) png_set_packing(png);
  if (out.color_type == PNG_COLOR_TYPE_PALETTE && expand_palette) png_set_palette_to_rgb(png);
  if (out.color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8 && expand_palette) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.rows.assign(static_cast<std::size_t>(out.height), std::vector<std::uint8_t>(rowbytes));
  std::vector<png_bytep> ptrs;
  for (auto& r : out.rows) ptrs.push_back(r.data());
  png_read_image(png, ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  return tok;
}

double parse_double(const std::string& s, const fs::path& path, int line) {
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return d;
  } catch (const std::logic_error&) {
    throw InvalidInput(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
}

std::string matrix34_text(const Eigen::Isometry3d& T) {
  std::string out;
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 4; ++k) {
      if (!out.empty()) out += ' ';
      out += fmt(T.matrix()(r, k));
    }
  }
  return out;
}

Eigen::Isometry3d matrix34_from(const std::vector<std::string>& tok, std::size_t first,
                                const fs::path& path, int line) {
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 4; ++k) {
      T.matrix()(r, k) = parse_double(tok[first + static_cast<std::size_t>(4 * r + k)], path, line);
    }
  }
  return T;
}

}  // namespace

const Palette& semantic_palette() {
  static const Palette palette = [] {
    Palette p{};
    p[0] = {255, 255, 255};  // lane marking
    p[1] = {255, 128, 0};    // curb
    p[2] = {0, 0, 255};      // manhole
    p[3] = {128, 64, 128};   // road
    p[4] = {0, 128, 0};      // background
    for (int i = kFirstDynamicLabel; i < 255; ++i) p[static_cast<std::size_t>(i)] = {255, 0, 0};
    p[255] = {0, 0, 0};
    return p;
  }();
  return palette;
}

// PNG ------------------------------------------------------------------------

void write_png_rgb(const fs::path& path, const RgbImage& image) {
  if (image.channels != 3) throw InvalidInput("write_png_rgb: image must have 3 channels");
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(image.height));
  for (int y = 0; y < image.height; ++y) {
    auto& row = rows[static_cast<std::size_t>(y)];
    row.resize(static_cast<std::size_t>(image.width) * 3);
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) row[static_cast<std::size_t>(3 * x + c)] = to_byte(image(x, y, c));
    }
  }
  write_png(path, image.width, image.height, rows, [](png_structp png, png_infop info, png_uint_32 w, png_uint_32 h) {
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  });
}

RgbImage read_png_rgb(const fs::path& path) {
  const DecodedPng d = read_png(path, true);
  RgbImage img(d.width, d.height, 3, 0.0);
  for (int y = 0; y < d.height; ++y) {
    const auto& row = d.rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < d.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const int src = d.channels >= 3 ? c : 0;
        img(x, y, c) = row[static_cast<std::size_t>(x * d.channels + src)] / 255.0;
      }
    }
  }
  return img;
}

void write_png_indexed(const fs::path& path, const LabelImage& labels, const Palette& palette) {
  if (labels.channels != 1) throw InvalidInput("write_png_indexed: labels must have 1 channel");
  std::vector<std::vector<std::uint8_t>> rows(static_cast<std::size_t>(labels.height));
  for (int y = 0; y < labels.height; ++y) {
    rows[static_cast<std::size_t>(y)].assign(labels.pixels.begin() + static_cast<std::ptrdiff_t>(labels.index(0, y)),
                                             labels.pixels.begin() + static_cast<std::ptrdiff_t>(labels.index(0, y) + labels.width));
  }
  write_png(path, labels.width, labels.height, rows, [&palette](png_structp png, png_infop info, png_uint_32 w, png_uint_32 h) {
    png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::array<png_color, 256> colors{};
    for (std::size_t i = 0; i < 256; ++i) colors[i] = {palette[i][0], palette[i][1], palette[i][2]};
    png_set_PLTE(png, info, colors.data(), 256);
  });
}

LabelImage read_png_indexed(const fs::path& path) {
  const DecodedPng d = read_png(path, false);
  if (d.channels != 1) throw IoError("'" + path.string() + "' is not a paletted or gray PNG");
  LabelImage img(d.width, d.height, 1, 0);
  for (int y = 0; y < d.height; ++y) {
    std::copy(d.rows[static_cast<std::size_t>(y)].begin(),
              d.rows[static_cast<std::size_t>(y)].begin() + d.width,
              img.pixels.begin() + static_cast<std::ptrdiff_t>(img.index(0, y)));
  }
  return img;
}

// Trajectory -------------------------------------------------------------------

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  out << "t,x,y,z,qw,qx,qy,qz\n";
  for (const auto& p : traj.poses()) {
    out << fmt(p.t) << ',' << fmt(p.position.x()) << ',' << fmt(p.position.y()) << ','
        << fmt(p.position.z()) << ',' << fmt(p.orientation.w()) << ',' << fmt(p.orientation.x())
        << ',' << fmt(p.orientation.y()) << ',' << fmt(p.orientation.z()) << '\n';
  }
}

Trajectory read_trajectory_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path.string() + ": empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y,z,qw,qx,qy,qz") {
    throw InvalidInput(path.string() + ": expected header t,x,y,z,qw,qx,qy,qz");
  }
  std::vector<Pose> poses;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::stringstream ss(line);
    for (std::string t; std::getline(ss, t, ',');) tok.push_back(t);
    if (tok.size() != 8) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": expected 8 fields");
    }
    double v[8];
    for (int k = 0; k < 8; ++k) v[k] = parse_double(tok[static_cast<std::size_t>(k)], path, lineno);
    Pose p;
    p.t = v[0];
    p.position = Eigen::Vector3d(v[1], v[2], v[3]);
    p.orientation = Eigen::Quaterniond(v[4], v[5], v[6], v[7]);
    poses.push_back(p);
  }
  return Trajectory(std::move(poses));
}

// Cameras ----------------------------------------------------------------------

void write_cameras_txt(const fs::path& path, const std::vector<CameraSpec>& cameras) {
  auto out = open_out(path);
  for (const auto& c : cameras) {
    out << c.id << ' ' << fmt(c.fx) << ' ' << fmt(c.fy) << ' ' << fmt(c.cx) << ' ' << fmt(c.cy)
        << ' ' << c.width << ' ' << c.height << ' ' << fmt(c.gain) << ' ' << fmt(c.gamma) << ' '
        << matrix34_text(c.vehicle_from_camera) << '\n';
  }
}

std::vector<CameraSpec> read_cameras_txt(const fs::path& path) {
  auto in = open_in(path);
  std::vector<CameraSpec> cams;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() != 21) {
      throw InvalidInput(path.string() + ":" + std::to_string(lineno) + ": expected 21 fields");
    }
    CameraSpec c;
    c.id = static_cast<int>(parse_double(tok[0], path, lineno));
    c.fx = parse_double(tok[1], path, lineno);
    c.fy = parse_double(tok[2], path, lineno);
    c.cx = parse_double(tok[3], path, lineno);
    c.cy = parse_double(tok[4], path, lineno);
    c.width = static_cast<int>(parse_double(tok[5], path, lineno));
    c.height = static_cast<int>(parse_double(tok[6], path, lineno));
    c.gain = parse_double(tok[7], path, lineno);
    c.gamma = parse_double(tok[8], path, lineno);
    c.vehicle_from_camera = matrix34_from(tok, 9, path, lineno);
    c.validate();
    cams.push_back(c);
  }
  return cams;
}

// PLY / OBJ --------------------------------------------------------------------

void write_lidar_ply(const fs::path& path, const LidarCloud& cloud) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    out << fmt(cloud.points(0, i)) << ' ' << fmt(cloud.points(1, i)) << ' '
        << fmt(cloud.points(2, i)) << '\n';
  }
}

namespace {

struct PlyHeader {
  long vertices = 0;
  long faces = 0;
  std::vector<std::string> vertex_props;
};

PlyHeader read_ply_header(std::istream& in, const fs::path& path) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0) {
    throw InvalidInput(path.string() + ": not a PLY file");
  }
  PlyHeader h;
  std::string current;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment") continue;
    if (tok[0] == "end_header") return h;
    if (tok[0] == "format" && (tok.size() < 2 || tok[1] != "ascii")) {
      throw InvalidInput(path.string() + ": only ASCII PLY is supported");
    }
    if (tok[0] == "element" && tok.size() == 3) {
      current = tok[1];
      const long n = std::stol(tok[2]);
      if (current == "vertex") h.vertices = n;
      else if (current == "face") h.faces = n;
    }
    if (tok[0] == "property" && current == "vertex") h.vertex_props.push_back(tok.back());
  }
  throw InvalidInput(path.string() + ": missing end_header");
}

}  // namespace

LidarCloud read_lidar_ply(const fs::path& path) {
  const PlyVertexData d = read_mesh_ply(path);
  LidarCloud cloud;
  cloud.points = d.positions;
  cloud.validate();
  return cloud;
}

void write_mesh_ply(const fs::path& path, const RoadMesh& mesh, const Eigen::VectorXd& z,
                    const Eigen::MatrixXd& rgb, const std::vector<std::uint8_t>& labels) {
  const Eigen::Index n = mesh.vertex_count();
  if (z.size() != n || rgb.cols() != n || rgb.rows() != 3 || labels.size() != static_cast<std::size_t>(n)) {
    throw InvalidInput("write_mesh_ply: attribute sizes do not match the mesh");
  }
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << n
      << "\nproperty double x\nproperty double y\nproperty double z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         "property uchar semantic\nelement face "
      << mesh.faces.size() << "\nproperty list uchar int vertex_indices\nend_header\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << fmt(mesh.xy(0, i)) << ' ' << fmt(mesh.xy(1, i)) << ' ' << fmt(z[i]) << ' '
        << int(to_byte(rgb(0, i))) << ' ' << int(to_byte(rgb(1, i))) << ' '
        << int(to_byte(rgb(2, i))) << ' ' << int(labels[static_cast<std::size_t>(i)]) << '\n';
  }
  for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

PlyVertexData read_mesh_ply(const fs::path& path) {
  auto in = open_in(path);
  const PlyHeader h = read_ply_header(in, path);
  auto find = [&h](const char* name) -> int {
    const auto it = std::find(h.vertex_props.begin(), h.vertex_props.end(), name);
    return it == h.vertex_props.end() ? -1 : static_cast<int>(it - h.vertex_props.begin());
  };
  const int ix = find("x"), iy = find("y"), iz = find("z");
  const int ir = find("red"), ig = find("green"), ib = find("blue"), is = find("semantic");
  if (ix < 0 || iy < 0 || iz < 0) throw InvalidInput(path.string() + ": missing x/y/z properties");
  PlyVertexData d;
  d.positions.resize(3, h.vertices);
  if (ir >= 0 && ig >= 0 && ib >= 0) d.rgb.resize(3, h.vertices);
  std::string line;
  for (long i = 0; i < h.vertices; ++i) {
    if (!std::getline(in, line)) throw InvalidInput(path.string() + ": truncated vertex list");
    const auto tok = split_ws(line);
    if (tok.size() != h.vertex_props.size()) throw InvalidInput(path.string() + ": bad vertex line");
    const int lineno = static_cast<int>(i);
    d.positions.col(i) << parse_double(tok[static_cast<std::size_t>(ix)], path, lineno),
        parse_double(tok[static_cast<std::size_t>(iy)], path, lineno),
        parse_double(tok[static_cast<std::size_t>(iz)], path, lineno);
    if (d.rgb.size() > 0) {
      d.rgb.col(i) << parse_double(tok[static_cast<std::size_t>(ir)], path, lineno) / 255.0,
          parse_double(tok[static_cast<std::size_t>(ig)], path, lineno) / 255.0,
          parse_double(tok[static_cast<std::size_t>(ib)], path, lineno) / 255.0;
    }
    if (is >= 0) d.labels.push_back(static_cast<std::uint8_t>(std::stoi(tok[static_cast<std::size_t>(is)])));
  }
  for (long i = 0; i < h.faces; ++i) {
    if (!std::getline(in, line)) throw InvalidInput(path.string() + ": truncated face list");
    const auto tok = split_ws(line);
    if (tok.size() != 4 || tok[0] != "3") throw InvalidInput(path.string() + ": only triangles are supported");
    d.faces.emplace_back(std::stoi(tok[1]), std::stoi(tok[2]), std::stoi(tok[3]));
  }
  return d;
}

void write_mesh_obj(const fs::path& path, const RoadMesh& mesh, const Eigen::VectorXd& z) {
  if (z.size() != mesh.vertex_count()) throw InvalidInput("write_mesh_obj: z size mismatch");
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < mesh.vertex_count(); ++i) {
    out << "v " << fmt(mesh.xy(0, i)) << ' ' << fmt(mesh.xy(1, i)) << ' ' << fmt(z[i]) << '\n';
  }
  for (const auto& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

// Scenes -----------------------------------------------------------------------

namespace {

std::string frame_name(int camera_id, int k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d_%05d.png", camera_id, k);
  return buf;
}

}  // namespace

void write_scene(const fs::path& dir, const GroundTruthScene& scene) {
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "labels");
  write_trajectory_csv(dir / "trajectory.csv", scene.data.trajectory);
  write_cameras_txt(dir / "cameras.txt", scene.rig);
  write_lidar_ply(dir / "lidar.ply", scene.data.lidar);
  write_text_file(dir / "spec.txt", to_text(scene.spec));
  auto out = open_out(dir / "frames.csv");
  out << "camera_id,k,traj_index,world_from_camera\n";
  std::map<int, int> counter;
  for (const auto& f : scene.data.frames) {
    const int k = counter[f.camera_id]++;
    const std::string name = frame_name(f.camera_id, k);
    write_png_rgb(dir / "frames" / name, f.rgb);
    write_png_indexed(dir / "labels" / name, f.sem_labels, semantic_palette());
    out << f.camera_id << ',' << k << ',' << f.traj_index << ',' << matrix34_text(f.world_from_camera)
        << '\n';
  }
}

LoadedScene read_scene(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("scene directory '" + dir.string() + "' not found");
  LoadedScene s;
  s.data.trajectory = read_trajectory_csv(dir / "trajectory.csv");
  s.rig = read_cameras_txt(dir / "cameras.txt");
  for (const auto& c : s.rig) s.data.cameras.push_back(c.camera());
  s.data.lidar = read_lidar_ply(dir / "lidar.ply");
  auto in = open_in(dir / "frames.csv");
  std::string line;
  std::getline(in, line);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> head;
    std::stringstream ss(line);
    for (int k = 0; k < 3; ++k) {
      std::string t;
      if (!std::getline(ss, t, ',')) throw InvalidInput("frames.csv:" + std::to_string(lineno) + ": too few fields");
      head.push_back(t);
    }
    std::string rest;
    std::getline(ss, rest);
    const auto tok = split_ws(rest);
    if (tok.size() != 12) throw InvalidInput("frames.csv:" + std::to_string(lineno) + ": expected 12 pose numbers");
    Frame f;
    f.camera_id = static_cast<int>(parse_double(head[0], dir / "frames.csv", lineno));
    const int k = static_cast<int>(parse_double(head[1], dir / "frames.csv", lineno));
    f.traj_index = static_cast<int>(parse_double(head[2], dir / "frames.csv", lineno));
    f.world_from_camera = matrix34_from(tok, 0, dir / "frames.csv", lineno);
    const std::string name = frame_name(f.camera_id, k);
    f.rgb = read_png_rgb(dir / "frames" / name);
    f.sem_labels = read_png_indexed(dir / "labels" / name);
    s.data.frames.push_back(std::move(f));
  }
  s.data.validate();
  return s;
}

// Checkpoints ------------------------------------------------------------------

namespace {

fs::path header_path(const fs::path& path) {
  fs::path h = path;
  h += ".txt";
  return h;
}

const char* color_model_name(ColorModel m) {
  switch (m) {
    case ColorModel::PerCameraMlp: return "per_camera_mlp";
    case ColorModel::SharedMlpEmbedding: return "shared_mlp_embedding";
    case ColorModel::DirectRgb: return "direct_rgb";
  }
  return "per_camera_mlp";
}

ColorModel color_model_from(const std::string& s) {
  if (s == "per_camera_mlp") return ColorModel::PerCameraMlp;
  if (s == "shared_mlp_embedding") return ColorModel::SharedMlpEmbedding;
  if (s == "direct_rgb") return ColorModel::DirectRgb;
  throw InvalidInput("unknown color model '" + s + "'");
}

void write_le_doubles(std::ostream& out, const double* data, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto bits = __builtin_bswap64(std::bit_cast<std::uint64_t>(data[i]));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
}

void read_le_doubles(std::istream& in, double* data, std::size_t n) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if constexpr (std::endian::native != std::endian::little) {
    for (std::size_t i = 0; i < n; ++i) {
      data[i] = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(data[i])));
    }
  }
}

}  // namespace

void save_checkpoint(const fs::path& path, ModelParams& params, const CheckpointMeta& meta) {
  std::ostringstream header;
  header << "EMIE1\n"
         << "format little_endian_float64\n"
         << "vertex_count " << params.vertex_count() << '\n'
         << "edge_length " << fmt(meta.edge_length) << '\n'
         << "half_width " << fmt(meta.half_width) << '\n'
         << "color_model " << color_model_name(params.options.color_model) << '\n'
         << "elevation_mlp " << (params.options.elevation_mlp ? 1 : 0) << '\n'
         << "pe_bbox " << fmt(params.pe.bbox().min().x()) << ' ' << fmt(params.pe.bbox().min().y())
         << ' ' << fmt(params.pe.bbox().max().x()) << ' ' << fmt(params.pe.bbox().max().y()) << '\n'
         << "cameras";
  for (int id : params.camera_ids) header << ' ' << id;
  header << '\n';
  for (const auto& [k, v] : meta.extra) header << "meta " << k << ' ' << v << '\n';
  auto tensors = params.tensors();
  header << "tensors " << tensors.size() << '\n';
  std::size_t offset = 0;
  for (const auto& t : tensors) {
    header << t.name << ' ' << t.rows << ' ' << t.cols << ' ' << offset << '\n';
    offset += static_cast<std::size_t>(t.rows * t.cols) * sizeof(double);
  }
  auto out = open_out(path);
  for (const auto& t : tensors) write_le_doubles(out, t.data, static_cast<std::size_t>(t.rows * t.cols));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
  write_text_file(header_path(path), header.str());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::istringstream header(read_text_file(header_path(path)));
  std::string line;
  if (!std::getline(header, line) || line != "EMIE1") {
    throw InvalidInput(header_path(path).string() + ": missing EMIE1 magic");
  }
  Checkpoint cp;
  ModelOptions options;
  Eigen::AlignedBox2d bbox;
  std::vector<int> cameras;
  struct Entry {
    std::string name;
    Eigen::Index rows, cols;
    std::size_t offset;
  };
  std::vector<Entry> entries;
  while (std::getline(header, line)) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    const std::string& key = tok[0];
    if (key == "format") {
      if (tok.size() != 2 || tok[1] != "little_endian_float64") throw InvalidInput("unsupported checkpoint format");
    } else if (key == "vertex_count") {
      cp.meta.vertex_count = std::stol(tok.at(1));
    } else if (key == "edge_length") {
      cp.meta.edge_length = std::stod(tok.at(1));
    } else if (key == "half_width") {
      cp.meta.half_width = std::stod(tok.at(1));
    } else if (key == "color_model") {
      options.color_model = color_model_from(tok.at(1));
    } else if (key == "elevation_mlp") {
      options.elevation_mlp = tok.at(1) == "1";
    } else if (key == "pe_bbox") {
      bbox = Eigen::AlignedBox2d(Eigen::Vector2d(std::stod(tok.at(1)), std::stod(tok.at(2))),
                                 Eigen::Vector2d(std::stod(tok.at(3)), std::stod(tok.at(4))));
    } else if (key == "cameras") {
      for (std::size_t i = 1; i < tok.size(); ++i) cameras.push_back(std::stoi(tok[i]));
    } else if (key == "meta") {
      std::string value = line.substr(line.find(tok.at(1)) + tok[1].size());
      const auto b = value.find_first_not_of(' ');
      cp.meta.extra[tok.at(1)] = b == std::string::npos ? "" : value.substr(b);
    } else if (key == "tensors") {
      const long n = std::stol(tok.at(1));
      for (long i = 0; i < n; ++i) {
        if (!std::getline(header, line)) throw InvalidInput("checkpoint header: truncated tensor table");
        const auto t = split_ws(line);
        if (t.size() != 4) throw InvalidInput("checkpoint header: bad tensor line '" + line + "'");
        entries.push_back({t[0], std::stol(t[1]), std::stol(t[2]), std::stoul(t[3])});
      }
    } else {
      throw InvalidInput("checkpoint header: unknown key '" + key + "'");
    }
  }
  if (cameras.empty()) throw InvalidInput("checkpoint header lists no cameras");
  cp.params = init_model_params(bbox, cp.meta.vertex_count, cameras, options, 0);
  auto tensors = cp.params.tensors();
  if (tensors.size() != entries.size()) throw InvalidInput("checkpoint tensor count mismatch");
  auto in = open_in(path);
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto& e = entries[k];
    auto& t = tensors[k];
    if (e.name != t.name || e.rows != t.rows || e.cols != t.cols) {
      throw InvalidInput("checkpoint tensor '" + e.name + "' does not match the model layout");
    }
    in.seekg(static_cast<std::streamoff>(e.offset));
    read_le_doubles(in, t.data, static_cast<std::size_t>(t.rows * t.cols));
    if (!in) throw IoError("'" + path.string() + "' is truncated");
  }
  return cp;
}

// Misc -------------------------------------------------------------------------

std::string read_text_file(const fs::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace roadmesh
