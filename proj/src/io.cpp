#include "handrefine/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace handrefine {

using nlohmann::json;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

const json& require(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::runtime_error(path + ": missing key '" + key + "'");
  return *it;
}

Points3 parse_points3(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::runtime_error(where + ": expected array");
  Points3 out(j.size(), 3);
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != 3)
      throw std::runtime_error(where + ": row " + std::to_string(i) +
                               " is not a 3-vector");
    for (int k = 0; k < 3; ++k) out(i, k) = j[i][k].get<double>();
  }
  return out;
}

json dump_points3(const Points3& p) {
  json j = json::array();
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    j.push_back({p(i, 0), p(i, 1), p(i, 2)});
  return j;
}

MatX parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty())
    throw std::runtime_error(where + ": expected non-empty array");
  const size_t cols = j[0].size();
  MatX out(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw std::runtime_error(where + ": ragged rows");
    for (size_t k = 0; k < cols; ++k) out(i, k) = j[i][k].get<double>();
  }
  return out;
}

json dump_matrix(const MatX& m) {
  json j = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

VecX parse_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::runtime_error(where + ": expected array");
  VecX out(j.size());
  for (size_t i = 0; i < j.size(); ++i) out[i] = j[i].get<double>();
  return out;
}

json dump_vector(const VecX& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

}  // namespace

HandModelData load_model(const std::string& path) {
  const json j = read_json(path);
  HandModelData model;
  model.template_vertices = parse_points3(require(j, "template", path), path + ":template");

  const json& jf = require(j, "faces", path);
  model.faces.resize(jf.size(), 3);
  for (size_t i = 0; i < jf.size(); ++i) {
    if (!jf[i].is_array() || jf[i].size() != 3)
      throw std::runtime_error(path + ":faces: row is not a triangle");
    for (int k = 0; k < 3; ++k) model.faces(i, k) = jf[i][k].get<int>();
  }

  for (const auto& basis : require(j, "shape_basis", path))
    model.shape_basis.push_back(parse_points3(basis, path + ":shape_basis"));

  model.joint_regressor = parse_matrix(require(j, "joint_regressor", path),
                                       path + ":joint_regressor");
  model.skin_weights =
      parse_matrix(require(j, "skin_weights", path), path + ":skin_weights");

  for (const auto& p : require(j, "parents", path))
    model.parents.push_back(p.is_null() ? -1 : p.get<int>());

  const json& tips = require(j, "fingertips", path);
  if (tips.size() != 5)
    throw std::runtime_error(path + ":fingertips: expected 5 vertex ids");
  for (int k = 0; k < 5; ++k) model.fingertip_vertex_ids[k] = tips[k].get<int>();

  if (j.contains("pose_basis"))
    for (const auto& basis : j["pose_basis"])
      model.pose_basis.push_back(parse_points3(basis, path + ":pose_basis"));
  if (j.contains("uv")) model.face_uvs = parse_matrix(j["uv"], path + ":uv");

  try {
    model.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return model;
}

void save_model(const HandModelData& model, const std::string& path) {
  json j;
  j["template"] = dump_points3(model.template_vertices);
  json faces = json::array();
  for (Eigen::Index i = 0; i < model.faces.rows(); ++i)
    faces.push_back({model.faces(i, 0), model.faces(i, 1), model.faces(i, 2)});
  j["faces"] = faces;
  json basis = json::array();
  for (const auto& b : model.shape_basis) basis.push_back(dump_points3(b));
  j["shape_basis"] = basis;
  j["joint_regressor"] = dump_matrix(model.joint_regressor);
  j["skin_weights"] = dump_matrix(model.skin_weights);
  json parents = json::array();
  for (int p : model.parents) parents.push_back(p);
  j["parents"] = parents;
  j["fingertips"] = model.fingertip_vertex_ids;
  if (!model.pose_basis.empty()) {
    json pb = json::array();
    for (const auto& b : model.pose_basis) pb.push_back(dump_points3(b));
    j["pose_basis"] = pb;
  }
  if (model.face_uvs.size() != 0) j["uv"] = dump_matrix(model.face_uvs);
  write_text(path, j.dump());
}

HandParams load_params(const std::string& path) {
  const json j = read_json(path);
  HandParams params;
  params.pose = parse_vector(require(j, "pose", path), path + ":pose");
  params.shape = parse_vector(require(j, "shape", path), path + ":shape");
  const json& cam = require(j, "camera", path);
  const json& t = require(cam, "t", path);
  if (t.size() != 2) throw std::runtime_error(path + ":camera.t: expected 2 reals");
  params.camera.t = Vec2(t[0].get<double>(), t[1].get<double>());
  params.camera.delta = require(cam, "scale", path).get<double>();
  if (!(params.camera.delta > 0.0))
    throw std::runtime_error(path + ":camera.scale: must be > 0");
  return params;
}

void save_params(const HandParams& params, const std::string& path) {
  json j;
  j["pose"] = dump_vector(params.pose);
  j["shape"] = dump_vector(params.shape);
  j["camera"] = {{"t", {params.camera.t.x(), params.camera.t.y()}},
                 {"scale", params.camera.delta}};
  write_text(path, j.dump());
}

StereoRig load_rig(const std::string& path) {
  const json j = read_json(path);
  StereoRig rig;
  const json& r = require(j, "rotation", path);
  if (r.size() != 9)
    throw std::runtime_error(path + ":rotation: expected 9 row-major reals");
  for (int i = 0; i < 9; ++i) rig.rotation(i / 3, i % 3) = r[i].get<double>();
  const json& t = require(j, "translation", path);
  if (t.size() != 3) throw std::runtime_error(path + ":translation: expected 3 reals");
  for (int i = 0; i < 3; ++i) rig.translation[i] = t[i].get<double>();
  rig.focal = require(j, "focal", path).get<double>();
  const json& pp = require(j, "principal_point", path);
  if (pp.size() != 2)
    throw std::runtime_error(path + ":principal_point: expected 2 reals");
  rig.principal_point = Vec2(pp[0].get<double>(), pp[1].get<double>());
  try {
    rig.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return rig;
}

void save_rig(const StereoRig& rig, const std::string& path) {
  json j;
  json r = json::array();
  for (int i = 0; i < 9; ++i) r.push_back(rig.rotation(i / 3, i % 3));
  j["rotation"] = r;
  j["translation"] = {rig.translation.x(), rig.translation.y(), rig.translation.z()};
  j["focal"] = rig.focal;
  j["principal_point"] = {rig.principal_point.x(), rig.principal_point.y()};
  write_text(path, j.dump());
}

StereoWeights load_stereo_weights(const std::string& path) {
  const json j = read_json(path);
  StereoWeights w;
  w.w = parse_vector(require(j, "w", path), path + ":w");
  try {
    w.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return w;
}

void save_stereo_weights(const StereoWeights& w, const std::string& path) {
  json j;
  j["w"] = dump_vector(w.w);
  write_text(path, j.dump());
}

RunConfig load_config(const std::string& path) {
  const json j = read_json(path);
  RunConfig c;
  if (j.contains("eta")) c.refine.eta = j["eta"].get<double>();
  if (j.contains("alpha")) c.refine.alpha = j["alpha"].get<double>();
  if (j.contains("iterations")) c.refine.iterations = j["iterations"].get<int>();
  if (j.contains("warm_start")) c.refine.warm_start = j["warm_start"].get<bool>();
  if (j.contains("weights")) {
    const json& w = j["weights"];
    if (w.contains("lambda1")) c.refine.weights.lambda1 = w["lambda1"].get<double>();
    if (w.contains("lambda2")) c.refine.weights.lambda2 = w["lambda2"].get<double>();
    if (w.contains("lambda3")) c.refine.weights.lambda3 = w["lambda3"].get<double>();
    if (w.contains("lambda4")) c.refine.weights.lambda4 = w["lambda4"].get<double>();
    if (w.contains("lambda5")) c.refine.weights.lambda5 = w["lambda5"].get<double>();
  }
  if (j.contains("raster")) {
    const json& r = j["raster"];
    if (r.contains("width")) c.refine.raster.width = r["width"].get<int>();
    if (r.contains("height")) c.refine.raster.height = r["height"].get<int>();
    if (r.contains("sigma")) c.refine.raster.sigma = r["sigma"].get<double>();
    if (r.contains("dist_cutoff"))
      c.refine.raster.dist_cutoff = r["dist_cutoff"].get<double>();
  }
  if (j.contains("texture_beta")) c.texture_beta = j["texture_beta"].get<double>();
  if (j.contains("slerp_blend")) c.slerp_blend = j["slerp_blend"].get<bool>();
  return c;
}

void save_config(const RunConfig& c, const std::string& path) {
  json j;
  j["eta"] = c.refine.eta;
  j["alpha"] = c.refine.alpha;
  j["iterations"] = c.refine.iterations;
  j["warm_start"] = c.refine.warm_start;
  j["weights"] = {{"lambda1", c.refine.weights.lambda1},
                  {"lambda2", c.refine.weights.lambda2},
                  {"lambda3", c.refine.weights.lambda3},
                  {"lambda4", c.refine.weights.lambda4},
                  {"lambda5", c.refine.weights.lambda5}};
  j["raster"] = {{"width", c.refine.raster.width},
                 {"height", c.refine.raster.height},
                 {"sigma", c.refine.raster.sigma},
                 {"dist_cutoff", c.refine.raster.dist_cutoff}};
  j["texture_beta"] = c.texture_beta;
  j["slerp_blend"] = c.slerp_blend;
  write_text(path, j.dump(2));
}

namespace {

// Reads a PNM header (magic already consumed check), returns w/h and
// leaves the stream at the start of the pixel payload.
void read_pnm_header(std::ifstream& in, const std::string& path,
                     const char* magic, int& width, int& height) {
  std::string tag;
  in >> tag;
  if (tag != magic)
    throw std::runtime_error(path + ": expected " + magic + " header");
  auto next_token = [&](int& out) {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      out = std::stoi(tok);
      return;
    }
    throw std::runtime_error(path + ": truncated header");
  };
  int maxval = 0;
  next_token(width);
  next_token(height);
  next_token(maxval);
  if (width <= 0 || height <= 0)
    throw std::runtime_error(path + ": bad dimensions");
  if (maxval != 255) throw std::runtime_error(path + ": unsupported maxval");
  in.get();  // single whitespace before payload
}

}  // namespace

SilhouetteImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  int w = 0, h = 0;
  read_pnm_header(in, path, "P5", w, h);
  SilhouetteImage img(w, h);
  std::vector<uint8_t> buf(size_t(w) * h);
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error(path + ": truncated pixel data");
  for (size_t i = 0; i < buf.size(); ++i) img.values[i] = buf[i] / 255.0;
  return img;
}

void save_pgm(const SilhouetteImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "P5\n" << image.width << " " << image.height << "\n255\n";
  for (double v : image.values) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.put(static_cast<char>(static_cast<uint8_t>(std::lround(255.0 * c))));
  }
}

RgbImage load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  int w = 0, h = 0;
  read_pnm_header(in, path, "P6", w, h);
  RgbImage img(w, h);
  std::vector<uint8_t> buf(size_t(w) * h * 3);
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw std::runtime_error(path + ": truncated pixel data");
  for (size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = Vec3(buf[3 * i] / 255.0, buf[3 * i + 1] / 255.0,
                         buf[3 * i + 2] / 255.0);
  return img;
}

void save_ppm(const RgbImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  for (const Vec3& p : image.pixels)
    for (int k = 0; k < 3; ++k) {
      const double c = std::clamp(p[k], 0.0, 1.0);
      out.put(static_cast<char>(static_cast<uint8_t>(std::lround(255.0 * c))));
    }
}

TextureMap load_texture(const std::string& path) {
  const RgbImage rgb = load_ppm(path);
  if (rgb.width != rgb.height)
    throw std::runtime_error(path + ": texture must be square");
  TextureMap tex(rgb.width);
  tex.rgb = rgb.pixels;
  const SilhouetteImage w = load_pgm(path + ".w.pgm");
  if (w.width != rgb.width || w.height != rgb.height)
    throw std::runtime_error(path + ": weight map size mismatch");
  for (size_t i = 0; i < tex.weight.size(); ++i)
    tex.weight[i] = w.values[i] > 0.0 ? 1.0 : 0.0;
  return tex;
}

void save_texture(const TextureMap& tex, const std::string& path) {
  RgbImage rgb(tex.resolution, tex.resolution);
  rgb.pixels = tex.rgb;
  save_ppm(rgb, path);
  SilhouetteImage w(tex.resolution, tex.resolution);
  for (size_t i = 0; i < tex.weight.size(); ++i)
    w.values[i] = tex.weight[i] > 0.0 ? 1.0 : 0.0;
  save_pgm(w, path + ".w.pgm");
}

BinaryMask to_mask(const SilhouetteImage& image, double threshold) {
  BinaryMask mask;
  mask.width = image.width;
  mask.height = image.height;
  mask.values.resize(image.values.size());
  for (size_t i = 0; i < image.values.size(); ++i)
    mask.values[i] = image.values[i] >= threshold ? 1 : 0;
  return mask;
}

ObjMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<Vec3> verts;
  std::vector<Vec2> uvs;
  std::vector<Eigen::Vector3i> faces, uv_faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed vertex");
      verts.emplace_back(x, y, z);
    } else if (tag == "vt") {
      double u, v;
      if (!(ls >> u >> v))
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed vt");
      uvs.emplace_back(u, v);
    } else if (tag == "f") {
      Eigen::Vector3i f, ft{-1, -1, -1};
      for (int k = 0; k < 3; ++k) {
        std::string corner;
        if (!(ls >> corner))
          throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                   ": face needs 3 corners");
        const size_t slash = corner.find('/');
        f[k] = std::stoi(corner.substr(0, slash)) - 1;
        if (slash != std::string::npos)
          ft[k] = std::stoi(corner.substr(slash + 1)) - 1;
      }
      std::string extra;
      if (ls >> extra)
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": only triangles supported");
      faces.push_back(f);
      if (ft[0] >= 0) uv_faces.push_back(ft);
    }
  }
  ObjMesh mesh;
  mesh.vertices.resize(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(i) = verts[i];
  mesh.faces.resize(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) mesh.faces.row(i) = faces[i];
  mesh.uvs = uvs;
  if (!uv_faces.empty()) {
    if (uv_faces.size() != faces.size())
      throw std::runtime_error(path + ": mixed textured/untextured faces");
    mesh.uv_faces.resize(uv_faces.size(), 3);
    for (size_t i = 0; i < uv_faces.size(); ++i) mesh.uv_faces.row(i) = uv_faces[i];
  }
  for (Eigen::Index i = 0; i < mesh.faces.rows(); ++i)
    for (int k = 0; k < 3; ++k)
      if (mesh.faces(i, k) < 0 || mesh.faces(i, k) >= mesh.vertices.rows())
        throw std::runtime_error(path + ": face index out of range");
  return mesh;
}

namespace {

// Shortest round-trip double formatting, matching the JSON writers.
std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double parsed = 0.0;
  std::sscanf(buf, "%lf", &parsed);
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    std::sscanf(shorter, "%lf", &parsed);
    if (parsed == v) return shorter;
  }
  return buf;
}

}  // namespace

void save_obj(const ObjMesh& mesh, const std::string& path) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i)
    out << "v " << fmt_double(mesh.vertices(i, 0)) << " "
        << fmt_double(mesh.vertices(i, 1)) << " "
        << fmt_double(mesh.vertices(i, 2)) << "\n";
  for (const Vec2& uv : mesh.uvs)
    out << "vt " << fmt_double(uv.x()) << " " << fmt_double(uv.y()) << "\n";
  const bool textured = mesh.uv_faces.rows() == mesh.faces.rows() && !mesh.uvs.empty();
  for (Eigen::Index i = 0; i < mesh.faces.rows(); ++i) {
    out << "f";
    for (int k = 0; k < 3; ++k) {
      out << " " << mesh.faces(i, k) + 1;
      if (textured) out << "/" << mesh.uv_faces(i, k) + 1;
    }
    out << "\n";
  }
  write_text(path, out.str());
}

void save_obj(const PosedMesh& mesh, const std::string& path, const UVAtlas* atlas) {
  ObjMesh obj;
  obj.vertices = mesh.vertices;
  obj.faces = mesh.faces;
  if (atlas) {
    obj.uv_faces.resize(mesh.faces.rows(), 3);
    for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f)
      for (int k = 0; k < 3; ++k) {
        obj.uv_faces(f, k) = static_cast<int>(obj.uvs.size());
        obj.uvs.push_back(atlas->face_uvs[f][k]);
      }
  }
  save_obj(obj, path);
}

void save_history_csv(const std::vector<LossBreakdown>& history,
                      const std::string& path) {
  std::ostringstream out;
  out << "iteration,sil,v,n,lap,edge,total\n";
  for (size_t i = 0; i < history.size(); ++i)
    out << i << "," << fmt_double(history[i].sil) << "," << fmt_double(history[i].v)
        << "," << fmt_double(history[i].n) << "," << fmt_double(history[i].lap)
        << "," << fmt_double(history[i].edge) << "," << fmt_double(history[i].total)
        << "\n";
  write_text(path, out.str());
}

}  // namespace handrefine
