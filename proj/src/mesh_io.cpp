#include "subfit/mesh_io.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace subfit {

namespace {

std::string lower_ext(const std::string& path) {
  auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (auto& c : ext) c = static_cast<char>(std::tolower(c));
  return ext;
}

void warn(std::vector<std::string>* warnings, const std::string& msg) {
  if (warnings) warnings->push_back(msg);
}

struct ObjData {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

ObjData parse_obj(std::istream& in, std::vector<std::string>* warnings) {
  ObjData d;
  std::string line;
  int lineno = 0;
  bool warned_poly = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z()))
        throw Error(ErrorClass::ParseError, "OBJ line " + std::to_string(lineno) + ": bad vertex");
      d.vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // "i", "i/t", "i//n", "i/t/n" -- only the vertex index matters here.
        size_t slash = tok.find('/');
        std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
        int i = 0;
        try {
          i = std::stoi(head);
        } catch (...) {
          throw Error(ErrorClass::ParseError, "OBJ line " + std::to_string(lineno) + ": bad face index '" + tok + "'");
        }
        if (i == 0)
          throw Error(ErrorClass::ParseError,
                      "OBJ line " + std::to_string(lineno) + ": face index 0 (OBJ indices are 1-based)");
        if (i < 0) i = static_cast<int>(d.vertices.size()) + i + 1;  // relative indexing
        if (i < 1 || i > static_cast<int>(d.vertices.size()))
          throw Error(ErrorClass::ParseError,
                      "OBJ line " + std::to_string(lineno) + ": face index out of range");
        idx.push_back(i - 1);
      }
      if (idx.size() < 3)
        throw Error(ErrorClass::ParseError, "OBJ line " + std::to_string(lineno) + ": face with <3 vertices");
      if (idx.size() > 3 && !warned_poly) {
        warn(warnings, "OBJ contains polygons with >3 vertices; fan-triangulated");
        warned_poly = true;
      }
      for (size_t k = 1; k + 1 < idx.size(); ++k)
        d.faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return d;
}

// ---- PLY ----

enum class PlyType { F32, F64, I8, U8, I16, U16, I32, U32 };

PlyType ply_type(const std::string& s) {
  if (s == "float" || s == "float32") return PlyType::F32;
  if (s == "double" || s == "float64") return PlyType::F64;
  if (s == "char" || s == "int8") return PlyType::I8;
  if (s == "uchar" || s == "uint8") return PlyType::U8;
  if (s == "short" || s == "int16") return PlyType::I16;
  if (s == "ushort" || s == "uint16") return PlyType::U16;
  if (s == "int" || s == "int32") return PlyType::I32;
  if (s == "uint" || s == "uint32") return PlyType::U32;
  throw Error(ErrorClass::ParseError, "PLY: unsupported property type '" + s + "'");
}

size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::F32: return 4;
    case PlyType::F64: return 8;
    case PlyType::I8:
    case PlyType::U8: return 1;
    case PlyType::I16:
    case PlyType::U16: return 2;
    case PlyType::I32:
    case PlyType::U32: return 4;
  }
  return 0;
}

double read_binary_value(std::istream& in, PlyType t) {
  unsigned char buf[8];
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(ply_type_size(t)));
  if (!in) throw Error(ErrorClass::ParseError, "PLY: unexpected end of binary data");
  switch (t) {
    case PlyType::F32: {
      float v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::F64: {
      double v;
      std::memcpy(&v, buf, 8);
      return v;
    }
    case PlyType::I8: return static_cast<signed char>(buf[0]);
    case PlyType::U8: return buf[0];
    case PlyType::I16: {
      std::int16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PlyType::U16: {
      std::uint16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PlyType::I32: {
      std::int32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::U32: {
      std::uint32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::F32;
  bool is_list = false;
  PlyType count_type = PlyType::U8;
};

struct PlyElement {
  std::string name;
  size_t count = 0;
  std::vector<PlyProperty> props;
};

struct PlyData {
  bool binary = false;
  std::vector<PlyElement> elements;
  // Per element, per scalar property: column of values. List properties are
  // stored separately (faces only).
  std::vector<std::vector<std::vector<double>>> scalars;
  std::vector<std::vector<std::vector<int>>> lists;
};

PlyData parse_ply(std::istream& in) {
  PlyData d;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorClass::ParseError, "PLY: empty file");
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw Error(ErrorClass::ParseError, "PLY: missing magic");
  bool have_format = false;
  while (std::getline(in, line)) {
    if (line.size() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
    if (tag == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt == "ascii")
        d.binary = false;
      else if (fmt == "binary_little_endian")
        d.binary = true;
      else
        throw Error(ErrorClass::ParseError, "PLY: unsupported format '" + fmt + "'");
      have_format = true;
    } else if (tag == "element") {
      PlyElement el;
      ls >> el.name >> el.count;
      d.elements.push_back(el);
    } else if (tag == "property") {
      if (d.elements.empty()) throw Error(ErrorClass::ParseError, "PLY: property before element");
      std::string t;
      ls >> t;
      PlyProperty p;
      if (t == "list") {
        std::string ct, it;
        ls >> ct >> it >> p.name;
        p.is_list = true;
        p.count_type = ply_type(ct);
        p.type = ply_type(it);
      } else {
        ls >> p.name;
        p.type = ply_type(t);
      }
      d.elements.back().props.push_back(p);
    } else if (tag == "end_header") {
      break;
    } else {
      throw Error(ErrorClass::ParseError, "PLY: unknown header line '" + tag + "'");
    }
  }
  if (!have_format) throw Error(ErrorClass::ParseError, "PLY: missing format line");

  d.scalars.resize(d.elements.size());
  d.lists.resize(d.elements.size());
  for (size_t e = 0; e < d.elements.size(); ++e) {
    auto& el = d.elements[e];
    d.scalars[e].resize(el.props.size());
    d.lists[e].resize(el.props.size());
    for (size_t r = 0; r < el.count; ++r) {
      if (d.binary) {
        for (size_t p = 0; p < el.props.size(); ++p) {
          const auto& prop = el.props[p];
          if (prop.is_list) {
            int n = static_cast<int>(read_binary_value(in, prop.count_type));
            std::vector<int> list(n);
            for (int k = 0; k < n; ++k) list[k] = static_cast<int>(read_binary_value(in, prop.type));
            d.lists[e][p].insert(d.lists[e][p].end(), list.begin(), list.end());
            d.lists[e][p].push_back(-1);  // row separator
          } else {
            d.scalars[e][p].push_back(read_binary_value(in, prop.type));
          }
        }
      } else {
        std::string row;
        do {
          if (!std::getline(in, row)) throw Error(ErrorClass::ParseError, "PLY: unexpected end of data");
        } while (row.find_first_not_of(" \t\r\n") == std::string::npos);
        std::istringstream rs(row);
        for (size_t p = 0; p < el.props.size(); ++p) {
          const auto& prop = el.props[p];
          if (prop.is_list) {
            int n;
            if (!(rs >> n)) throw Error(ErrorClass::ParseError, "PLY: bad list count");
            for (int k = 0; k < n; ++k) {
              int v;
              if (!(rs >> v)) throw Error(ErrorClass::ParseError, "PLY: bad list entry");
              d.lists[e][p].push_back(v);
            }
            d.lists[e][p].push_back(-1);
          } else {
            double v;
            if (!(rs >> v)) throw Error(ErrorClass::ParseError, "PLY: bad value");
            d.scalars[e][p].push_back(v);
          }
        }
      }
    }
  }
  return d;
}

const PlyElement* find_element(const PlyData& d, const std::string& name, size_t* index) {
  for (size_t i = 0; i < d.elements.size(); ++i) {
    if (d.elements[i].name == name) {
      *index = i;
      return &d.elements[i];
    }
  }
  return nullptr;
}

int find_property(const PlyElement& el, const std::string& name) {
  for (size_t i = 0; i < el.props.size(); ++i)
    if (el.props[i].name == name) return static_cast<int>(i);
  return -1;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorClass::IoError, "cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorClass::IoError, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

MeshFormat format_from_path(const std::string& path) {
  std::string ext = lower_ext(path);
  if (ext == "obj") return MeshFormat::Obj;
  if (ext == "ply") return MeshFormat::Ply;
  throw Error(ErrorClass::InvalidArgument, "cannot infer format from '" + path + "'");
}

TriMesh load_mesh(const std::string& path, MeshFormat format, bool allow_nonmanifold,
                  std::vector<std::string>* warnings) {
  auto in = open_input(path);
  if (format == MeshFormat::Obj) {
    ObjData d = parse_obj(in, warnings);
    if (d.faces.empty()) throw Error(ErrorClass::ParseError, "OBJ has no faces");
    return TriMesh::build(std::move(d.vertices), std::move(d.faces), allow_nonmanifold);
  }
  PlyData d = parse_ply(in);
  size_t ve, fe;
  const PlyElement* vel = find_element(d, "vertex", &ve);
  const PlyElement* fel = find_element(d, "face", &fe);
  if (!vel) throw Error(ErrorClass::ParseError, "PLY: no vertex element");
  if (!fel) throw Error(ErrorClass::ParseError, "PLY: no face element (not a mesh)");
  int px = find_property(*vel, "x"), py = find_property(*vel, "y"), pz = find_property(*vel, "z");
  if (px < 0 || py < 0 || pz < 0) throw Error(ErrorClass::ParseError, "PLY: missing x/y/z");
  std::vector<Vec3> vertices(vel->count);
  for (size_t i = 0; i < vel->count; ++i)
    vertices[i] = Vec3(d.scalars[ve][px][i], d.scalars[ve][py][i], d.scalars[ve][pz][i]);
  int pl = find_property(*fel, "vertex_indices");
  if (pl < 0) pl = find_property(*fel, "vertex_index");
  if (pl < 0 || !fel->props[pl].is_list)
    throw Error(ErrorClass::ParseError, "PLY: face element lacks vertex_indices list");
  std::vector<std::array<int, 3>> faces;
  const auto& flat = d.lists[fe][pl];
  std::vector<int> poly;
  bool warned_poly = false;
  for (int v : flat) {
    if (v >= 0) {
      poly.push_back(v);
      continue;
    }
    if (poly.size() < 3) throw Error(ErrorClass::ParseError, "PLY: face with <3 vertices");
    if (poly.size() > 3 && !warned_poly) {
      warn(warnings, "PLY contains polygons with >3 vertices; fan-triangulated");
      warned_poly = true;
    }
    for (size_t k = 1; k + 1 < poly.size(); ++k) faces.push_back({poly[0], poly[k], poly[k + 1]});
    poly.clear();
  }
  return TriMesh::build(std::move(vertices), std::move(faces), allow_nonmanifold);
}

TriMesh load_mesh(const std::string& path, bool allow_nonmanifold, std::vector<std::string>* warnings) {
  return load_mesh(path, format_from_path(path), allow_nonmanifold, warnings);
}

PointCloud load_point_cloud(const std::string& path) {
  auto in = open_input(path);
  PlyData d = parse_ply(in);
  size_t ve;
  const PlyElement* vel = find_element(d, "vertex", &ve);
  if (!vel) throw Error(ErrorClass::ParseError, "PLY: no vertex element");
  int px = find_property(*vel, "x"), py = find_property(*vel, "y"), pz = find_property(*vel, "z");
  if (px < 0 || py < 0 || pz < 0) throw Error(ErrorClass::ParseError, "PLY: missing x/y/z");
  int nx = find_property(*vel, "nx"), ny = find_property(*vel, "ny"), nz = find_property(*vel, "nz");
  if (nx < 0 || ny < 0 || nz < 0)
    throw Error(ErrorClass::MissingNormals,
                "PLY lacks nx/ny/nz; the IMLS surface requires oriented normals");
  PointCloud c;
  c.points.resize(vel->count);
  c.normals.resize(vel->count);
  for (size_t i = 0; i < vel->count; ++i) {
    c.points[i] = Vec3(d.scalars[ve][px][i], d.scalars[ve][py][i], d.scalars[ve][pz][i]);
    c.normals[i] = Vec3(d.scalars[ve][nx][i], d.scalars[ve][ny][i], d.scalars[ve][nz][i]);
  }
  c.validate();
  return c;
}

void write_mesh(const TriMesh& mesh, const std::string& path, MeshFormat format,
                const std::optional<NormalizeTransform>& undo) {
  auto out = open_output(path);
  auto pos = [&](int i) { return undo ? undo->invert(mesh.vertex(i)) : mesh.vertex(i); };
  char buf[128];
  if (format == MeshFormat::Obj) {
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      Vec3 p = pos(i);
      std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
      out << buf;
    }
    for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  } else {
    out << "ply\nformat ascii 1.0\n";
    out << "element vertex " << mesh.vertex_count() << "\n";
    out << "property float64 x\nproperty float64 y\nproperty float64 z\n";
    out << "element face " << mesh.face_count() << "\n";
    out << "property list uchar int vertex_indices\nend_header\n";
    for (int i = 0; i < mesh.vertex_count(); ++i) {
      Vec3 p = pos(i);
      std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g\n", p.x(), p.y(), p.z());
      out << buf;
    }
    for (const auto& f : mesh.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  if (!out) throw Error(ErrorClass::IoError, "write failed for '" + path + "'");
}

void write_mesh(const TriMesh& mesh, const std::string& path,
                const std::optional<NormalizeTransform>& undo) {
  write_mesh(mesh, path, format_from_path(path), undo);
}

void write_point_cloud(const PointCloud& cloud, const std::string& path,
                       const std::optional<NormalizeTransform>& undo) {
  auto out = open_output(path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float64 x\nproperty float64 y\nproperty float64 z\n";
  out << "property float64 nx\nproperty float64 ny\nproperty float64 nz\nend_header\n";
  char buf[256];
  for (int i = 0; i < cloud.size(); ++i) {
    Vec3 p = undo ? undo->invert(cloud.points[i]) : cloud.points[i];
    const Vec3& n = cloud.normals[i];
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g %.9g %.9g\n", p.x(), p.y(), p.z(), n.x(), n.y(), n.z());
    out << buf;
  }
  if (!out) throw Error(ErrorClass::IoError, "write failed for '" + path + "'");
}

}  // namespace subfit
