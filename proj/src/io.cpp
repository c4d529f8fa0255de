#include "escape/io.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "escape/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "file readers assume a little-endian host");

namespace escape {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& token, double& out) {
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

PointCloud load_xyz(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    PointCloud cloud;
    bool any_normals = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(line);
        if (body.empty() || body[0] == '#') continue;
        const auto tokens = split_ws(body);
        if (tokens.size() != 3 && tokens.size() != 6)
            throw ParseError(line_no, "expected 3 or 6 columns, got " +
                                          std::to_string(tokens.size()));
        std::array<double, 6> v{};
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (!parse_double(tokens[i], v[i]))
                throw ParseError(line_no, "non-numeric value '" + tokens[i] + "'");
        }
        cloud.points.emplace_back(v[0], v[1], v[2]);
        if (tokens.size() == 6) {
            any_normals = true;
            cloud.normals.emplace_back(v[3], v[4], v[5]);
        } else if (any_normals) {
            throw ParseError(line_no, "mixed 3- and 6-column rows");
        }
    }
    if (any_normals && cloud.normals.size() != cloud.points.size())
        throw ParseError(line_no, "mixed 3- and 6-column rows");
    if (cloud.points.empty()) throw EmptyCloud("no points in " + path.string());
    return cloud;
}

struct PlyProperty {
    std::string name;
    std::string type;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

std::size_t scalar_size(const std::string& type) {
    if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
    if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
    if (type == "int" || type == "int32" || type == "uint" || type == "uint32" ||
        type == "float" || type == "float32")
        return 4;
    if (type == "double" || type == "float64" || type == "int64" || type == "uint64") return 8;
    return 0;
}

double read_binary_scalar(std::istream& in, const std::string& type, std::size_t line_no) {
    const std::size_t size = scalar_size(type);
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(size)))
        throw ParseError(line_no, "unexpected end of binary payload");
    if (type == "float" || type == "float32") {
        float f;
        std::memcpy(&f, buf, 4);
        return static_cast<double>(f);
    }
    if (type == "double" || type == "float64") {
        double d;
        std::memcpy(&d, buf, 8);
        return d;
    }
    // integral types are only ever skipped or used as list counts
    std::uint64_t u = 0;
    std::memcpy(&u, buf, size);
    return static_cast<double>(u);
}

PointCloud load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::string {
        if (!std::getline(in, line)) throw ParseError(line_no, "unexpected end of header");
        ++line_no;
        return trim(line);
    };

    if (next_line() != "ply") throw ParseError(line_no, "missing ply magic");

    bool binary = false;
    bool format_seen = false;
    std::vector<PlyElement> elements;
    for (;;) {
        const std::string header = next_line();
        if (header == "end_header") break;
        const auto tokens = split_ws(header);
        if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info") continue;
        if (tokens[0] == "format") {
            if (tokens.size() < 2) throw ParseError(line_no, "malformed format line");
            if (tokens[1] == "ascii")
                binary = false;
            else if (tokens[1] == "binary_little_endian")
                binary = true;
            else
                throw ParseError(line_no, "unsupported format " + tokens[1]);
            format_seen = true;
        } else if (tokens[0] == "element") {
            if (tokens.size() != 3) throw ParseError(line_no, "malformed element line");
            PlyElement el;
            el.name = tokens[1];
            el.count = static_cast<std::size_t>(std::stoull(tokens[2]));
            elements.push_back(el);
        } else if (tokens[0] == "property") {
            if (elements.empty()) throw ParseError(line_no, "property before element");
            PlyProperty prop;
            if (tokens.size() == 5 && tokens[1] == "list") {
                prop.is_list = true;
                prop.type = tokens[2] + ":" + tokens[3];
                prop.name = tokens[4];
            } else if (tokens.size() == 3) {
                prop.type = tokens[1];
                prop.name = tokens[2];
            } else {
                throw ParseError(line_no, "malformed property line");
            }
            elements.back().properties.push_back(prop);
        } else {
            throw ParseError(line_no, "unknown header keyword " + tokens[0]);
        }
    }
    if (!format_seen) throw ParseError(line_no, "missing format line");

    PointCloud cloud;
    for (const PlyElement& el : elements) {
        const bool is_vertex = el.name == "vertex";
        if (is_vertex) {
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
            for (std::size_t p = 0; p < el.properties.size(); ++p) {
                const PlyProperty& prop = el.properties[p];
                const int idx = static_cast<int>(p);
                if (prop.name == "x") ix = idx;
                if (prop.name == "y") iy = idx;
                if (prop.name == "z") iz = idx;
                if (prop.name == "nx") inx = idx;
                if (prop.name == "ny") iny = idx;
                if (prop.name == "nz") inz = idx;
            }
            if (ix < 0 || iy < 0 || iz < 0)
                throw ParseError(line_no, "vertex element lacks x, y, z");
            for (int c : {ix, iy, iz}) {
                const std::string& t = el.properties[c].type;
                if (t != "float" && t != "float32" && t != "double" && t != "float64")
                    throw ParseError(line_no, "coordinate property must be float32 or float64");
            }
            const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;

            std::vector<double> values(el.properties.size());
            for (std::size_t i = 0; i < el.count; ++i) {
                if (binary) {
                    for (std::size_t p = 0; p < el.properties.size(); ++p) {
                        const PlyProperty& prop = el.properties[p];
                        if (prop.is_list)
                            throw ParseError(line_no, "list property in vertex element");
                        values[p] = read_binary_scalar(in, prop.type, line_no);
                    }
                } else {
                    const std::string row = next_line();
                    const auto tokens = split_ws(row);
                    if (tokens.size() < el.properties.size())
                        throw ParseError(line_no, "short vertex row");
                    for (std::size_t p = 0; p < el.properties.size(); ++p) {
                        if (!parse_double(tokens[p], values[p]))
                            throw ParseError(line_no, "non-numeric value '" + tokens[p] + "'");
                    }
                }
                cloud.points.emplace_back(values[ix], values[iy], values[iz]);
                if (with_normals)
                    cloud.normals.emplace_back(values[inx], values[iny], values[inz]);
            }
        } else {
            // skip foreign elements
            for (std::size_t i = 0; i < el.count; ++i) {
                if (binary) {
                    for (const PlyProperty& prop : el.properties) {
                        if (prop.is_list) {
                            const auto colon = prop.type.find(':');
                            const std::string count_type = prop.type.substr(0, colon);
                            const std::string item_type = prop.type.substr(colon + 1);
                            const double cnt = read_binary_scalar(in, count_type, line_no);
                            for (std::size_t j = 0; j < static_cast<std::size_t>(cnt); ++j)
                                read_binary_scalar(in, item_type, line_no);
                        } else {
                            read_binary_scalar(in, prop.type, line_no);
                        }
                    }
                } else {
                    next_line();
                }
            }
        }
    }
    if (cloud.points.empty()) throw EmptyCloud("no points in " + path.string());
    return cloud;
}

void save_xyz(const PointCloud& cloud, const std::filesystem::path& path) {
    if (cloud.has_normals())
        std::cerr << "warning: xyz format drops normals (" << path.string() << ")\n";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[96];
    for (const Vec3& p : cloud.points) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void save_ply(const PointCloud& cloud, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << cloud.size() << "\n";
    out << "property float64 x\nproperty float64 y\nproperty float64 z\n";
    if (cloud.has_normals())
        out << "property float64 nx\nproperty float64 ny\nproperty float64 nz\n";
    out << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        out.write(reinterpret_cast<const char*>(cloud.points[i].data()), 3 * sizeof(double));
        if (cloud.has_normals())
            out.write(reinterpret_cast<const char*>(cloud.normals[i].data()),
                      3 * sizeof(double));
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".ply" ? CloudFormat::ply : CloudFormat::xyz;
}

PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    PointCloud cloud =
        format == CloudFormat::xyz ? load_xyz(path) : load_ply(path);
    return cloud;
}

PointCloud load_cloud(const std::filesystem::path& path) {
    return load_cloud(path, format_from_path(path));
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                CloudFormat format) {
    if (format == CloudFormat::xyz)
        save_xyz(cloud, path);
    else
        save_ply(cloud, path);
}

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
    save_cloud(cloud, path, format_from_path(path));
}

}  // namespace escape
