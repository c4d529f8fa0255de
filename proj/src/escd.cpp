#include "escape/escd.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "escape/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "ESCD I/O assumes a little-endian host");

namespace escape {

namespace {

constexpr char kMagic[4] = {'E', 'S', 'C', 'D'};
constexpr std::uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* data, std::size_t size) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void read_bytes(std::ifstream& in, void* data, std::size_t size, std::size_t& offset,
                const std::filesystem::path& path) {
    if (!in.read(static_cast<char*>(data), static_cast<std::streamsize>(size)))
        throw IoError("truncated ESCD file " + path.string() + " at byte offset " +
                      std::to_string(offset + static_cast<std::size_t>(in.gcount())));
    offset += size;
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::string token;
    for (char c : line) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!token.empty()) out.push_back(token);
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    if (!token.empty()) out.push_back(token);
    return out;
}

}  // namespace

void write_escd(const DistanceMatrix& matrix, const std::filesystem::path& path) {
    matrix.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());

    write_bytes(out, kMagic, 4);
    const std::uint32_t version = kVersion;
    const std::uint32_t n = static_cast<std::uint32_t>(matrix.rows);
    const std::uint32_t k = static_cast<std::uint32_t>(matrix.cols);
    write_bytes(out, &version, 4);
    write_bytes(out, &n, 4);
    write_bytes(out, &k, 4);
    for (const Vec3& a : matrix.anchors.anchors) write_bytes(out, a.data(), 3 * sizeof(double));
    write_bytes(out, matrix.values.data(), matrix.values.size() * sizeof(double));
    if (!out) throw IoError("write failed for " + path.string());
}

DistanceMatrix read_escd(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    std::size_t offset = 0;
    char magic[4];
    read_bytes(in, magic, 4, offset, path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError(1, "bad ESCD magic in " + path.string());

    std::uint32_t version = 0, n = 0, k = 0;
    read_bytes(in, &version, 4, offset, path);
    if (version != kVersion)
        throw ParseError(1, "unsupported ESCD version " + std::to_string(version));
    read_bytes(in, &n, 4, offset, path);
    read_bytes(in, &k, 4, offset, path);
    if (k < 1) throw ParseError(1, "ESCD with zero anchors");

    DistanceMatrix out;
    out.rows = static_cast<int>(n);
    out.cols = static_cast<int>(k);
    out.anchors.anchors.resize(k);
    for (std::uint32_t j = 0; j < k; ++j)
        read_bytes(in, out.anchors.anchors[j].data(), 3 * sizeof(double), offset, path);
    out.values.resize(static_cast<std::size_t>(n) * k);
    if (!out.values.empty())
        read_bytes(in, out.values.data(), out.values.size() * sizeof(double), offset, path);
    out.validate();
    return out;
}

void write_escd_csv(const DistanceMatrix& matrix, const std::filesystem::path& path) {
    matrix.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "# escd v1 n=" << matrix.rows << " k=" << matrix.cols << "\n";
    char buf[96];
    for (const Vec3& a : matrix.anchors.anchors) {
        std::snprintf(buf, sizeof(buf), "A %.17g %.17g %.17g\n", a.x(), a.y(), a.z());
        out << buf;
    }
    for (int i = 0; i < matrix.rows; ++i) {
        for (int j = 0; j < matrix.cols; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", matrix.at(i, j));
            out << buf << (j + 1 < matrix.cols ? "," : "");
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

DistanceMatrix read_escd_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(1, "empty ESCD csv");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    int n = -1, k = -1;
    {
        std::istringstream iss(line);
        std::string hash, name, v;
        iss >> hash >> name >> v;
        if (hash != "#" || name != "escd" || v != "v1")
            throw ParseError(1, "bad ESCD csv header");
        std::string token;
        while (iss >> token) {
            if (token.rfind("n=", 0) == 0) n = std::stoi(token.substr(2));
            if (token.rfind("k=", 0) == 0) k = std::stoi(token.substr(2));
        }
        if (n < 0 || k < 1) throw ParseError(1, "ESCD csv header missing n or k");
    }

    DistanceMatrix out;
    out.rows = n;
    out.cols = k;
    out.anchors.anchors.reserve(k);
    out.values.reserve(static_cast<std::size_t>(n) * k);

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tokens = split_row(line);
        if (tokens.empty()) continue;
        if (tokens[0] == "A") {
            if (tokens.size() != 4) throw ParseError(line_no, "anchor line needs 3 values");
            out.anchors.anchors.emplace_back(std::stod(tokens[1]), std::stod(tokens[2]),
                                             std::stod(tokens[3]));
        } else {
            if (static_cast<int>(tokens.size()) != k)
                throw ParseError(line_no, "distance row needs k values");
            for (const std::string& t : tokens) out.values.push_back(std::stod(t));
        }
    }
    if (out.anchors.k() != k) throw ParseError(line_no, "anchor count does not match header");
    if (out.values.size() != static_cast<std::size_t>(n) * k)
        throw ParseError(line_no, "row count does not match header");
    out.validate();
    return out;
}

void write_escd_auto(const DistanceMatrix& matrix, const std::filesystem::path& path) {
    if (path.extension() == ".csv")
        write_escd_csv(matrix, path);
    else
        write_escd(matrix, path);
}

DistanceMatrix read_escd_auto(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return read_escd_csv(path);
    return read_escd(path);
}

}  // namespace escape
