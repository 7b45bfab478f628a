#include "polyext/io.hpp"

#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "polyext/errors.hpp"

namespace polyext::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open '" + tmp + "' for writing");
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::remove(tmp.c_str());
            throw ValidationError("write to '" + tmp + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw ValidationError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

template <class T>
void put(std::string& s, T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    s.append(b, sizeof(T));
}

template <class T>
T get(const std::string& s, std::size_t& pos) {
    if (pos + sizeof(T) > s.size()) throw ValidationError("truncated log-field dump");
    T v;
    std::memcpy(&v, s.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

}  // namespace

std::string encode_log_field(const polymer::LogWeightField& f, std::int64_t N) {
    std::string s = "PXLW";
    put<std::uint32_t>(s, 1);
    for (std::int64_t v : {N, f.time_lo, f.time_hi, f.window.x0, f.window.x1, f.window.y0, f.window.y1})
        put<std::int64_t>(s, v);
    put<double>(s, f.log_offset);
    for (double v : f.values) put<double>(s, v);
    return s;
}

polymer::LogWeightField decode_log_field(const std::string& bytes, std::int64_t* N) {
    if (bytes.size() < 4 || bytes.compare(0, 4, "PXLW") != 0) throw ValidationError("not a log-field dump");
    std::size_t pos = 4;
    if (get<std::uint32_t>(bytes, pos) != 1) throw ValidationError("unsupported log-field dump version");
    polymer::LogWeightField f;
    std::int64_t n = get<std::int64_t>(bytes, pos);
    if (N) *N = n;
    f.time_lo = get<std::int64_t>(bytes, pos);
    f.time_hi = get<std::int64_t>(bytes, pos);
    f.window.x0 = get<std::int64_t>(bytes, pos);
    f.window.x1 = get<std::int64_t>(bytes, pos);
    f.window.y0 = get<std::int64_t>(bytes, pos);
    f.window.y1 = get<std::int64_t>(bytes, pos);
    f.log_offset = get<double>(bytes, pos);
    if (f.window.empty()) throw ValidationError("log-field dump has an empty window");
    std::int64_t area = f.window.area();
    if (bytes.size() - pos != std::size_t(area) * sizeof(double)) throw ValidationError("log-field dump size mismatch");
    f.values.resize(std::size_t(area));
    for (auto& v : f.values) v = get<double>(bytes, pos);
    return f;
}

}  // namespace polyext::io
