#pragma once

// Run directories: CSV tables, JSON states and meshes, content hashes and the manifest.
// Needs OpenSSL (libcrypto) for SHA-256.

#include <fcntl.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mesh.hpp"

namespace hml::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr const char* tool_version = "hml 0.3.0";

inline std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw IoError("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) out += hex[md[i] >> 4], out += hex[md[i] & 15];
    return out;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot open " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline std::string sha256_file(const fs::path& p) { return sha256_hex(read_file(p)); }

// Write to a sibling temp file and rename, so readers never see a partial file.
inline void write_atomic(const fs::path& p, std::string_view data) {
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open " + tmp.string());
        os.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!os) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) throw IoError("rename failed: " + p.string() + ": " + ec.message());
}

// Shortest round-trip representation, so reruns hash identically.
inline std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ----------------------------------------------------------------------------
// CSV
// ----------------------------------------------------------------------------

struct Csv {
    std::string schema; // e.g. "hml.spectrum.v1"
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    Csv& row(std::vector<std::string> r) {
        if (r.size() != columns.size()) throw InvalidParameter("csv row has " + std::to_string(r.size()) + " fields");
        rows.push_back(std::move(r));
        return *this;
    }

    std::string text() const {
        std::ostringstream os;
        os << "# schema: " << schema << '\n';
        for (size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
        os << '\n';
        for (auto& r : rows) {
            for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << '\n';
        }
        return os.str();
    }

    int col(const std::string& name) const {
        for (size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        throw InvalidParameter("csv has no column " + name);
    }
};

inline Csv parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    Csv c;
    if (!std::getline(is, line) || line.rfind("# schema: ", 0) != 0) throw IoError("csv: missing schema line");
    c.schema = line.substr(10);
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::string f;
        std::istringstream ls(l);
        while (std::getline(ls, f, ',')) out.push_back(f);
        return out;
    };
    if (!std::getline(is, line)) throw IoError("csv: missing header");
    c.columns = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto r = split(line);
        if (r.size() != c.columns.size()) throw IoError("csv: ragged row");
        c.rows.push_back(std::move(r));
    }
    return c;
}

// ----------------------------------------------------------------------------
// JSON
// ----------------------------------------------------------------------------

inline json state_json(const std::vector<cplx>& u) {
    json a = json::array();
    for (cplx z : u) a.push_back({z.real(), z.imag()});
    return {{"n_classes", u.size()}, {"u", a}};
}

inline std::vector<cplx> state_from_json(const json& j) {
    std::vector<cplx> u;
    for (auto& p : j.at("u")) u.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
    if (u.size() != j.at("n_classes").get<size_t>()) throw IoError("state: class count mismatch");
    return u;
}

// Vertex copies and triangles; enough to redraw or re-hash the mesh.
inline json mesh_json(const GluedMesh& M) {
    json copies = json::array(), tris = json::array(), marker = json::array();
    for (auto& c : M.copies) copies.push_back({c.z.real(), c.z.imag(), c.cls, c.key});
    for (auto& t : M.tris) tris.push_back({t.v[0], t.v[1], t.v[2]});
    for (auto m : M.marker) marker.push_back(static_cast<int>(m));
    return {{"kind", M.kind},     {"n_classes", M.n_classes}, {"n_theta", M.n_theta}, {"rows", M.rows},
            {"copies", copies},   {"triangles", tris},        {"marker", marker}};
}

// Identifies a mesh by its copies and triangles; used to check a rebuilt mesh against a run.
inline std::string mesh_digest(const GluedMesh& M) {
    json j = mesh_json(M);
    return sha256_hex(j.dump());
}

// ----------------------------------------------------------------------------
// run directories
// ----------------------------------------------------------------------------

inline constexpr const char* manifest_name = "manifest.json";
inline constexpr const char* lock_name = "run.lock";

// Writer side of a run directory. Holds the lock until destroyed; the manifest goes last.
class RunWriter {
public:
    RunWriter(const fs::path& dir, std::string subcommand, json params, bool fresh = true)
        : dir_(dir), start_(std::chrono::steady_clock::now()) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
        auto lock = (dir_ / lock_name).string();
        fd_ = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) throw IoError("run directory is locked: " + lock);
        if (fresh) fs::remove(dir_ / manifest_name, ec);
        manifest_ = {{"tool_version", tool_version},
                     {"subcommand", std::move(subcommand)},
                     {"parameters", std::move(params)},
                     {"inputs", json::object()},
                     {"outputs", json::array()},
                     {"conventions",
                      {{"metric_density", "4/(1-|z|^2)^2 (Poincare disk)"},
                       {"hopf", "phi = rho(u) u_z conj(u_zbar)"},
                       {"energy", "E = 1/2 int rho |grad u|^2, rho at edge midpoints"}}},
                     {"timings", json::object()},
                     {"summary", json::object()}};
    }

    // Reopens a completed run to extend it; the manifest is rewritten on finish().
    static RunWriter extend(const fs::path& dir) {
        json m = json::parse(read_file(dir / manifest_name));
        RunWriter w(dir, m.at("subcommand").get<std::string>(), m.at("parameters"), false);
        w.manifest_ = std::move(m);
        return w;
    }

    RunWriter(RunWriter&& o) noexcept : dir_(std::move(o.dir_)), manifest_(std::move(o.manifest_)), start_(o.start_), fd_(o.fd_) {
        o.fd_ = -1;
    }
    RunWriter(const RunWriter&) = delete;
    RunWriter& operator=(const RunWriter&) = delete;

    ~RunWriter() {
        if (fd_ >= 0) {
            ::close(fd_);
            std::error_code ec;
            fs::remove(dir_ / lock_name, ec);
        }
    }

    const fs::path& dir() const { return dir_; }
    json& manifest() { return manifest_; }

    void input(const std::string& name, const fs::path& p) { manifest_["inputs"][name] = sha256_file(p); }

    void write(const std::string& name, std::string_view data) {
        write_atomic(dir_ / name, data);
        auto& out = manifest_["outputs"];
        for (auto it = out.begin(); it != out.end(); ++it)
            if ((*it)["file"] == name) {
                out.erase(it);
                break;
            }
        out.push_back({{"file", name}, {"sha256", sha256_hex(data)}, {"bytes", data.size()}});
    }
    void write_csv(const std::string& name, const Csv& c) { write(name, c.text()); }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(1)); }

    void time(const std::string& what, double seconds) { manifest_["timings"][what] = seconds; }

    void finish() {
        double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        manifest_["timings"]["wall_seconds"] = wall;
        write_atomic(dir_ / manifest_name, manifest_.dump(1));
    }

private:
    fs::path dir_;
    json manifest_;
    std::chrono::steady_clock::time_point start_;
    int fd_ = -1;
};

// Reader side: only completed runs (manifest present) are readable.
class RunReader {
public:
    explicit RunReader(const fs::path& dir) : dir_(dir) {
        if (!fs::exists(dir_ / manifest_name)) throw IoError("not a completed run (no manifest): " + dir_.string());
        manifest_ = json::parse(read_file(dir_ / manifest_name));
    }

    const fs::path& dir() const { return dir_; }
    const json& manifest() const { return manifest_; }
    std::string subcommand() const { return manifest_.at("subcommand").get<std::string>(); }
    const json& params() const { return manifest_.at("parameters"); }

    bool has(const std::string& name) const {
        for (auto& o : manifest_.at("outputs"))
            if (o.at("file") == name) return true;
        return false;
    }

    // Contents of a listed output, checked against its recorded hash.
    std::string read(const std::string& name) const {
        for (auto& o : manifest_.at("outputs"))
            if (o.at("file") == name) {
                std::string data = read_file(dir_ / name);
                if (sha256_hex(data) != o.at("sha256").get<std::string>()) throw IoError("hash mismatch: " + name);
                return data;
            }
        throw IoError("run has no output " + name);
    }
    json read_json(const std::string& name) const { return json::parse(read(name)); }
    Csv read_csv(const std::string& name) const { return parse_csv(read(name)); }

private:
    fs::path dir_;
    json manifest_;
};

} // namespace hml::io
