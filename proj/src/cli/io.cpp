#include "wgf/cli/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace wgf::cli {

namespace fs = std::filesystem;

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int pgm_int(std::istream& in, const fs::path& path) {
    const auto tok = pgm_token(in);
    int v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size() || v < 0)
        throw InvalidInput("malformed PGM header in " + path.string());
    return v;
}

}  // namespace

RasterDensity read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open raster " + path.string());
    const auto magic = pgm_token(in);
    if (magic != "P2" && magic != "P5") throw InvalidInput("unsupported raster format in " + path.string() + " (need PGM P2/P5)");
    RasterDensity img;
    img.width = pgm_int(in, path);
    img.height = pgm_int(in, path);
    img.maxval = pgm_int(in, path);
    if (img.width < 1 || img.height < 1 || img.maxval < 1 || img.maxval > 65535)
        throw InvalidInput("invalid PGM dimensions in " + path.string());
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    img.pixels.resize(n);
    if (magic == "P2") {
        for (std::size_t i = 0; i < n; ++i) {
            const int v = pgm_int(in, path);
            if (v > img.maxval) throw InvalidInput("PGM sample exceeds maxval in " + path.string());
            img.pixels[i] = static_cast<std::uint16_t>(v);
        }
    } else {
        // pgm_token consumed exactly one whitespace byte after maxval
        const bool wide = img.maxval > 255;
        std::vector<unsigned char> raw(n * (wide ? 2 : 1));
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size()))
            throw InvalidInput("truncated PGM data in " + path.string());
        for (std::size_t i = 0; i < n; ++i) {
            const int v = wide ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
            if (v > img.maxval) throw InvalidInput("PGM sample exceeds maxval in " + path.string());
            img.pixels[i] = static_cast<std::uint16_t>(v);
        }
    }
    return img;
}

void write_pgm(const fs::path& path, const RasterDensity& img, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << (binary ? "P5" : "P2") << "\n" << img.width << " " << img.height << "\n" << img.maxval << "\n";
    if (binary) {
        for (auto v : img.pixels) {
            if (img.maxval > 255) out.put(static_cast<char>(v >> 8));
            out.put(static_cast<char>(v & 0xff));
        }
    } else {
        for (std::size_t i = 0; i < img.pixels.size(); ++i)
            out << img.pixels[i] << ((i + 1) % static_cast<std::size_t>(img.width) == 0 ? "\n" : " ");
    }
}

namespace {

// Overlap weights of pixel columns with node dual cells along one axis.
// Pixel p covers [p, p+1)·(n+1)/pixels in units of Δx, starting at x_0 − Δx/2.
std::vector<std::vector<std::pair<int, double>>> axis_overlaps(int pixels, std::size_t nodes) {
    std::vector<std::vector<std::pair<int, double>>> out(nodes);
    const double w = static_cast<double>(nodes) / pixels;  // pixel width in node cells
    for (int p = 0; p < pixels; ++p) {
        const double a = p * w, b = (p + 1) * w;
        for (auto j = static_cast<std::size_t>(std::floor(a)); j < nodes && static_cast<double>(j) < b; ++j) {
            const double lo = std::max(a, static_cast<double>(j));
            const double hi = std::min(b, static_cast<double>(j) + 1.0);
            if (hi > lo) out[j].push_back({p, hi - lo});
        }
    }
    return out;
}

}  // namespace

std::vector<double> ingest_raster(const RasterDensity& img, const GridSpec& grid, double mass) {
    grid.validate();
    if (!(mass > 0.0)) throw InvalidInput("raster mass must be positive");
    if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
        throw InvalidInput("raster pixel count does not match its size");
    const std::size_t nx = grid.nodes_along(0);
    const std::size_t ny = grid.dim == 2 ? grid.nodes_along(1) : 1;
    const auto ox = axis_overlaps(img.width, nx);
    // rows are flipped so that image row 0 lands on the largest y
    const auto oy = grid.dim == 2 ? axis_overlaps(img.height, ny) : std::vector<std::vector<std::pair<int, double>>>{};
    std::vector<double> rho(grid.num_nodes(), 0.0);
    for (std::size_t iy = 0; iy < ny; ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            double sum = 0.0, area = 0.0;
            for (auto [px, wx] : ox[ix]) {
                if (grid.dim == 1) {
                    double col = 0.0;
                    for (int r = 0; r < img.height; ++r) col += img.intensity(px, r);
                    sum += wx * col / img.height;
                    area += wx;
                } else {
                    for (auto [py, wy] : oy[iy]) {
                        sum += wx * wy * img.intensity(px, img.height - 1 - py);
                        area += wx * wy;
                    }
                }
            }
            rho[iy * nx + ix] = area > 0.0 ? sum / area : 0.0;
        }
    }
    const double m = slice_mass(rho, grid);
    if (!(m > 0.0)) throw InvalidInput("raster has zero mass");
    for (double& v : rho) v *= mass / m;
    return rho;
}

std::vector<double> ingest_raster(const fs::path& path, const GridSpec& grid, double mass) {
    return ingest_raster(read_pgm(path), grid, mass);
}

std::vector<double> read_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open table " + path.string());
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto c = line.find('#'); c != std::string::npos) line.resize(c);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                out.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw InvalidInput("non-numeric entry '" + tok + "' in " + path.string());
            }
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, p);
}

void write_snapshots_csv(const fs::path& path, const GridSpec& grid, const std::vector<std::vector<double>>& snapshots,
                         const std::vector<double>& times, const std::vector<int>& indices, const std::string& name) {
    if (snapshots.size() != times.size()) throw InvalidInput("snapshot and time counts differ");
    if (!indices.empty() && indices.size() != times.size()) throw InvalidInput("snapshot and index counts differ");
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << "index,t,x" << (grid.dim == 2 ? ",y" : "") << "," << name << "\n";
    for (std::size_t k = 0; k < snapshots.size(); ++k) {
        if (snapshots[k].size() != grid.num_nodes()) throw InvalidInput("snapshot size differs from node count");
        const int idx = indices.empty() ? static_cast<int>(k) : indices[k];
        const std::string t = format_double(times[k]);
        for (std::size_t node = 0; node < snapshots[k].size(); ++node) {
            const auto x = grid.node_position(node);
            out << idx << "," << t << "," << format_double(x[0]);
            if (grid.dim == 2) out << "," << format_double(x[1]);
            out << "," << format_double(snapshots[k][node]) << "\n";
        }
    }
}

SnapshotTable read_snapshots_csv(const fs::path& path, const GridSpec& grid) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    const std::size_t cols = grid.dim == 2 ? 5 : 4;
    SnapshotTable t;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) v.push_back(std::stod(tok));
        if (v.size() != cols) throw InvalidInput("bad snapshot row in " + path.string());
        const std::size_t node = row % grid.num_nodes();
        if (node == 0) {
            t.indices.push_back(static_cast<int>(v[0]));
            t.times.push_back(v[1]);
            t.values.emplace_back(grid.num_nodes());
        }
        t.values.back()[node] = v.back();
        ++row;
    }
    if (row % grid.num_nodes() != 0) throw InvalidInput("incomplete snapshot in " + path.string());
    return t;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

nlohmann::json grid_manifest(const GridSpec& grid) {
    nlohmann::json axes = nlohmann::json::array();
    for (int a = 0; a < grid.dim; ++a)
        axes.push_back({{"lower", grid.lower[a]}, {"upper", grid.upper[a]}, {"cells", grid.n_space[a]},
                        {"nodes", grid.nodes_along(a)}, {"dx", grid.dx(a)}});
    return {{"dim", grid.dim},
            {"axes", axes},
            {"n_time", grid.n_time},
            {"dt", grid.dt()},
            {"scheme", to_string(grid.scheme)},
            {"layout", "node index x fastest, then y"},
            {"density_units", "mass per unit volume; slice mass = sum(rho) * prod(dx)"}};
}

}  // namespace wgf::cli
