#pragma once

#include "wgf/grid.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wgf::cli {

/// Grayscale image, row-major from the top row.
struct RasterDensity {
    int width = 0;
    int height = 0;
    int maxval = 255;  // ≤ 255 for 8-bit, ≤ 65535 for 16-bit samples
    std::vector<std::uint16_t> pixels;

    double intensity(int col, int row) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

/// Reads a PGM file, plain (P2) or binary (P5).
RasterDensity read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const RasterDensity& image, bool binary = true);

/// Cell averages of the image on the grid's node cells, scaled to the given mass.
///
/// The image covers the dual cells [x_j − Δx/2, x_j + Δx/2] of all nodes, so an
/// image with one pixel per node maps one to one.  Row 0 is the top (largest y).
/// On a 1D grid the image rows are averaged.
std::vector<double> ingest_raster(const RasterDensity& image, const GridSpec& grid, double mass);
std::vector<double> ingest_raster(const std::filesystem::path& path, const GridSpec& grid, double mass);

/// Whitespace- or comma-separated numbers; '#' starts a comment.
std::vector<double> read_table(const std::filesystem::path& path);

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

/// Long-format CSV with columns index,t,x[,y],<name>.
void write_snapshots_csv(const std::filesystem::path& path, const GridSpec& grid,
                         const std::vector<std::vector<double>>& snapshots, const std::vector<double>& times,
                         const std::vector<int>& indices = {}, const std::string& name = "rho");

struct SnapshotTable {
    std::vector<int> indices;
    std::vector<double> times;
    std::vector<std::vector<double>> values;
};
SnapshotTable read_snapshots_csv(const std::filesystem::path& path, const GridSpec& grid);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Grid description written next to every snapshot file.
nlohmann::json grid_manifest(const GridSpec& grid);

}  // namespace wgf::cli
