#pragma once

#include "ridgecraft/types.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace ridgecraft {

/// Writes one point per row, plain decimal, full round-trip precision.
/// With `header` a first row "x0,x1,..." is emitted.
inline void write_cloud_csv(const PointCloud& cloud, const std::string& path,
                            bool header = false) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.precision(17);
    if (header) {
        for (int j = 0; j < cloud.ambient_dim; ++j)
            out << (j ? "," : "") << "x" << j;
        out << "\n";
    }
    for (const Vec& p : cloud.points) {
        for (int j = 0; j < p.size(); ++j) out << (j ? "," : "") << p[j];
        out << "\n";
    }
}

/// Reads a point cloud; ambient_dim is inferred from the column count.
/// A non-numeric first row is treated as a header and skipped.
inline PointCloud read_cloud_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    PointCloud cloud;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> row;
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                double v = std::stod(cell, &pos);
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first) { first = false; continue; }  // header row
            throw std::runtime_error("non-numeric row in " + path);
        }
        first = false;
        Vec p(row.size());
        for (std::size_t j = 0; j < row.size(); ++j) p[j] = row[j];
        cloud.push_back(std::move(p));
    }
    return cloud;
}

}  // namespace ridgecraft
