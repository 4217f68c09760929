#include "mspint/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mspint {

namespace fs = std::filesystem;

std::string format_number(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw IoError("number formatting failed");
    return std::string(buf, end);
}

namespace {

std::string matrix_text(const Mat& m) {
    std::string out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out += ' ';
            out += format_number(m(r, c));
        }
        out += '\n';
    }
    return out;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << contents;
    out.close();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_matrix(const fs::path& path, const Mat& m) { write_file(path, matrix_text(m)); }

Mat read_matrix(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::vector<double> row;
        double x;
        while (ls >> x) row.push_back(x);
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError("ragged matrix file " + path.string());
        rows.push_back(std::move(row));
    }
    Mat m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

OutputSet::OutputSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    if (!fs::exists(dir_, ec)) {
        if (!fs::create_directories(dir_, ec) || ec)
            throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
        created_dir_ = true;
    } else if (!fs::is_directory(dir_, ec)) {
        throw IoError(dir_.string() + " exists and is not a directory");
    }
}

OutputSet::~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
}

void OutputSet::write(const std::string& name, const std::string& contents) {
    const fs::path p = dir_ / name;
    files_.push_back(p);
    write_file(p, contents);
}

void OutputSet::write_matrix(const std::string& name, const Mat& m) { write(name, matrix_text(m)); }

}  // namespace mspint
