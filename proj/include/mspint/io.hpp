#pragma once

#include "mspint/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mspint {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal form that reads back to the same double.
std::string format_number(double x);

/// Whitespace-separated rows, full precision.
void write_matrix(const std::filesystem::path& path, const Mat& m);
Mat read_matrix(const std::filesystem::path& path);

/// Collects text files and either commits them all or leaves nothing behind.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);
    ~OutputSet();

    void write(const std::string& name, const std::string& contents);
    void write_matrix(const std::string& name, const Mat& m);
    /// Keep the written files; without this the destructor removes them.
    void commit() { committed_ = true; }
    const std::vector<std::filesystem::path>& files() const { return files_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    bool created_dir_ = false;
    bool committed_ = false;
    std::vector<std::filesystem::path> files_;
};

}  // namespace mspint
