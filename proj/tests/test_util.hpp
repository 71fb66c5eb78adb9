#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "transdarc/dataset.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("transdarc_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline transdarc::EmbeddingDataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t dim,
                                                  std::size_t n_classes, double scale = 3.0) {
    transdarc::EmbeddingDataset d;
    d.dim = dim;
    for (std::size_t c = 0; c < n_classes; ++c) d.class_names.push_back("c" + std::to_string(c));
    std::uniform_int_distribution<std::uint32_t> label(0, static_cast<std::uint32_t>(n_classes - 1));
    std::normal_distribution<float> value(0.0f, static_cast<float>(scale));
    for (std::size_t i = 0; i < n; ++i) {
        d.labels.push_back(label(rng));
        for (std::size_t j = 0; j < dim; ++j) d.embeddings.push_back(value(rng) + static_cast<float>(d.labels.back()));
    }
    return d;
}

inline std::vector<float> row_vec(std::initializer_list<float> v) { return v; }

inline transdarc::EmbeddingDataset make_dataset(std::size_t dim, const std::vector<std::vector<float>>& rows,
                                                const std::vector<std::uint32_t>& labels,
                                                std::vector<std::string> names) {
    transdarc::EmbeddingDataset d;
    d.dim = dim;
    d.class_names = std::move(names);
    for (std::size_t i = 0; i < rows.size(); ++i) d.push_back(rows[i], labels[i]);
    return d;
}

}  // namespace testutil
