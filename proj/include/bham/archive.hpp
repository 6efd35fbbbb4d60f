#pragma once
#include <bham/design.hpp>
#include <bham/model.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace bham {

/// Everything a later predict/curve/select call needs, serialized as a
/// self-describing JSON document:
///
///   { "format": "bham-model", "version": 1,
///     "outcome": {...}, "specs": [...], "parametric": [...],
///     "transforms": [...], "model": {...} }
///
/// Doubles are written in shortest round-trip form, so a save/load cycle
/// reproduces predictions bit for bit. Loading a newer version fails.
struct ModelArchive
{
    static constexpr int format_version = 1;

    std::string outcome;            // response column (time column for Cox)
    std::string status;             // Cox event column, empty otherwise
    SpecTable specs;
    std::vector<std::string> parametric;
    std::vector<SmoothTransform> transforms;
    FittedModel model;
};

std::string to_json(const ModelArchive& archive);
ModelArchive archive_from_json(const std::string& text);

void save_archive(const std::filesystem::path& path, const ModelArchive& archive);
ModelArchive load_archive(const std::filesystem::path& path);

} // namespace bham
