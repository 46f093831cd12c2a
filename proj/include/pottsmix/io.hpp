#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pottsmix/geometry.hpp"
#include "pottsmix/model.hpp"
#include "pottsmix/study.hpp"
#include "pottsmix/synth.hpp"
#include "json.hpp"

namespace pottsmix::io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Matrix CSV: header "c1,...,cN", one row per matrix row, round-trip precision.
void write_matrix_csv(const fs::path& path, const MatrixXd& m);
MatrixXd read_matrix_csv(const fs::path& path);

/// "id,x,y,z" with 1-based ids.
void write_geometry_csv(const fs::path& path, const Geometry& geometry);
std::vector<Point3> read_geometry_csv(const fs::path& path);

/// "voxel,label" with 1-based voxel ids and labels.
void write_labels_csv(const fs::path& path, const Labeling& labels);
Labeling read_labels_csv(const fs::path& path, int k);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

/// Creates the directory (and parents); throws IoError naming the path.
void ensure_directory(const fs::path& dir);

json to_json(const Eigen::MatrixXd& m);
MatrixXd matrix_from_json(const json& j);
json to_json(const Hyperparams& h);
void merge_json(const json& j, Hyperparams& h);
json to_json(const ModelState& s, const Geometry& geometry);
json to_json(const synth::SignalSpec& s);
synth::SignalSpec signal_from_json(const json& j);
json to_json(const synth::ScenarioConfig& c);
synth::ScenarioConfig scenario_from_json(const json& j);
json to_json(const study::ReplicateRecord& r);

void write_study_tables(const fs::path& dir, const study::StudyResult& result);

}  // namespace pottsmix::io
