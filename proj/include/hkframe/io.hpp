#pragma once

#include "hkframe/calibration.hpp"
#include "hkframe/cubes.hpp"
#include "hkframe/frame.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace hkframe {

/// Dense binary container: 16-byte magic, u64 metadata length, metadata JSON,
/// u64 matrix count, then per matrix u64 rows, u64 cols and row-major
/// little-endian f64 entries.
struct BinaryArtifact {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<Eigen::MatrixXd> matrices;
};

inline constexpr char kCalibMagic[17] = "HKFRAME-CALIB-01";
inline constexpr char kFrameMagic[17] = "HKFRAME-FRAME-01";

std::string encode_binary(const BinaryArtifact& a, const char* magic);
/// Throws MalformedInput on a wrong magic or truncated data.
BinaryArtifact decode_binary(const std::string& bytes, const char* magic, const std::string& what = "artifact");

BinaryArtifact calibration_to_artifact(const LPCalibration& calib);
LPCalibration calibration_from_artifact(const BinaryArtifact& a);

/// Stores psi, samples and measures per level plus the grid itself.
BinaryArtifact frame_to_artifact(const SynthesisFrame& frame, const SubcubeGrid& grid);
SynthesisFrame frame_from_artifact(const BinaryArtifact& a);
SubcubeGrid frame_grid_from_artifact(const BinaryArtifact& a);

std::string read_file(const std::string& path);
/// Writes through a temporary file and rename.
void write_file(const std::string& path, const std::string& bytes);
nlohmann::json read_json(const std::string& path);
/// Two-space indented, keys sorted, trailing newline.
std::string dump_json(const nlohmann::json& j);

/// git blob hash: sha1("blob <size>\0" + bytes), lowercase hex.
std::string git_blob_hash(const std::string& bytes);

}  // namespace hkframe
