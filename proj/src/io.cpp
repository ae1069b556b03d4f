#include "hkframe/io.hpp"

#include "hkframe/error.hpp"

#include <openssl/sha.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hkframe {

namespace {

template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}

void put_u64(std::string& out, std::uint64_t v) {
  v = to_le(v);
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::string& out, double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  put_u64(out, u);
}

struct Reader {
  const std::string& s;
  std::size_t pos = 0;
  std::string what;

  void need(std::size_t n) {
    if (s.size() - pos < n) throw Error(ErrorKind::MalformedInput, what + " is truncated");
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v;
    std::memcpy(&v, s.data() + pos, 8);
    pos += 8;
    return to_le(v);
  }
  double f64() {
    const std::uint64_t u = u64();
    double v;
    std::memcpy(&v, &u, sizeof v);
    return v;
  }
};

nlohmann::json vec_json(const std::vector<Index>& v) { return v; }

}  // namespace

std::string encode_binary(const BinaryArtifact& a, const char* magic) {
  std::string out(magic, 16);
  const std::string meta = a.meta.dump();
  put_u64(out, meta.size());
  out += meta;
  put_u64(out, a.matrices.size());
  for (const auto& m : a.matrices) {
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
  }
  return out;
}

BinaryArtifact decode_binary(const std::string& bytes, const char* magic, const std::string& what) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), magic, 16) != 0)
    throw Error(ErrorKind::MalformedInput, what + " has a wrong magic header");
  Reader rd{bytes, 16, what};
  BinaryArtifact a;
  const std::uint64_t ml = rd.u64();
  rd.need(ml);
  try {
    a.meta = nlohmann::json::parse(bytes.substr(rd.pos, ml));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, what + " metadata: " + e.what());
  }
  rd.pos += ml;
  const std::uint64_t count = rd.u64();
  for (std::uint64_t k = 0; k < count; ++k) {
    const std::uint64_t rows = rd.u64(), cols = rd.u64();
    if (cols != 0 && rows > (bytes.size() / 8) / cols) throw Error(ErrorKind::MalformedInput, what + " is truncated");
    rd.need(rows * cols * 8);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rd.f64();
    a.matrices.push_back(std::move(m));
  }
  if (rd.pos != bytes.size()) throw Error(ErrorKind::MalformedInput, what + " has trailing bytes");
  return a;
}

BinaryArtifact calibration_to_artifact(const LPCalibration& calib) {
  BinaryArtifact a;
  a.meta = {{"bumps", calib.bumps.tag()},
            {"J_max", calib.J_max},
            {"lambda_max", calib.op.lambda_max},
            {"source", calib.op.source},
            {"size", calib.op.size()}};
  a.matrices.push_back(calib.op.eigenvalues);
  a.matrices.push_back(calib.op.eigenvectors);
  a.matrices.push_back(calib.op.mu);
  for (const auto& m : calib.level_ops) a.matrices.push_back(m);
  for (const auto& m : calib.dual_ops) a.matrices.push_back(m);
  return a;
}

LPCalibration calibration_from_artifact(const BinaryArtifact& a) {
  try {
    LPCalibration c;
    const auto& b = a.meta.at("bumps");
    c.bumps.kind = b.at("kind").get<std::string>() == "difference" ? BumpKind::Difference : BumpKind::RootDifference;
    c.bumps.delta = b.at("delta").get<double>();
    c.bumps.beta0 = b.at("beta0").get<double>();
    c.bumps.a = b.at("a").get<double>();
    c.bumps.eta = Cutoff{b.at("r1").get<double>(), b.at("r2").get<double>()};
    c.bumps.lower_bound = b.at("lower_bound").get<double>();
    c.duals = DualPair{c.bumps};
    c.J_max = a.meta.at("J_max").get<int>();
    const std::size_t L = static_cast<std::size_t>(c.J_max + 1);
    if (a.matrices.size() != 3 + 2 * L) throw Error(ErrorKind::MalformedInput, "calibration matrix count mismatch");
    c.op.eigenvalues = a.matrices[0].col(0);
    c.op.eigenvectors = a.matrices[1];
    c.op.mu = a.matrices[2].col(0);
    c.op.lambda_max = a.meta.at("lambda_max").get<double>();
    c.op.source = a.meta.at("source").get<std::string>();
    for (std::size_t j = 0; j < L; ++j) c.level_ops.push_back(a.matrices[3 + j]);
    for (std::size_t j = 0; j < L; ++j) c.dual_ops.push_back(a.matrices[3 + L + j]);
    c.spectral_grid = c.op.eigenvalues.cwiseSqrt();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("calibration metadata: ") + e.what());
  }
}

BinaryArtifact frame_to_artifact(const SynthesisFrame& frame, const SubcubeGrid& grid) {
  BinaryArtifact a;
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : frame.levels) {
    levels.push_back({{"j", l.j},
                      {"samples", vec_json(l.samples)},
                      {"measures", l.measures},
                      {"residual_norm", l.residual_norm},
                      {"neumann_terms", l.neumann_terms},
                      {"tail_bound", l.tail_bound}});
    a.matrices.push_back(l.psi);
  }
  a.meta = {{"eps0", frame.eps0},
            {"tol", frame.tol},
            {"profiles", frame.profiles.tag()},
            {"eps0_tried", frame.eps0_tried},
            {"max_residual_tried", frame.max_residual_tried},
            {"levels", levels},
            {"grid", to_json(grid)}};
  return a;
}

SynthesisFrame frame_from_artifact(const BinaryArtifact& a) {
  try {
    SynthesisFrame f;
    f.eps0 = a.meta.at("eps0").get<double>();
    f.tol = a.meta.at("tol").get<double>();
    f.profiles.a = a.meta.at("profiles").at("a").get<double>();
    f.eps0_tried = a.meta.at("eps0_tried").get<std::vector<double>>();
    f.max_residual_tried = a.meta.at("max_residual_tried").get<std::vector<double>>();
    const auto& levels = a.meta.at("levels");
    if (levels.size() != a.matrices.size()) throw Error(ErrorKind::MalformedInput, "frame matrix count mismatch");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      FrameLevel l;
      l.j = levels[i].at("j").get<int>();
      l.samples = levels[i].at("samples").get<std::vector<Index>>();
      l.measures = levels[i].at("measures").get<std::vector<double>>();
      l.residual_norm = levels[i].at("residual_norm").get<double>();
      l.neumann_terms = levels[i].at("neumann_terms").get<int>();
      l.tail_bound = levels[i].at("tail_bound").get<double>();
      l.psi = a.matrices[i];
      f.levels.push_back(std::move(l));
    }
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("frame metadata: ") + e.what());
  }
}

SubcubeGrid frame_grid_from_artifact(const BinaryArtifact& a) {
  if (!a.meta.contains("grid")) throw Error(ErrorKind::MalformedInput, "frame artifact has no grid");
  return grid_from_json(a.meta.at("grid"));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::PrerequisiteMissing, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidParams, "cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::InvalidParams, "short write to '" + path + "'");
  }
  std::filesystem::rename(tmp, p);
}

nlohmann::json read_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedInput, "'" + path + "': " + e.what());
  }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string git_blob_hash(const std::string& bytes) {
  const std::string blob = "blob " + std::to_string(bytes.size()) + std::string(1, '\0') + bytes;
  unsigned char md[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), md);
  std::ostringstream os;
  for (unsigned char c : md) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
  return os.str();
}

}  // namespace hkframe
