#include "tlnmem/data_io.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace tlnmem {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataIoError("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_atomic(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataIoError("cannot open " + tmp + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataIoError("short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataIoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
  }
}

std::uint32_t read_u32_be(const std::vector<std::uint8_t>& b, std::size_t& at,
                          const std::string& path) {
  if (at + 4 > b.size())
    throw TruncatedFileError(path + ": truncated at byte " + std::to_string(at), at);
  std::uint32_t v = (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) |
                    (std::uint32_t(b[at + 2]) << 8) | std::uint32_t(b[at + 3]);
  at += 4;
  return v;
}

void put_u32_be(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(std::uint8_t(v >> 24));
  b.push_back(std::uint8_t(v >> 16));
  b.push_back(std::uint8_t(v >> 8));
  b.push_back(std::uint8_t(v));
}

void put_u32_le(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(std::uint8_t(v));
  b.push_back(std::uint8_t(v >> 8));
  b.push_back(std::uint8_t(v >> 16));
  b.push_back(std::uint8_t(v >> 24));
}

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

}  // namespace

PatternSet load_idx(const std::string& images_path, const std::string& labels_path,
                    bool raw_scale) {
  std::vector<std::uint8_t> bytes = read_file(images_path);
  std::size_t at = 0;
  std::uint32_t magic = read_u32_be(bytes, at, images_path);
  if (magic != kIdxImageMagic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw BadMagicError(images_path + ": expected image magic 0x00000803, found " +
                        std::string(buf));
  }
  std::uint32_t count = read_u32_be(bytes, at, images_path);
  std::uint32_t rows = read_u32_be(bytes, at, images_path);
  std::uint32_t cols = read_u32_be(bytes, at, images_path);
  std::size_t pixels = std::size_t(rows) * cols;
  if (at + std::size_t(count) * pixels > bytes.size())
    throw TruncatedFileError(
        images_path + ": truncated at byte " + std::to_string(bytes.size()) + ", need " +
            std::to_string(at + std::size_t(count) * pixels),
        bytes.size());

  PatternSet set;
  set.source = PatternSource::Idx;
  set.patterns.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    Eigen::VectorXd p(pixels);
    for (std::size_t j = 0; j < pixels; ++j) p(j) = bytes[at + j] / 255.0;
    at += pixels;
    if (!raw_scale) {
      double norm = p.norm();
      if (norm < 1e-12)
        throw DataIoError(images_path + ": image " + std::to_string(k) +
                          " is blank and cannot be unit-normalized");
      p /= norm;
    }
    set.patterns.push_back(std::move(p));
  }

  if (!labels_path.empty()) {
    std::vector<std::uint8_t> lb = read_file(labels_path);
    std::size_t lat = 0;
    std::uint32_t lmagic = read_u32_be(lb, lat, labels_path);
    if (lmagic != kIdxLabelMagic)
      throw BadMagicError(labels_path + ": expected label magic 0x00000801");
    std::uint32_t lcount = read_u32_be(lb, lat, labels_path);
    if (lcount != count)
      throw CountMismatchError(labels_path + ": " + std::to_string(lcount) +
                               " labels for " + std::to_string(count) + " images");
    if (lat + lcount > lb.size())
      throw TruncatedFileError(labels_path + ": truncated at byte " +
                                   std::to_string(lb.size()),
                               lb.size());
    set.labels.reserve(lcount);
    for (std::uint32_t k = 0; k < lcount; ++k) set.labels.push_back(lb[lat + k]);
  }
  return set;
}

PatternSet synthetic_patterns(int count, int d, std::uint64_t seed) {
  if (count < 1 || d < 1)
    throw std::invalid_argument("synthetic_patterns: count and d must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;

  PatternSet set;
  set.source = PatternSource::Synthetic;
  int draws = 0;
  while (set.count() < count) {
    if (++draws > 10000)
      throw DataIoError("synthetic_patterns: could not place " + std::to_string(count) +
                        " patterns in " + std::to_string(d) +
                        " dimensions within 10000 draws");
    Eigen::VectorXd p(d);
    for (int i = 0; i < d; ++i) p(i) = gauss(rng);
    double norm = p.norm();
    if (norm < 1e-12) continue;
    p /= norm;
    bool spaced = true;
    for (const auto& q : set.patterns)
      if (p.dot(q) >= 0.5) {
        spaced = false;
        break;
      }
    if (spaced) set.patterns.push_back(std::move(p));
  }
  return set;
}

Eigen::VectorXd corrupt(const Eigen::VectorXd& p, double radius, std::uint64_t seed) {
  if (radius < 0.0) throw std::invalid_argument("corrupt: radius must be nonnegative");
  if (radius == 0.0) return p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Eigen::VectorXd eta(p.size());
  double norm = 0.0;
  while (norm < 1e-12) {
    for (int i = 0; i < p.size(); ++i) eta(i) = gauss(rng);
    norm = eta.norm();
  }
  return p + (radius / norm) * eta;
}

std::vector<std::vector<std::uint8_t>> blob_digit_images(int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("blob_digit_images: count must be positive");
  const int side = 28;
  const double sigma = 2.5;
  const double ring = 8.0;
  const double shared_weight = 0.7;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.5, 0.5);

  std::vector<std::vector<std::uint8_t>> images;
  images.reserve(count);
  for (int k = 0; k < count; ++k) {
    double angle = 2.0 * M_PI * k / count;
    double cx = 13.5 + ring * std::cos(angle) + jitter(rng);
    double cy = 13.5 + ring * std::sin(angle) + jitter(rng);
    std::vector<std::uint8_t> img(side * side);
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        auto bump = [&](double bx, double by) {
          double dx = c - bx, dy = r - by;
          return std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
        };
        double v = shared_weight * bump(13.5, 13.5) + bump(cx, cy);
        img[r * side + c] = std::uint8_t(std::lround(255.0 * std::min(v, 1.0)));
      }
    images.push_back(std::move(img));
  }
  return images;
}

void write_idx_images(const std::string& path,
                      const std::vector<std::vector<std::uint8_t>>& images, int rows,
                      int cols) {
  std::size_t pixels = std::size_t(rows) * cols;
  for (const auto& img : images)
    if (img.size() != pixels)
      throw std::invalid_argument("write_idx_images: image size does not match rows*cols");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(16 + images.size() * pixels);
  put_u32_be(bytes, kIdxImageMagic);
  put_u32_be(bytes, std::uint32_t(images.size()));
  put_u32_be(bytes, std::uint32_t(rows));
  put_u32_be(bytes, std::uint32_t(cols));
  for (const auto& img : images) bytes.insert(bytes.end(), img.begin(), img.end());
  write_file_atomic(path, bytes);
}

void write_idx_labels(const std::string& path, const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(8 + labels.size());
  put_u32_be(bytes, kIdxLabelMagic);
  put_u32_be(bytes, std::uint32_t(labels.size()));
  bytes.insert(bytes.end(), labels.begin(), labels.end());
  write_file_atomic(path, bytes);
}

std::uint32_t crc32(const void* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  const auto* p = static_cast<const std::uint8_t*>(data);
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ p[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr int kModelVersion = 1;

void put_doubles(std::vector<std::uint8_t>& b, const double* v, std::size_t n) {
  std::size_t at = b.size();
  b.resize(at + n * sizeof(double));
  std::memcpy(b.data() + at, v, n * sizeof(double));
}

struct Cursor {
  const std::vector<std::uint8_t>& b;
  std::size_t at;
  const std::string& path;

  void need(std::size_t n) const {
    if (at + n > b.size())
      throw TruncatedFileError(path + ": payload truncated at byte " + std::to_string(at),
                               at);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = std::uint32_t(b[at]) | (std::uint32_t(b[at + 1]) << 8) |
                      (std::uint32_t(b[at + 2]) << 16) | (std::uint32_t(b[at + 3]) << 24);
    at += 4;
    return v;
  }
  void doubles(double* out, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(out, b.data() + at, n * sizeof(double));
    at += n * sizeof(double);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b.data() + at), n);
    at += n;
    return s;
  }
};

}  // namespace

void save_model(const std::string& path, const MemoryModel& model,
                const CstlnParams& params) {
  const int d = static_cast<int>(model.W_E.rows());
  const int n = static_cast<int>(model.W_E.cols());

  std::vector<std::uint8_t> payload;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j) put_doubles(payload, &model.W_E(i, j), 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) put_doubles(payload, &model.W_D(i, j), 1);
  for (int idx : model.frozen_rows) put_u32_le(payload, std::uint32_t(idx));
  for (const auto& entry : model.registry) {
    put_u32_le(payload, std::uint32_t(entry.pattern_id.size()));
    payload.insert(payload.end(), entry.pattern_id.begin(), entry.pattern_id.end());
    put_u32_le(payload, std::uint32_t(entry.support.indices.size()));
    for (int idx : entry.support.indices) put_u32_le(payload, std::uint32_t(idx));
    put_doubles(payload, entry.pattern.data(), d);
    put_doubles(payload, entry.attractor.data(), n);
  }

  nlohmann::json header = {
      {"format", "tlnm"},
      {"version", kModelVersion},
      {"n", n},
      {"d", d},
      {"params",
       {{"n", params.n}, {"epsilon", params.epsilon}, {"delta", params.delta},
        {"c", params.c}}},
      {"counts",
       {{"frozen", model.frozen_rows.size()}, {"registry", model.registry.size()}}},
      {"payload_bytes", payload.size()},
  };
  std::string htext = header.dump();

  std::vector<std::uint8_t> bytes;
  bytes.reserve(8 + htext.size() + payload.size() + 4);
  for (char m : {'T', 'L', 'N', 'M'}) bytes.push_back(std::uint8_t(m));
  put_u32_le(bytes, std::uint32_t(htext.size()));
  bytes.insert(bytes.end(), htext.begin(), htext.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  put_u32_le(bytes, crc32(bytes.data() + 8, htext.size() + payload.size()));

  write_file_atomic(path, bytes);
}

LoadedModel load_model(const std::string& path) {
  std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() < 8)
    throw TruncatedFileError(path + ": shorter than the fixed preamble", bytes.size());
  if (std::memcmp(bytes.data(), "TLNM", 4) != 0)
    throw BadMagicError(path + ": not a model file (magic mismatch)");
  std::uint32_t hlen = std::uint32_t(bytes[4]) | (std::uint32_t(bytes[5]) << 8) |
                       (std::uint32_t(bytes[6]) << 16) | (std::uint32_t(bytes[7]) << 24);
  if (8 + std::size_t(hlen) + 4 > bytes.size())
    throw TruncatedFileError(path + ": header extends past end of file", bytes.size());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + hlen);
  } catch (const nlohmann::json::exception& e) {
    throw DataIoError(path + ": malformed header: " + e.what());
  }
  if (header.value("format", "") != "tlnm")
    throw BadMagicError(path + ": header format tag is not 'tlnm'");
  int version = header.value("version", -1);
  if (version != kModelVersion)
    throw VersionError(path + ": model file version " + std::to_string(version) +
                       " is not supported; this build reads version " +
                       std::to_string(kModelVersion) +
                       " (re-export the model with a matching build)");

  std::size_t payload_bytes = header.at("payload_bytes").get<std::size_t>();
  if (8 + hlen + payload_bytes + 4 != bytes.size())
    throw TruncatedFileError(path + ": payload length disagrees with the header",
                             bytes.size());
  std::size_t crc_at = bytes.size() - 4;
  std::uint32_t stored = std::uint32_t(bytes[crc_at]) |
                         (std::uint32_t(bytes[crc_at + 1]) << 8) |
                         (std::uint32_t(bytes[crc_at + 2]) << 16) |
                         (std::uint32_t(bytes[crc_at + 3]) << 24);
  if (stored != crc32(bytes.data() + 8, hlen + payload_bytes))
    throw ChecksumError(path + ": checksum mismatch, file is corrupt");

  const int n = header.at("n").get<int>();
  const int d = header.at("d").get<int>();
  LoadedModel out;
  out.params.n = header.at("params").at("n").get<int>();
  out.params.epsilon = header.at("params").at("epsilon").get<double>();
  out.params.delta = header.at("params").at("delta").get<double>();
  out.params.c = header.at("params").at("c").get<double>();

  out.model = make_model(d, n);
  std::vector<std::uint8_t> payload(bytes.begin() + 8 + hlen,
                                    bytes.begin() + 8 + hlen + payload_bytes);
  Cursor cur{payload, 0, path};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < n; ++j) cur.doubles(&out.model.W_E(i, j), 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) cur.doubles(&out.model.W_D(i, j), 1);
  std::size_t frozen_count = header.at("counts").at("frozen").get<std::size_t>();
  for (std::size_t k = 0; k < frozen_count; ++k)
    out.model.frozen_rows.insert(int(cur.u32()));
  std::size_t registry_count = header.at("counts").at("registry").get<std::size_t>();
  for (std::size_t k = 0; k < registry_count; ++k) {
    RegistryEntry entry;
    entry.pattern_id = cur.str(cur.u32());
    std::uint32_t support_n = cur.u32();
    std::vector<int> idx(support_n);
    for (auto& i : idx) i = int(cur.u32());
    entry.support = SupportSet(idx);
    entry.pattern.resize(d);
    cur.doubles(entry.pattern.data(), d);
    entry.attractor.resize(n);
    cur.doubles(entry.attractor.data(), n);
    out.model.registry.push_back(std::move(entry));
  }
  if (cur.at != payload.size())
    throw DataIoError(path + ": " + std::to_string(payload.size() - cur.at) +
                      " unread payload bytes after the registry");
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ostringstream out;
  int n = traj.states.empty() ? 0 : static_cast<int>(traj.states[0].size());
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (const auto& name : traj.aux_names) out << "," << name;
  out << "\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    out << format_double(traj.times[k]);
    for (int i = 0; i < n; ++i) out << "," << format_double(traj.states[k](i));
    if (!traj.aux_names.empty()) {
      const Eigen::VectorXd& a = traj.aux[k];
      for (int i = 0; i < a.size(); ++i) out << "," << format_double(a(i));
    }
    out << "\n";
  }
  std::string text = out.str();
  write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataIoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataIoError(path + ": empty trajectory file");

  std::vector<std::string> cols;
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) cols.push_back(cell);
  if (cols.empty() || cols[0] != "t")
    throw DataIoError(path + ": first column must be t");
  int n = 0;
  std::size_t at = 1;
  while (at < cols.size() && cols[at] == "x" + std::to_string(n + 1)) {
    ++n;
    ++at;
  }
  Trajectory traj;
  for (; at < cols.size(); ++at) traj.aux_names.push_back(cols[at]);

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<double> vals;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 1 + std::size_t(n) + traj.aux_names.size())
      throw DataIoError(path + ": row " + std::to_string(row) +
                        " has the wrong number of columns");
    traj.times.push_back(vals[0]);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = vals[1 + i];
    traj.states.push_back(std::move(x));
    Eigen::VectorXd a(traj.aux_names.size());
    for (std::size_t i = 0; i < traj.aux_names.size(); ++i) a(i) = vals[1 + n + i];
    traj.aux.push_back(std::move(a));
  }
  return traj;
}

}  // namespace tlnmem
