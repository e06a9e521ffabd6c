#include "iadl/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <set>
#include <sstream>

namespace iadl::io {

namespace {

constexpr std::array<char, 4> kMagic = {'I', 'A', 'D', 'L'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 4;

std::string lower_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFFu));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const std::string& in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(in[offset + i])) << (8 * i));
  }
  return value;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void check_finite(const Matrix& m, const fs::path& path) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        std::ostringstream msg;
        msg << "'" << path.string() << "': non-finite value at row " << r << ", column " << c;
        throw IoError(msg.str());
      }
    }
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

// --- JSON helpers -------------------------------------------------------

[[noreturn]] void bad_key(const std::string& ctx, const std::string& what) {
  throw IoError("config: " + ctx + ": " + what);
}

void reject_unknown(const Json& j, const std::string& ctx, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad_key(ctx, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) bad_key(ctx, "unknown key '" + key + "'");
  }
}

template <typename T>
T take(const Json& j, const char* key, T fallback, const std::string& ctx) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    bad_key(ctx, std::string("key '") + key + "' has the wrong type");
  }
}

double take_number(const Json& j, const char* key, double fallback, const std::string& ctx) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  const Json& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  }
  bad_key(ctx, std::string("key '") + key + "' must be a number");
}

std::vector<double> number_list(const Json& v, const std::string& ctx) {
  if (!v.is_array()) bad_key(ctx, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) bad_key(ctx, "expected a list of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

HrfChoice::Mode hrf_mode_from_string(const std::string& s, const std::string& ctx) {
  if (s == "canonical") return HrfChoice::Mode::canonical;
  if (s == "stretched") return HrfChoice::Mode::stretched;
  if (s == "sampled") return HrfChoice::Mode::sampled;
  if (s == "params") return HrfChoice::Mode::explicit_params;
  bad_key(ctx, "unknown HRF mode '" + s + "' (canonical, stretched, sampled, params)");
}

std::string to_string(HrfChoice::Mode m) {
  switch (m) {
    case HrfChoice::Mode::canonical: return "canonical";
    case HrfChoice::Mode::stretched: return "stretched";
    case HrfChoice::Mode::sampled: return "sampled";
    case HrfChoice::Mode::explicit_params: return "params";
  }
  return "canonical";
}

HrfChoice hrf_choice_from_json(const Json& j, const HrfChoice& fallback, const std::string& ctx) {
  reject_unknown(j, ctx, {"mode", "spread", "params"});
  HrfChoice c = fallback;
  if (j.contains("mode")) c.mode = hrf_mode_from_string(take<std::string>(j, "mode", "", ctx), ctx);
  c.spread = take_number(j, "spread", c.spread, ctx);
  if (j.contains("params")) {
    c.params = hrf_params_from_json(j.at("params"));
    if (!j.contains("mode")) c.mode = HrfChoice::Mode::explicit_params;
  }
  if (!(c.spread >= 0.0 && c.spread < 1.0)) bad_key(ctx, "spread must lie in [0, 1)");
  return c;
}

Json to_json(const HrfChoice& c) {
  Json j = {{"mode", to_string(c.mode)}, {"spread", c.spread}};
  if (c.mode == HrfChoice::Mode::explicit_params) j["params"] = io::to_json(c.params);
  return j;
}

SyntheticSourceSpec source_from_json(const Json& j, const std::string& ctx) {
  reject_unknown(j, ctx, {"kind", "blob_centers", "blob_radius", "plateau_fraction", "target_sparsity", "condition",
                          "event_rate"});
  SyntheticSourceSpec s;
  try {
    s.kind = source_kind_from_string(take<std::string>(j, "kind", "transient", ctx));
  } catch (const std::domain_error& e) {
    bad_key(ctx, e.what());
  }
  if (j.contains("blob_centers")) {
    for (const auto& c : j.at("blob_centers")) {
      const auto xy = number_list(c, ctx + ".blob_centers");
      if (xy.size() != 2) bad_key(ctx, "blob centres are [row, col] pairs");
      s.blob_centers.push_back({xy[0], xy[1]});
    }
  }
  s.blob_radius = take_number(j, "blob_radius", s.blob_radius, ctx);
  s.plateau_fraction = take_number(j, "plateau_fraction", s.plateau_fraction, ctx);
  s.target_sparsity = take_number(j, "target_sparsity", s.target_sparsity, ctx);
  s.event_rate = take_number(j, "event_rate", s.event_rate, ctx);
  if (j.contains("condition")) s.condition = condition_from_json(j.at("condition"));
  return s;
}

Json source_to_json(const SyntheticSourceSpec& s) {
  Json centers = Json::array();
  for (const auto& c : s.blob_centers) centers.push_back({c.row, c.col});
  Json j = {{"kind", iadl::to_string(s.kind)},        {"blob_centers", centers},
            {"blob_radius", s.blob_radius},           {"plateau_fraction", s.plateau_fraction},
            {"target_sparsity", s.target_sparsity},   {"event_rate", s.event_rate}};
  if (s.condition) j["condition"] = io::to_json(*s.condition);
  return j;
}

Json matrix_rows_json(const std::vector<Index>& v) {
  Json a = Json::array();
  for (Index i : v) a.push_back(i);
  return a;
}

}  // namespace

// ----------------------------------------------------------------------
// Matrix files
// ----------------------------------------------------------------------

void save_matrix_binary(const Matrix& m, const fs::path& path) {
  check_finite(m, path);
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw IoError("'" + path.string() + "': matrix too large for the file format");
  }
  std::string bytes;
  bytes.reserve(kHeaderBytes + 8 * static_cast<std::size_t>(m.size()));
  bytes.append(kMagic.data(), kMagic.size());
  put_le<std::uint16_t>(bytes, kMatrixFormatVersion);
  put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) put_le<std::uint64_t>(bytes, std::bit_cast<std::uint64_t>(m(r, c)));
  }
  write_file(path, bytes);
}

Matrix load_matrix_binary(const fs::path& path) {
  const std::string bytes = read_file(path);
  const std::string name = "'" + path.string() + "'";
  if (bytes.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw IoError(name + ": bad magic (not an IADL matrix file)");
  }
  if (bytes.size() < kHeaderBytes) throw IoError(name + ": truncated header");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kMatrixFormatVersion) {
    throw IoError(name + ": unsupported format version " + std::to_string(version));
  }
  const auto rows = get_le<std::uint32_t>(bytes, 6);
  const auto cols = get_le<std::uint32_t>(bytes, 10);
  const std::uint64_t expected = 8ull * rows * cols;
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (payload < expected) {
    throw IoError(name + ": truncated payload (" + std::to_string(payload) + " of " + std::to_string(expected) +
                  " bytes)");
  }
  if (payload > expected) throw IoError(name + ": " + std::to_string(payload - expected) + " trailing bytes after payload");
  Matrix m(rows, cols);
  std::size_t off = kHeaderBytes;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      m(r, c) = std::bit_cast<double>(get_le<std::uint64_t>(bytes, off));
      off += 8;
    }
  }
  check_finite(m, path);
  return m;
}

void save_matrix_csv(const Matrix& m, const fs::path& path) {
  check_finite(m, path);
  std::string text;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) text.push_back(',');
      text += format_double(m(r, c));
    }
    text.push_back('\n');
  }
  write_file(path, text);
}

Matrix load_matrix_csv(const fs::path& path) {
  const std::string text = read_file(path);
  const std::string name = "'" + path.string() + "'";
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(cells, cell, ',')) {
      ++col;
      const std::string t = trim(cell);
      double v = 0.0;
      const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw IoError(name + ": line " + std::to_string(line_no) + ", field " + std::to_string(col) +
                      ": not a number '" + t + "'");
      }
      row.push_back(v);
    }
    if (!line.empty() && trim(line).back() == ',') {
      throw IoError(name + ": line " + std::to_string(line_no) + ": empty trailing field");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(name + ": line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                    " fields, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  check_finite(m, path);
  return m;
}

void save_matrix(const Matrix& m, const fs::path& path) {
  if (lower_extension(path) == ".csv") {
    save_matrix_csv(m, path);
  } else {
    save_matrix_binary(m, path);
  }
}

Matrix load_matrix(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("'" + path.string() + "': no such file");
  return lower_extension(path) == ".csv" ? load_matrix_csv(path) : load_matrix_binary(path);
}

// ----------------------------------------------------------------------
// Checksums and manifests
// ----------------------------------------------------------------------

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("SHA-256 initialisation failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw IoError("SHA-256 update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) throw IoError("SHA-256 finalisation failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

void write_manifest(const fs::path& dir, const std::vector<std::string>& files, const Json& meta) {
  Json list = Json::array();
  for (const auto& f : files) {
    const fs::path p = dir / f;
    list.push_back({{"path", f}, {"bytes", fs::file_size(p)}, {"sha256", sha256_file(p)}});
  }
  write_json(dir / "manifest.json", {{"format", "iadl-manifest"}, {"version", 1}, {"files", list}, {"meta", meta}});
}

Json verify_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) throw IoError("'" + dir.string() + "': missing manifest.json");
  const Json m = read_json(path);
  if (!m.contains("files") || !m.at("files").is_array()) throw IoError("'" + path.string() + "': malformed manifest");
  for (const auto& f : m.at("files")) {
    const fs::path p = dir / f.at("path").get<std::string>();
    if (!fs::exists(p)) throw IoError("'" + p.string() + "': listed in the manifest but missing");
    if (sha256_file(p) != f.at("sha256").get<std::string>()) {
      throw IoError("'" + p.string() + "': checksum does not match the manifest");
    }
  }
  return m;
}

void write_json(const fs::path& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::string what = e.what();
    std::replace(what.begin(), what.end(), '\n', ' ');
    throw IoError("'" + path.string() + "': invalid JSON: " + what);
  }
}

// ----------------------------------------------------------------------
// Configuration
// ----------------------------------------------------------------------

TwoGammaParams HrfChoice::resolve(Rng& rng) const {
  switch (mode) {
    case Mode::canonical: return canonical_params();
    case Mode::stretched: return stretched_hrf(spread);
    case Mode::sampled: return sample_hrf(rng, spread);
    case Mode::explicit_params: params.validate(); return params;
  }
  return canonical_params();
}

Json to_json(const TwoGammaParams& p) {
  return {{"peak_delay", p.peak_delay},
          {"undershoot_delay", p.undershoot_delay},
          {"peak_dispersion", p.peak_dispersion},
          {"undershoot_dispersion", p.undershoot_dispersion},
          {"undershoot_ratio", p.undershoot_ratio},
          {"onset", p.onset},
          {"kernel_length", p.kernel_length}};
}

TwoGammaParams hrf_params_from_json(const Json& j) {
  const std::string ctx = "hrf params";
  reject_unknown(j, ctx, {"peak_delay", "undershoot_delay", "peak_dispersion", "undershoot_dispersion",
                          "undershoot_ratio", "onset", "kernel_length"});
  TwoGammaParams p;
  p.peak_delay = take_number(j, "peak_delay", p.peak_delay, ctx);
  p.undershoot_delay = take_number(j, "undershoot_delay", p.undershoot_delay, ctx);
  p.peak_dispersion = take_number(j, "peak_dispersion", p.peak_dispersion, ctx);
  p.undershoot_dispersion = take_number(j, "undershoot_dispersion", p.undershoot_dispersion, ctx);
  p.undershoot_ratio = take_number(j, "undershoot_ratio", p.undershoot_ratio, ctx);
  p.onset = take_number(j, "onset", p.onset, ctx);
  p.kernel_length = take_number(j, "kernel_length", p.kernel_length, ctx);
  try {
    p.validate();
  } catch (const std::domain_error& e) {
    bad_key(ctx, e.what());
  }
  return p;
}

Json to_json(const ConditionSpec& c) {
  return {{"onsets", c.onsets}, {"durations", c.durations}, {"amplitude", c.amplitude}};
}

ConditionSpec condition_from_json(const Json& j) {
  const std::string ctx = "condition";
  reject_unknown(j, ctx, {"onsets", "durations", "amplitude"});
  ConditionSpec c;
  if (j.contains("onsets")) c.onsets = number_list(j.at("onsets"), ctx + ".onsets");
  if (j.contains("durations")) c.durations = number_list(j.at("durations"), ctx + ".durations");
  c.amplitude = take_number(j, "amplitude", 1.0, ctx);
  try {
    c.validate();
  } catch (const std::domain_error& e) {
    bad_key(ctx, e.what());
  }
  return c;
}

Json to_json(const SolverConfig& c) {
  return {{"max_iters", c.max_iters},
          {"rel_obj_tol", c.rel_obj_tol},
          {"spectral_safety", c.spectral_safety},
          {"power_iter_tol", c.power_iter_tol},
          {"power_iter_max", c.power_iter_max},
          {"execution", c.execution == Execution::serial ? "serial" : "parallel"},
          {"monotone_safeguard", c.monotone_safeguard}};
}

Json to_json(const InitConfig& c) {
  return {{"ica_max_iters", c.ica_max_iters},
          {"ica_tol", c.ica_tol},
          {"merge_corr_threshold", c.merge_corr_threshold},
          {"refine_iters", c.refine_iters},
          {"rng_seed", c.rng_seed}};
}

Json to_json(const SolveTrace& t) {
  return {{"iterations_run", t.iterations_run},
          {"safeguarded_iterations", t.safeguarded_iterations},
          {"stop_reason", t.stop_reason == StopReason::tolerance ? "tolerance" : "max_iters"},
          {"monotone", t.monotone()},
          {"final_objective", t.objective.empty() ? 0.0 : t.objective.back()}};
}

void ExperimentConfig::validate() const {
  const int given = int(theta.has_value()) + int(phi.has_value()) + int(assisted_theta.has_value());
  if (given > 1) throw IoError("config: give only one of 'theta', 'phi' and 'assisted_theta'");
  if (k && *k < 1) throw IoError("config: 'K' must be positive");
  if (k && theta && static_cast<Index>(theta->size()) != *k) throw IoError("config: 'theta' must have K entries");
  if (k && phi && static_cast<Index>(phi->size()) != *k) throw IoError("config: 'phi' must have K entries");
  if (c_delta && !(*c_delta >= 0.0)) throw IoError("config: 'c_delta' must be non-negative");
  if (!(c_d > 0.0)) throw IoError("config: 'c_d' must be positive");
  if (!(epsilon > 0.0)) throw IoError("config: 'epsilon' must be positive");
  try {
    solver.validate();
    init.validate();
  } catch (const std::domain_error& e) {
    throw IoError(std::string("config: ") + e.what());
  }
}

ExperimentConfig config_from_json(const Json& j) {
  const std::string ctx = "top level";
  reject_unknown(j, ctx, {"seed", "K", "conditions", "theta", "phi", "assisted_theta", "c_delta", "c_d", "epsilon",
                          "blind", "reference_hrf", "alternate_hrf", "solver", "init", "data", "region_thetas",
                          "time_points", "tr", "description"});
  ExperimentConfig c;
  c.seed = take<std::uint64_t>(j, "seed", 0, ctx);
  if (j.contains("K")) c.k = take<Index>(j, "K", 0, ctx);
  if (j.contains("conditions")) {
    if (!j.at("conditions").is_array()) bad_key(ctx, "'conditions' must be a list");
    for (const auto& e : j.at("conditions")) c.conditions.push_back(condition_from_json(e));
  }
  if (j.contains("theta")) c.theta = number_list(j.at("theta"), "theta");
  if (j.contains("phi")) c.phi = number_list(j.at("phi"), "phi");
  if (j.contains("assisted_theta")) c.assisted_theta = number_list(j.at("assisted_theta"), "assisted_theta");
  if (j.contains("c_delta")) {
    const Json& v = j.at("c_delta");
    if (v.is_string() && v.get<std::string>() == "auto") {
      c.c_delta.reset();
    } else if (v.is_number()) {
      c.c_delta = v.get<double>();
    } else {
      bad_key(ctx, "'c_delta' must be a number or \"auto\"");
    }
  }
  c.c_d = take_number(j, "c_d", c.c_d, ctx);
  c.epsilon = take_number(j, "epsilon", c.epsilon, ctx);
  c.blind = take<bool>(j, "blind", false, ctx);
  if (j.contains("reference_hrf")) c.reference_hrf = hrf_params_from_json(j.at("reference_hrf"));
  if (j.contains("alternate_hrf")) c.alternate_hrf = hrf_choice_from_json(j.at("alternate_hrf"), c.alternate_hrf, "alternate_hrf");
  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    reject_unknown(s, "solver", {"max_iters", "rel_obj_tol", "spectral_safety", "power_iter_tol", "power_iter_max",
                                 "execution", "monotone_safeguard"});
    c.solver.max_iters = take<int>(s, "max_iters", c.solver.max_iters, "solver");
    c.solver.rel_obj_tol = take_number(s, "rel_obj_tol", c.solver.rel_obj_tol, "solver");
    c.solver.spectral_safety = take_number(s, "spectral_safety", c.solver.spectral_safety, "solver");
    c.solver.power_iter_tol = take_number(s, "power_iter_tol", c.solver.power_iter_tol, "solver");
    c.solver.power_iter_max = take<int>(s, "power_iter_max", c.solver.power_iter_max, "solver");
    c.solver.monotone_safeguard = take<bool>(s, "monotone_safeguard", c.solver.monotone_safeguard, "solver");
    const std::string exec = take<std::string>(s, "execution", "parallel", "solver");
    if (exec == "serial") {
      c.solver.execution = Execution::serial;
    } else if (exec == "parallel") {
      c.solver.execution = Execution::parallel;
    } else {
      bad_key("solver", "'execution' must be \"serial\" or \"parallel\"");
    }
  }
  c.init.rng_seed = c.seed;
  if (j.contains("init")) {
    const Json& s = j.at("init");
    reject_unknown(s, "init", {"ica_max_iters", "ica_tol", "merge_corr_threshold", "refine_iters", "rng_seed"});
    c.init.ica_max_iters = take<int>(s, "ica_max_iters", c.init.ica_max_iters, "init");
    c.init.ica_tol = take_number(s, "ica_tol", c.init.ica_tol, "init");
    c.init.merge_corr_threshold = take_number(s, "merge_corr_threshold", c.init.merge_corr_threshold, "init");
    c.init.refine_iters = take<int>(s, "refine_iters", c.init.refine_iters, "init");
    c.init.rng_seed = take<std::uint64_t>(s, "rng_seed", c.init.rng_seed, "init");
    c.init_seed_explicit = s.contains("rng_seed");
  }
  if (j.contains("data")) {
    const Json& d = j.at("data");
    reject_unknown(d, "data", {"recipe", "snr_db", "subject_hrf", "grid", "time_points", "tr", "sources"});
    c.data.recipe = take<std::string>(d, "recipe", "mini", "data");
    if (c.data.recipe != "mini" && c.data.recipe != "full" && c.data.recipe != "custom") {
      bad_key("data", "'recipe' must be \"mini\", \"full\" or \"custom\"");
    }
    c.data.snr_db = take_number(d, "snr_db", 0.0, "data");
    if (d.contains("subject_hrf")) c.data.subject_hrf = hrf_choice_from_json(d.at("subject_hrf"), c.data.subject_hrf, "data.subject_hrf");
    if (c.data.recipe == "custom") {
      Recipe& r = c.data.custom;
      if (!d.contains("grid") || !d.contains("time_points") || !d.contains("sources")) {
        bad_key("data", "a custom recipe needs 'grid', 'time_points' and 'sources'");
      }
      const auto g = number_list(d.at("grid"), "data.grid");
      if (g.size() != 2 || g[0] < 1 || g[1] < 1) bad_key("data", "'grid' must be [height, width]");
      r.grid = {static_cast<Index>(g[0]), static_cast<Index>(g[1])};
      r.time_points = take<Index>(d, "time_points", 0, "data");
      r.tr = take_number(d, "tr", 2.0, "data");
      for (const auto& s : d.at("sources")) r.specs.push_back(source_from_json(s, "data.sources"));
      if (r.specs.empty()) bad_key("data", "'sources' is empty");
      try {
        for (const auto& s : r.specs) s.validate(r.grid);
      } catch (const std::domain_error& e) {
        bad_key("data.sources", e.what());
      }
    }
  }
  if (j.contains("region_thetas")) c.region_thetas = number_list(j.at("region_thetas"), "region_thetas");
  if (j.contains("time_points")) c.time_points = take<Index>(j, "time_points", 0, ctx);
  if (j.contains("tr")) c.tr = take_number(j, "tr", 2.0, ctx);
  c.validate();
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["seed"] = c.seed;
  if (c.k) j["K"] = *c.k;
  Json conds = Json::array();
  for (const auto& e : c.conditions) conds.push_back(to_json(e));
  j["conditions"] = conds;
  if (c.theta) j["theta"] = *c.theta;
  if (c.phi) j["phi"] = *c.phi;
  if (c.assisted_theta) j["assisted_theta"] = *c.assisted_theta;
  j["c_delta"] = c.c_delta ? Json(*c.c_delta) : Json("auto");
  j["c_d"] = c.c_d;
  j["epsilon"] = c.epsilon;
  j["blind"] = c.blind;
  j["reference_hrf"] = to_json(c.reference_hrf);
  j["alternate_hrf"] = to_json(c.alternate_hrf);
  j["solver"] = to_json(c.solver);
  j["init"] = to_json(c.init);
  Json data = {{"recipe", c.data.recipe}, {"subject_hrf", to_json(c.data.subject_hrf)}};
  data["snr_db"] = std::isfinite(c.data.snr_db) ? Json(c.data.snr_db) : Json("inf");
  if (c.data.recipe == "custom") {
    data["grid"] = {c.data.custom.grid.height, c.data.custom.grid.width};
    data["time_points"] = c.data.custom.time_points;
    data["tr"] = c.data.custom.tr;
    Json src = Json::array();
    for (const auto& s : c.data.custom.specs) src.push_back(source_to_json(s));
    data["sources"] = src;
  }
  j["data"] = data;
  if (!c.region_thetas.empty()) j["region_thetas"] = c.region_thetas;
  if (c.time_points) j["time_points"] = *c.time_points;
  if (c.tr) j["tr"] = *c.tr;
  return j;
}

ExperimentConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("'" + path.string() + "': no such config file");
  try {
    return config_from_json(read_json(path));
  } catch (const IoError& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

std::vector<double> default_theta_ladder(const std::vector<double>& assisted, Index k) {
  const auto m = static_cast<Index>(assisted.size());
  if (m > k) throw IoError("config: more assisted sparsities than atoms");
  const Index free = k - m;
  std::vector<double> out = assisted;
  const std::vector<double> tail = {70.0, 10.0, 0.0};
  if (free <= 3) {
    out.insert(out.end(), tail.end() - free, tail.end());
    return out;
  }
  const Index ladder = free - 3;
  for (Index i = 0; i < ladder; ++i) {
    out.push_back(ladder == 1 ? 99.0 : 99.0 - 19.0 * static_cast<double>(i) / static_cast<double>(ladder - 1));
  }
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

Vector resolve_phi(const ExperimentConfig& c, Index k, Index n) {
  std::vector<double> values;
  bool is_theta = true;
  if (c.theta) {
    values = *c.theta;
  } else if (c.phi) {
    values = *c.phi;
    is_theta = false;
  } else if (c.assisted_theta) {
    values = default_theta_ladder(*c.assisted_theta, k);
  } else {
    throw IoError("config: one of 'theta', 'phi' or 'assisted_theta' is required");
  }
  if (static_cast<Index>(values.size()) != k) {
    throw IoError("config: sparsity specification has " + std::to_string(values.size()) + " entries but K = " +
                  std::to_string(k));
  }
  Vector phi(k);
  try {
    for (Index i = 0; i < k; ++i) {
      phi[i] = is_theta ? phi_from_theta(values[static_cast<std::size_t>(i)], n) : values[static_cast<std::size_t>(i)];
      if (!(phi[i] >= 0.0) || phi[i] > static_cast<double>(n)) throw std::domain_error("budget outside [0, N]");
    }
  } catch (const std::domain_error& e) {
    throw IoError(std::string("config: ") + e.what());
  }
  return phi;
}

// ----------------------------------------------------------------------
// Bundles
// ----------------------------------------------------------------------

void write_truth_bundle(const fs::path& dir, const TruthBundle& b) {
  fs::create_directories(dir);
  save_matrix(b.x, dir / "X.iadl");
  save_matrix(b.truth.time_courses, dir / "truth_D.iadl");
  save_matrix(b.truth.maps, dir / "truth_S.iadl");
  save_matrix(b.delta, dir / "delta.iadl");
  Json conds = Json::array();
  for (const auto& c : b.conditions) conds.push_back(to_json(c));
  Json brain = Json::array();
  for (bool v : b.truth.brain_like) brain.push_back(v);
  const Json meta = {{"time_points", b.x.rows()},
                     {"voxels", b.x.cols()},
                     {"sources", b.truth.count()},
                     {"assisted_indices", matrix_rows_json(b.assisted_indices)},
                     {"conditions", conds},
                     {"brain_like", brain},
                     {"kinds", b.kinds},
                     {"hrf", to_json(b.hrf)},
                     {"tr", b.tr},
                     {"grid", {b.grid.height, b.grid.width}},
                     {"snr_db", std::isfinite(b.snr_db) ? Json(b.snr_db) : Json("inf")},
                     {"noise_sigma", b.noise_sigma},
                     {"seed", b.seed}};
  write_json(dir / "dataset.json", meta);
  write_manifest(dir, {"X.iadl", "truth_D.iadl", "truth_S.iadl", "delta.iadl", "dataset.json"},
                 {{"kind", "truth"}});
}

TruthBundle read_truth_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "': truth directory does not exist");
  verify_manifest(dir);
  TruthBundle b;
  b.x = load_matrix(dir / "X.iadl");
  b.truth.time_courses = load_matrix(dir / "truth_D.iadl");
  b.truth.maps = load_matrix(dir / "truth_S.iadl");
  b.delta = load_matrix(dir / "delta.iadl");
  const Json meta = read_json(dir / "dataset.json");
  try {
    for (const auto& i : meta.at("assisted_indices")) b.assisted_indices.push_back(i.get<Index>());
    for (const auto& c : meta.at("conditions")) b.conditions.push_back(condition_from_json(c));
    for (const auto& v : meta.at("brain_like")) b.truth.brain_like.push_back(v.get<bool>());
    b.kinds = meta.at("kinds").get<std::vector<std::string>>();
    b.hrf = hrf_params_from_json(meta.at("hrf"));
    b.tr = meta.at("tr").get<double>();
    b.grid = {meta.at("grid").at(0).get<Index>(), meta.at("grid").at(1).get<Index>()};
    b.snr_db = meta.at("snr_db").is_string() ? std::numeric_limits<double>::infinity() : meta.at("snr_db").get<double>();
    b.noise_sigma = meta.at("noise_sigma").get<double>();
    b.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw IoError("'" + (dir / "dataset.json").string() + "': malformed dataset description: " + e.what());
  }
  try {
    b.truth.validate();
  } catch (const std::domain_error& e) {
    throw IoError("'" + dir.string() + "': " + e.what());
  }
  return b;
}

void write_fit_bundle(const fs::path& dir, const FitBundle& b) {
  fs::create_directories(dir);
  save_matrix(b.d, dir / "D.iadl");
  save_matrix(b.s, dir / "S.iadl");
  std::ofstream trace(dir / "trace.csv", std::ios::trunc);
  if (!trace) throw IoError("cannot write '" + (dir / "trace.csv").string() + "'");
  trace << "iteration,objective,max_violation\n";
  for (std::size_t i = 0; i < b.trace.objective.size(); ++i) {
    trace << (i + 1) << ',' << format_double(b.trace.objective[i]) << ','
          << format_double(b.trace.constraint_violation_max[i]) << '\n';
  }
  trace.close();
  Json params = b.params;
  params["assisted_count"] = b.assisted_count;
  params["trace"] = to_json(b.trace);
  write_json(dir / "params.json", params);
  write_manifest(dir, {"D.iadl", "S.iadl", "trace.csv", "params.json"}, {{"kind", "fit"}});
}

FitBundle read_fit_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "': fit directory does not exist");
  verify_manifest(dir);
  FitBundle b;
  b.d = load_matrix(dir / "D.iadl");
  b.s = load_matrix(dir / "S.iadl");
  b.params = read_json(dir / "params.json");
  try {
    b.assisted_count = b.params.at("assisted_count").get<Index>();
  } catch (const Json::exception&) {
    throw IoError("'" + (dir / "params.json").string() + "': missing assisted_count");
  }
  if (b.d.cols() != b.s.rows()) throw IoError("'" + dir.string() + "': D and S disagree on the number of atoms");
  std::ifstream trace(dir / "trace.csv");
  std::string line;
  std::getline(trace, line);
  while (std::getline(trace, line)) {
    if (trim(line).empty()) continue;
    std::stringstream row(line);
    std::string it, obj, viol;
    std::getline(row, it, ',');
    std::getline(row, obj, ',');
    std::getline(row, viol, ',');
    b.trace.objective.push_back(std::stod(obj));
    b.trace.constraint_violation_max.push_back(std::stod(viol));
  }
  b.trace.iterations_run = static_cast<int>(b.trace.objective.size());
  return b;
}

void write_init_bundle(const fs::path& dir, const InitBundle& b) {
  fs::create_directories(dir);
  save_matrix(b.d, dir / "D0.iadl");
  save_matrix(b.s, dir / "S0.iadl");
  Json info = b.info;
  info["assisted_count"] = b.assisted_count;
  write_json(dir / "init.json", info);
  write_manifest(dir, {"D0.iadl", "S0.iadl", "init.json"}, {{"kind", "init"}});
}

InitBundle read_init_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "': init directory does not exist");
  verify_manifest(dir);
  InitBundle b;
  b.d = load_matrix(dir / "D0.iadl");
  b.s = load_matrix(dir / "S0.iadl");
  b.info = read_json(dir / "init.json");
  try {
    b.assisted_count = b.info.at("assisted_count").get<Index>();
  } catch (const Json::exception&) {
    throw IoError("'" + (dir / "init.json").string() + "': missing assisted_count");
  }
  if (b.d.cols() != b.s.rows()) throw IoError("'" + dir.string() + "': D0 and S0 disagree on the number of atoms");
  return b;
}

}  // namespace iadl::io
