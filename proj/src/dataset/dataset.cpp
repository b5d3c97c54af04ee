#include "ecgli/dataset/dataset.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

#include "ecgli/binary_io.hpp"

namespace ecgli::dataset {

namespace {

constexpr std::uint32_t kDatasetVersion = 1;

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

DatasetView Dataset::split(const std::string& name) const {
  if (name == "train") return {*this, 0, n_train, name};
  if (name == "val") return {*this, n_train, n_val, name};
  if (name == "test") return {*this, n_train + n_val, n_test, name};
  if (name == "all") return {*this, 0, samples.size(), name};
  throw InvalidArgument("unknown split '" + name + "' (expected train, val, test or all)");
}

void Dataset::validate() const {
  if (n_train + n_val + n_test != samples.size()) throw InvalidArgument("dataset split sizes do not sum to the total");
  domain.validate();
  if (static_cast<int>(domain.dim()) != parameter_count(kind)) throw InvalidArgument("domain dimension mismatch");
  if (norm.dim() != domain.dim()) throw InvalidArgument("normalization dimension mismatch");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!domain.contains(s.p, 1e-12)) throw InvalidArgument("sample " + std::to_string(i) + " lies outside the domain");
    const auto& f = samples.front().signal;
    if (s.signal.n_leads != f.n_leads || s.signal.n_t != f.n_t || s.signal.t0 != f.t0 || s.signal.dt != f.dt ||
        s.signal.values.size() != f.n_leads * f.n_t) {
      throw InvalidArgument("sample " + std::to_string(i) + " has a different signal shape");
    }
  }
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
  ds.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const std::size_t n = ds.samples.size(), np = ds.domain.dim();
  std::ostringstream body(std::ios::binary);
  io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(ds.kind));
  io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(np));
  io::write_pod<std::uint64_t>(body, ds.n_train);
  io::write_pod<std::uint64_t>(body, ds.n_val);
  io::write_pod<std::uint64_t>(body, ds.n_test);
  io::write_pod<std::uint64_t>(body, ds.n_leads());
  io::write_pod<std::uint64_t>(body, ds.n_t());
  io::write_pod<double>(body, n ? ds.samples.front().signal.t0 : 0.0);
  io::write_pod<double>(body, n ? ds.samples.front().signal.dt : 0.0);
  io::write_pod<std::uint64_t>(body, ds.seed);
  io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(ds.config_hash.size()));
  body.write(ds.config_hash.data(), static_cast<std::streamsize>(ds.config_hash.size()));
  io::write_array<double>(body, ds.domain.lo);
  io::write_array<double>(body, ds.domain.hi);
  io::write_array<double>(body, ds.norm.p_min);
  io::write_array<double>(body, ds.norm.p_max);
  io::write_pod<double>(body, ds.norm.signal_offset);
  io::write_pod<double>(body, ds.norm.signal_scale);
  for (const auto& s : ds.samples) io::write_array<double>(body, s.p);
  for (const auto& s : ds.samples) io::write_array<double>(body, s.signal.values);
  const std::string payload = body.str();
  const std::uint64_t sum = io::fnv1a(std::as_bytes(std::span<const char>(payload.data(), payload.size())));

  std::ostringstream file(std::ios::binary);
  io::write_magic(file, "ECGLDSET");
  io::write_pod<std::uint32_t>(file, kDatasetVersion);
  io::write_pod<std::uint64_t>(file, payload.size());
  io::write_pod<std::uint64_t>(file, sum);
  file << payload;
  write_text_atomic(dir / "data.bin", file.str());

  std::ostringstream m;
  m << std::setprecision(17);
  m << "format = ecgli-dataset\nversion = " << kDatasetVersion << "\ncase = " << to_string(ds.kind)
    << "\nseed = " << ds.seed << "\nconfig_hash = " << ds.config_hash << "\nn_train = " << ds.n_train
    << "\nn_val = " << ds.n_val << "\nn_test = " << ds.n_test << "\nn_leads = " << ds.n_leads()
    << "\nn_t = " << ds.n_t() << "\nchecksum = " << std::hex << sum << std::dec << "\nparameters = ";
  const auto names = parameter_names(ds.kind);
  for (std::size_t i = 0; i < names.size(); ++i) m << (i ? "," : "") << names[i];
  m << "\ndomain_lo = ";
  for (std::size_t i = 0; i < np; ++i) m << (i ? "," : "") << ds.domain.lo[i];
  m << "\ndomain_hi = ";
  for (std::size_t i = 0; i < np; ++i) m << (i ? "," : "") << ds.domain.hi[i];
  m << "\n";
  write_text_atomic(dir / "manifest.txt", m.str());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "data.bin";
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open dataset " + path.string());
  io::expect_magic(f, "ECGLDSET");
  if (io::read_pod<std::uint32_t>(f) != kDatasetVersion) throw CorruptData("unsupported dataset version");
  const auto size = io::read_pod<std::uint64_t>(f);
  const auto sum = io::read_pod<std::uint64_t>(f);
  const auto payload = io::read_array<char>(f, size);
  if (f.peek() != std::char_traits<char>::eof()) throw CorruptData("dataset file has trailing bytes");
  if (io::fnv1a(std::as_bytes(std::span<const char>(payload))) != sum) throw CorruptData("dataset checksum mismatch");

  std::istringstream in(std::string(payload.begin(), payload.end()), std::ios::binary);
  Dataset ds;
  const auto kind = io::read_pod<std::uint32_t>(in);
  if (kind > 3) throw CorruptData("unknown case kind in dataset");
  ds.kind = static_cast<CaseKind>(kind);
  const std::size_t np = io::read_pod<std::uint32_t>(in);
  if (static_cast<int>(np) != parameter_count(ds.kind)) throw CorruptData("parameter count disagrees with case kind");
  ds.n_train = io::read_pod<std::uint64_t>(in);
  ds.n_val = io::read_pod<std::uint64_t>(in);
  ds.n_test = io::read_pod<std::uint64_t>(in);
  const auto n_leads = io::read_pod<std::uint64_t>(in);
  const auto n_t = io::read_pod<std::uint64_t>(in);
  const double t0 = io::read_pod<double>(in);
  const double dt = io::read_pod<double>(in);
  ds.seed = io::read_pod<std::uint64_t>(in);
  const auto hlen = io::read_pod<std::uint32_t>(in);
  const auto h = io::read_array<char>(in, hlen);
  ds.config_hash.assign(h.begin(), h.end());
  ds.domain.lo = io::read_array<double>(in, np);
  ds.domain.hi = io::read_array<double>(in, np);
  ds.norm.p_min = io::read_array<double>(in, np);
  ds.norm.p_max = io::read_array<double>(in, np);
  ds.norm.signal_offset = io::read_pod<double>(in);
  ds.norm.signal_scale = io::read_pod<double>(in);
  const std::size_t n = ds.n_train + ds.n_val + ds.n_test;
  const std::size_t expected = n * np * 8 + n * n_leads * n_t * 8;
  const auto pos = static_cast<std::size_t>(in.tellg());
  if (pos + expected != payload.size()) throw CorruptData("dataset header dimensions disagree with array lengths");
  ds.samples.resize(n);
  for (auto& s : ds.samples) s.p = io::read_array<double>(in, np);
  for (auto& s : ds.samples) {
    s.signal.n_leads = n_leads;
    s.signal.n_t = n_t;
    s.signal.t0 = t0;
    s.signal.dt = dt;
    s.signal.values = io::read_array<double>(in, n_leads * n_t);
  }
  try {
    ds.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptData(std::string("dataset payload invalid: ") + e.what());
  }
  return ds;
}

void export_csv(const std::filesystem::path& dir, const Dataset& ds) {
  std::filesystem::create_directories(dir);
  std::ostringstream params;
  params << std::setprecision(17) << "index,split";
  for (const auto& nm : parameter_names(ds.kind)) params << "," << nm;
  params << "\n";
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const char* split = i < ds.n_train ? "train" : (i < ds.n_train + ds.n_val ? "val" : "test");
    params << i << "," << split;
    for (double v : ds.samples[i].p) params << "," << v;
    params << "\n";
    pecg::write_signal_csv(dir / ("sample_" + std::to_string(i) + ".csv"), ds.samples[i].signal);
  }
  write_text_atomic(dir / "params.csv", params.str());
}

}  // namespace ecgli::dataset
