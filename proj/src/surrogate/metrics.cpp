#include "ecgli/surrogate/metrics.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ecgli/binary_io.hpp"
#include "ecgli/parallel.hpp"

namespace ecgli::surrogate {

namespace {
constexpr std::uint32_t kModelVersion = 1;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n != b.size() || n == 0) throw InvalidArgument("pearson: length mismatch");
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  const bool ca = saa == 0.0, cb = sbb == 0.0;
  if (ca || cb) return (ca && cb) ? 1.0 : 0.0;
  return sab / std::sqrt(saa * sbb);
}

Metrics compute_metrics(const std::vector<Vec>& pred, const std::vector<Vec>& target, std::size_t n_leads,
                        std::size_t n_t, double range) {
  if (pred.empty() || pred.size() != target.size()) throw InvalidArgument("metrics: sample counts differ");
  Metrics m;
  double sq = 0.0, corr = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].size() != n_leads * n_t || target[s].size() != n_leads * n_t) {
      throw InvalidArgument("metrics: signal shapes differ");
    }
    for (std::size_t k = 0; k < pred[s].size(); ++k) {
      const double e = pred[s][k] - target[s][k];
      sq += e * e;
    }
    for (std::size_t l = 0; l < n_leads; ++l) {
      corr += pearson({pred[s].data() + l * n_t, n_t}, {target[s].data() + l * n_t, n_t});
    }
    count += n_leads;
  }
  m.mse = sq / static_cast<double>(pred.size() * n_leads * n_t);
  m.normalized_rmse = std::sqrt(m.mse) / range;
  m.pearson_dissimilarity = 1.0 - corr / static_cast<double>(count);
  return m;
}

Metrics evaluate(const SurrogateModel& model, const dataset::DatasetView& split, int jobs) {
  if (split.empty()) throw InvalidArgument("evaluate: empty split");
  std::vector<Vec> pred(split.size()), target(split.size());
  parallel_for(split.size(), jobs, [&](std::size_t i) {
    pred[i] = forward_normalized(model, model.theta, model.norm.normalize_params(split[i].p));
    target[i] = model.norm.normalize_signal(split[i].signal.values);
  });
  return compute_metrics(pred, target, model.n_leads, model.n_t, model.norm.normalized_signal_range());
}

void save_model(const std::filesystem::path& path, const SurrogateModel& m) {
  m.validate();
  std::ostringstream body(std::ios::binary);
  auto widths = [&](const Mlp& net) {
    io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(net.widths().size()));
    for (int w : net.widths()) io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(w));
  };
  io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(m.n_s));
  io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(m.n_p));
  io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(m.n_leads));
  io::write_pod<std::uint32_t>(body, static_cast<std::uint32_t>(m.n_t));
  io::write_pod<double>(body, m.dt);
  io::write_pod<double>(body, m.signal_t0);
  io::write_pod<double>(body, m.signal_dt);
  io::write_array<double>(body, m.norm.p_min);
  io::write_array<double>(body, m.norm.p_max);
  io::write_pod<double>(body, m.norm.signal_offset);
  io::write_pod<double>(body, m.norm.signal_scale);
  widths(m.dyn);
  widths(m.rec);
  io::write_pod<std::uint64_t>(body, m.theta.size());
  io::write_array<double>(body, m.theta);
  const std::string payload = body.str();
  const auto sum = io::fnv1a(std::as_bytes(std::span<const char>(payload.data(), payload.size())));
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    io::write_magic(out, "ECGLMODL");
    io::write_pod<std::uint32_t>(out, kModelVersion);
    io::write_pod<std::uint64_t>(out, payload.size());
    io::write_pod<std::uint64_t>(out, sum);
    out << payload;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

SurrogateModel load_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open model " + path.string());
  io::expect_magic(f, "ECGLMODL");
  if (io::read_pod<std::uint32_t>(f) != kModelVersion) throw CorruptData("unsupported model version");
  const auto size = io::read_pod<std::uint64_t>(f);
  const auto sum = io::read_pod<std::uint64_t>(f);
  const auto payload = io::read_array<char>(f, size);
  if (io::fnv1a(std::as_bytes(std::span<const char>(payload))) != sum) throw CorruptData("model checksum mismatch");
  std::istringstream in(std::string(payload.begin(), payload.end()), std::ios::binary);
  SurrogateModel m;
  m.n_s = static_cast<int>(io::read_pod<std::uint32_t>(in));
  m.n_p = static_cast<int>(io::read_pod<std::uint32_t>(in));
  m.n_leads = static_cast<int>(io::read_pod<std::uint32_t>(in));
  m.n_t = static_cast<int>(io::read_pod<std::uint32_t>(in));
  m.dt = io::read_pod<double>(in);
  m.signal_t0 = io::read_pod<double>(in);
  m.signal_dt = io::read_pod<double>(in);
  if (m.n_p < 1 || m.n_p > 16) throw CorruptData("model parameter dimension implausible");
  m.norm.p_min = io::read_array<double>(in, m.n_p);
  m.norm.p_max = io::read_array<double>(in, m.n_p);
  m.norm.signal_offset = io::read_pod<double>(in);
  m.norm.signal_scale = io::read_pod<double>(in);
  auto widths = [&]() {
    const auto n = io::read_pod<std::uint32_t>(in);
    if (n < 2 || n > 64) throw CorruptData("model layer count implausible");
    std::vector<int> w;
    for (std::uint32_t i = 0; i < n; ++i) w.push_back(static_cast<int>(io::read_pod<std::uint32_t>(in)));
    return w;
  };
  try {
    m.dyn = Mlp(widths());
    m.rec = Mlp(widths());
    m.theta = io::read_array<double>(in, io::read_pod<std::uint64_t>(in));
    m.validate();
  } catch (const InvalidArgument& e) {
    throw CorruptData(std::string("model payload invalid: ") + e.what());
  }
  return m;
}

}  // namespace ecgli::surrogate
