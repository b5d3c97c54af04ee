#include "ecgli/pecg/pecg.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ecgli/fem/quadrature.hpp"

namespace ecgli::pecg {

void LeadSet::validate(const fem::StructuredGrid& grid) const {
  if (!(sigma_b > 0.0)) throw InvalidArgument("bath conductivity must be positive");
  if (positions.empty()) throw InvalidArgument("lead set is empty");
  const auto [lo, hi] = grid.bounding_box();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto& x = positions[i];
    bool inside = true;
    for (int d = 0; d < 3; ++d) inside = inside && x[d] >= lo[d] && x[d] <= hi[d];
    if (inside) throw InvalidArgument("lead " + std::to_string(i) + " lies inside the domain bounding box");
  }
}

LeadSet line_leads(int n, double lx, double height, double lead_y) {
  if (n < 1) throw InvalidArgument("need at least one lead");
  if (height == 0.0) throw InvalidArgument("leads must sit off the tissue plane");
  LeadSet leads;
  for (int i = 0; i < n; ++i) leads.positions.push_back({(i + 0.5) * lx / n, lead_y, height});
  return leads;
}

LeadSet sphere_leads(int n, const Point3& center, double radius) {
  if (n < 1) throw InvalidArgument("need at least one lead");
  if (!(radius > 0.0)) throw InvalidArgument("lead sphere radius must be positive");
  LeadSet leads;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double rho = std::sqrt(1.0 - z * z);
    const double a = golden * i;
    leads.positions.push_back(
        {center[0] + radius * rho * std::cos(a), center[1] + radius * rho * std::sin(a), center[2] + radius * z});
  }
  return leads;
}

void PecgSignal::validate() const {
  if (n_t < 2) throw InvalidArgument("signal needs at least two time samples");
  if (values.size() != n_leads * n_t) throw InvalidArgument("signal array does not match its dimensions");
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericFailure("signal contains non-finite values");
  }
}

Vec lead_transfer_vector(const fem::StructuredGrid& grid, const fem::ConductivityTensorField& di,
                         const Point3& lead, double sigma_b, int order) {
  if (di.tensors.size() != grid.num_elements()) throw InvalidArgument("one intracellular tensor per element required");
  if (!(sigma_b > 0.0)) throw InvalidArgument("bath conductivity must be positive");
  LeadSet single{{lead}, sigma_b};
  single.validate(grid);
  const auto rule = fem::gauss_rule(order);
  Vec z(grid.num_nodes(), 0.0);
  const double pre = -1.0 / (4.0 * std::numbers::pi * sigma_b);
  for (std::size_t e = 0; e < grid.num_elements(); ++e) {
    const auto nodes = grid.element(e);
    const auto& d = di.tensors[e];
    for (const auto& q : fem::element_quadrature(grid, e, rule)) {
      // grad_y 1/|x - y| = (x - y) / |x - y|^3
      const Point3 r{lead[0] - q.x[0], lead[1] - q.x[1], lead[2] - q.x[2]};
      const double dist = std::sqrt(dot3(r, r));
      if (!(dist > 0.0)) throw InvalidArgument("lead coincides with a quadrature point");
      const double inv3 = 1.0 / (dist * dist * dist);
      const Point3 kernel{r[0] * inv3, r[1] * inv3, r[2] * inv3};
      const Point3 dk = d.apply(kernel);  // D symmetric: D grad(phi) . k = grad(phi) . D k
      for (std::size_t l = 0; l < nodes.size(); ++l) z[nodes[l]] += pre * q.jxw * dot3(q.grad[l], dk);
    }
  }
  return z;
}

std::vector<Vec> lead_transfer_vectors(const fem::StructuredGrid& grid, const fem::ConductivityTensorField& di,
                                       const LeadSet& leads, int order) {
  leads.validate(grid);
  std::vector<Vec> out;
  out.reserve(leads.size());
  for (const auto& x : leads.positions) out.push_back(lead_transfer_vector(grid, di, x, leads.sigma_b, order));
  return out;
}

PecgRecorder::PecgRecorder(std::vector<Vec> transfer) : transfer_(std::move(transfer)), per_lead_(transfer_.size()) {}

void PecgRecorder::record(double t, std::span<const double> v) {
  times_.push_back(t);
  for (std::size_t i = 0; i < transfer_.size(); ++i) {
    const Vec& z = transfer_[i];
    if (z.size() != v.size()) throw InvalidArgument("transfer vector does not match the snapshot length");
    double s = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) s += z[k] * v[k];
    per_lead_[i].push_back(s);
  }
}

PecgSignal PecgRecorder::finish() const {
  PecgSignal s;
  s.n_leads = per_lead_.size();
  s.n_t = times_.size();
  s.t0 = times_.empty() ? 0.0 : times_.front();
  s.dt = times_.size() > 1 ? times_[1] - times_[0] : 0.0;
  for (std::size_t j = 1; j < times_.size(); ++j) {
    const double expected = s.t0 + s.dt * static_cast<double>(j);
    if (std::abs(times_[j] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
      throw InvalidArgument("snapshot times are not uniformly spaced");
    }
  }
  s.values.reserve(s.n_leads * s.n_t);
  for (const auto& lead : per_lead_) s.values.insert(s.values.end(), lead.begin(), lead.end());
  return s;
}

PecgSignal compute_pecg(const monodomain::Trajectory& trajectory, const std::vector<Vec>& transfer) {
  if (trajectory.times.size() != trajectory.snapshots.size()) throw InvalidArgument("malformed trajectory");
  PecgRecorder rec(transfer);
  for (std::size_t j = 0; j < trajectory.times.size(); ++j) rec.record(trajectory.times[j], trajectory.snapshots[j]);
  return rec.finish();
}

namespace {

void append_number(std::string& line, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  line.append(buf, static_cast<std::size_t>(n));
}

double parse_number(std::string_view field, std::size_t row) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("CSV row " + std::to_string(row) + ": cannot parse '" + std::string(field) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void write_signal_csv(std::ostream& out, const PecgSignal& s) {
  std::string line = "t";
  for (std::size_t i = 0; i < s.n_leads; ++i) line += ",lead_" + std::to_string(i);
  out << line << '\n';
  for (std::size_t j = 0; j < s.n_t; ++j) {
    line.clear();
    append_number(line, s.time(j));
    for (std::size_t i = 0; i < s.n_leads; ++i) {
      line += ',';
      append_number(line, s.at(i, j));
    }
    out << line << '\n';
  }
}

void write_signal_csv(const std::filesystem::path& path, const PecgSignal& s) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_signal_csv(out, s);
  if (!out) throw IoError("write failed: " + path.string());
}

PecgSignal read_signal_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty signal CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line);
  if (header.empty() || header[0] != "t" || header.size() < 2) {
    throw InvalidArgument("signal CSV header must start with t and name at least one lead");
  }
  const std::size_t n_leads = header.size() - 1;
  std::vector<double> times;
  std::vector<Vec> per_lead(n_leads);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw InvalidArgument("CSV row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(header.size()));
    }
    times.push_back(parse_number(fields[0], row));
    for (std::size_t i = 0; i < n_leads; ++i) per_lead[i].push_back(parse_number(fields[i + 1], row));
  }
  if (times.size() < 2) throw InvalidArgument("signal CSV needs at least two rows");
  PecgSignal s;
  s.n_leads = n_leads;
  s.n_t = times.size();
  s.t0 = times.front();
  s.dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (const auto& lead : per_lead) s.values.insert(s.values.end(), lead.begin(), lead.end());
  return s;
}

PecgSignal read_signal_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_signal_csv(in);
}

}  // namespace ecgli::pecg
