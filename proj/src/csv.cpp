#include "momsens/csv.hpp"

#include <cmath>
#include <cstdio>

namespace momsens::csv {

namespace {

// Quote a field only when it needs it.
std::string field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string number(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_metadata(std::ostream& out, const Metadata& meta) {
  for (const auto& [key, value] : meta) out << "# " << key << ": " << value << '\n';
}

void write_moments(std::ostream& out, const Trajectory& traj, const std::vector<MomentOutput>& outputs) {
  out << "t";
  for (const auto& o : outputs) out << ',' << field(o.name);
  out << '\n';
  for (std::size_t t = 0; t < traj.size(); ++t) {
    out << number(traj.times[t]);
    for (const auto& o : outputs) out << ',' << number(traj.at(t, o.state_index));
    out << '\n';
  }
}

void write_oracle(std::ostream& out, const Trajectory& oracle, const Trajectory& closure,
                  const std::vector<MomentOutput>& outputs) {
  out << "t";
  for (const auto& o : outputs) out << ',' << field(o.name);
  for (const auto& o : outputs) out << ',' << field("diff_" + o.name);
  out << '\n';
  for (std::size_t t = 0; t < oracle.size(); ++t) {
    out << number(oracle.times[t]);
    for (const auto& o : outputs) out << ',' << number(oracle.at(t, o.state_index));
    for (const auto& o : outputs)
      out << ',' << number(oracle.at(t, o.state_index) - closure.at(t, o.state_index));
    out << '\n';
  }
}

void write_sweep(std::ostream& out, const SweepResult& sweep, const std::vector<MomentOutput>& outputs,
                 const std::vector<std::string>& parameters) {
  out << "t,output,perturbed,value\n";
  auto block = [&](const Trajectory& traj, const std::string& label) {
    for (std::size_t t = 0; t < traj.size(); ++t)
      for (const auto& o : outputs)
        out << number(traj.times[t]) << ',' << field(o.name) << ',' << field(label) << ','
            << number(traj.at(t, o.state_index)) << '\n';
  };
  block(sweep.nominal, "nominal");
  for (std::size_t p = 0; p < sweep.perturbed.size(); ++p) block(sweep.perturbed[p], parameters[p]);
}

void write_local(std::ostream& out, const LocalSensitivityReport& report) {
  out << "t,output,param,S_raw,S_normalized\n";
  const auto& raw = report.raw;
  for (std::size_t t = 0; t < raw.times.size(); ++t)
    for (std::size_t o = 0; o < raw.outputs.size(); ++o)
      for (std::size_t p = 0; p < raw.parameters.size(); ++p)
        out << number(raw.times[t]) << ',' << field(raw.outputs[o]) << ',' << field(raw.parameters[p]) << ','
            << number(raw.at(t, p, o)) << ',' << number(report.normalized.at(t, p, o)) << '\n';
}

void write_sobol(std::ostream& out, const SobolReport& report) {
  out << "t,output,param,S_first,S_total,estimator,n,seed\n";
  const std::string estimator = to_string(report.estimator);
  for (std::size_t t = 0; t < report.times.size(); ++t)
    for (std::size_t o = 0; o < report.outputs.size(); ++o)
      for (std::size_t p = 0; p < report.parameters.size(); ++p)
        out << number(report.times[t]) << ',' << field(report.outputs[o]) << ',' << field(report.parameters[p])
            << ',' << number(report.first_at(t, o, p)) << ',' << number(report.total_at(t, o, p)) << ','
            << estimator << ',' << report.n << ',' << report.seed << '\n';
}

}  // namespace momsens::csv
