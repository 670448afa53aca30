#include "zsreg/result_document.hpp"

#include <array>
#include <iomanip>
#include <istream>
#include <ostream>

namespace zsreg {
namespace {

constexpr std::array<const char*, 6> kParamNames{"a11", "a12", "tx", "a21", "a22", "ty"};

void write_metrics(std::ostream& out, const char* prefix, const MetricReport& m) {
  out << prefix << ".dice = " << m.dice << '\n';
  out << prefix << ".ssim = " << m.ssim << '\n';
  out << prefix << ".mi = " << m.mi << '\n';
  out << prefix << ".mse = " << m.mse << '\n';
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_result_document(std::ostream& out, const ResultDocument& doc) {
  const auto precision = out.precision();
  out << std::setprecision(10);
  out << "schema = zsreg-result\n";
  out << "version = " << kResultSchemaVersion << '\n';
  for (std::size_t k = 0; k < 6; ++k) out << "params." << kParamNames[k] << " = " << doc.result.params[k] << '\n';
  write_metrics(out, "before", doc.result.before);
  write_metrics(out, "after", doc.result.after);
  out << "correspondences = " << doc.result.correspondences << '\n';
  if (doc.iterations) out << "iterations = " << *doc.iterations << '\n';
  const StageTimings& t = doc.result.timings;
  out << "timing.preprocess_ms = " << t.preprocess_ms << '\n';
  out << "timing.conv_ms = " << t.conv_ms << '\n';
  out << "timing.com_ms = " << t.com_ms << '\n';
  out << "timing.estimate_ms = " << t.estimate_ms << '\n';
  out << "timing.warp_ms = " << t.warp_ms << '\n';
  out << "timing.metrics_ms = " << t.metrics_ms << '\n';
  out << "timing.total_ms = " << t.total_ms() << '\n';
  out << "wall_ms = " << doc.wall_ms << '\n';
  if (doc.uncertainty) {
    out << "uncertainty.trials = " << doc.uncertainty->n_trials << '\n';
    for (std::size_t k = 0; k < 6; ++k) {
      out << "uncertainty.var." << kParamNames[k] << " = " << doc.uncertainty->param_variance[k] << '\n';
    }
  }
  out.precision(precision);
}

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
  }
  return kv;
}

}  // namespace zsreg
