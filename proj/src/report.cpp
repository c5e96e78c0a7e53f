#include "proxyhash/report.hpp"

#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "proxyhash/binary_io.hpp"

namespace proxyhash {

using nlohmann::json;

const RetrievalReport& ExperimentReport::run(const std::string& name) const {
  for (const auto& r : runs)
    if (r.name == name) return r;
  throw std::out_of_range("report has no run named '" + name + "'");
}

namespace {

json histogram_json(const Histogram& h) { return {{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}}; }

Histogram histogram_from(const json& j) {
  Histogram h;
  h.lo = j.at("lo").get<double>();
  h.hi = j.at("hi").get<double>();
  h.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  return h;
}

json run_json(const RetrievalReport& r) {
  json j = {
      {"name", r.name},
      {"map", r.map},
      {"queries", r.queries},
      {"queries_without_relevant", r.queries_without_relevant},
      {"per_query_ap", r.per_query_ap},
      {"precision_at_k", {{"k", r.ks}, {"precision", r.precision}}},
      {"margins", r.margins},
      {"mean_binarization_error", r.mean_binarization_error},
      {"weight_histogram", histogram_json(r.weight_histogram)},
      {"binarization_histogram", histogram_json(r.binarization_histogram)},
      {"duplicate_proxies", r.duplicate_proxies},
      {"loss_curve", r.loss_curve},
  };
  if (r.classifier_accuracy) j["classifier_accuracy"] = *r.classifier_accuracy;
  return j;
}

RetrievalReport run_from(const json& j) {
  RetrievalReport r;
  r.name = j.at("name").get<std::string>();
  r.map = j.at("map").get<double>();
  r.queries = j.at("queries").get<std::size_t>();
  r.queries_without_relevant = j.at("queries_without_relevant").get<std::size_t>();
  r.per_query_ap = j.at("per_query_ap").get<std::vector<double>>();
  r.ks = j.at("precision_at_k").at("k").get<std::vector<std::size_t>>();
  r.precision = j.at("precision_at_k").at("precision").get<std::vector<double>>();
  r.margins = j.at("margins").get<std::vector<double>>();
  r.mean_binarization_error = j.at("mean_binarization_error").get<double>();
  r.weight_histogram = histogram_from(j.at("weight_histogram"));
  r.binarization_histogram = histogram_from(j.at("binarization_histogram"));
  r.duplicate_proxies = j.at("duplicate_proxies").get<int>();
  if (j.contains("classifier_accuracy")) r.classifier_accuracy = j.at("classifier_accuracy").get<double>();
  r.loss_curve = j.at("loss_curve").get<std::vector<double>>();
  return r;
}

void check_reportable(const ExperimentReport& report) {
  for (const auto& r : report.runs) {
    if (r.queries == 0 || r.per_query_ap.empty()) throw std::invalid_argument("run '" + r.name + "' has an empty query set");
    if (r.map < 0.0 || r.map > 1.0) throw std::invalid_argument("run '" + r.name + "' has mAP outside [0, 1]");
    for (double p : r.precision)
      if (p < 0.0 || p > 1.0) throw std::invalid_argument("run '" + r.name + "' has precision outside [0, 1]");
  }
}

std::filesystem::path sibling(const std::filesystem::path& path, const std::string& suffix) {
  auto out = path;
  out.replace_filename(path.stem().string() + suffix);
  return out;
}

void write_histogram_rows(std::ostringstream& os, const std::string& run, const std::string& which, const Histogram& h) {
  const double width = (h.hi - h.lo) / static_cast<double>(h.counts.size());
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const json lo = h.lo + width * static_cast<double>(b);
    const json hi = h.lo + width * static_cast<double>(b + 1);
    os << run << ',' << which << ',' << lo.dump() << ',' << hi.dump() << ',' << h.counts[b] << '\n';
  }
}

}  // namespace

std::string to_json_text(const ExperimentReport& report) {
  json runs = json::array();
  for (const auto& r : report.runs) runs.push_back(run_json(r));
  const json j = {
      {"schema_version", kReportSchemaVersion},
      {"experiment", report.experiment},
      {"config", report.config},
      {"runs", runs},
      {"warnings", report.warnings},
  };
  return j.dump(2) + "\n";
}

ExperimentReport parse_report(const std::string& json_text) {
  const json j = json::parse(json_text);
  const int version = j.at("schema_version").get<int>();
  if (version != kReportSchemaVersion) {
    throw std::runtime_error("unsupported report schema version " + std::to_string(version));
  }
  ExperimentReport report;
  report.experiment = j.at("experiment").get<std::string>();
  report.config = j.at("config").get<std::map<std::string, std::string>>();
  for (const auto& r : j.at("runs")) report.runs.push_back(run_from(r));
  report.warnings = j.at("warnings").get<std::vector<std::string>>();
  return report;
}

void emit_report(const ExperimentReport& report, const std::filesystem::path& path) {
  check_reportable(report);
  const std::string text = to_json_text(report);

  std::ostringstream hist;
  hist << "run,histogram,bin_lo,bin_hi,count\n";
  for (const auto& r : report.runs) {
    write_histogram_rows(hist, r.name, "proxy_weight", r.weight_histogram);
    write_histogram_rows(hist, r.name, "binarization_error", r.binarization_histogram);
  }
  std::ostringstream prec;
  prec << "run,k,precision\n";
  for (const auto& r : report.runs)
    for (std::size_t i = 0; i < r.ks.size(); ++i) prec << r.name << ',' << r.ks[i] << ',' << json(r.precision[i]).dump() << '\n';

  write_text_atomic(sibling(path, "_histograms.csv"), hist.str());
  write_text_atomic(sibling(path, "_precision.csv"), prec.str());
  // JSON last: its presence marks a complete report.
  write_text_atomic(path, text);
}

ExperimentReport read_report(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_report(std::string(bytes.begin(), bytes.end()));
}

}  // namespace proxyhash
