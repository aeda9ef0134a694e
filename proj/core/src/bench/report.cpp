#include "twoview/bench/report.hpp"

#include <json.hpp>

#include "twoview/error.hpp"

namespace twoview::bench {

namespace {

using nlohmann::json;

template <typename T>
void put_optional(json& j, const char* key, const std::optional<T>& value) {
  if (value) j[key] = *value;
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json metrics_json(const MetricSet& m) {
  json j;
  json auc = json::object();
  for (const auto& [threshold, value] : m.auc_at) auc[std::to_string(threshold)] = value;
  j["auc"] = auc;
  put_optional(j, "f1", m.f1);
  put_optional(j, "median_epi_err", m.median_epi_err);
  put_optional(j, "mean_runtime_ms", m.mean_runtime_ms);
  return j;
}

MetricSet metrics_from(const json& j) {
  MetricSet m;
  for (const auto& [key, value] : j.at("auc").items()) {
    m.auc_at[std::stoi(key)] = value.get<double>();
  }
  m.f1 = get_optional<double>(j, "f1");
  m.median_epi_err = get_optional<double>(j, "median_epi_err");
  m.mean_runtime_ms = get_optional<double>(j, "mean_runtime_ms");
  return m;
}

json pair_json(const PairRecord& r) {
  json j;
  j["id"] = r.id;
  j["ok"] = r.ok;
  if (!r.error.empty()) j["error"] = r.error;
  if (!r.model.empty()) j["model"] = r.model;
  put_optional(j, "pose_error_deg", r.pose_error_deg);
  put_optional(j, "f1", r.f1);
  put_optional(j, "median_epi_err", r.median_epi_err);
  j["inliers"] = r.inliers;
  j["iterations"] = r.iterations;
  j["quality"] = r.quality;
  put_optional(j, "estimation_ms", r.estimation_ms);
  put_optional(j, "total_ms", r.total_ms);
  return j;
}

PairRecord pair_from(const json& j) {
  PairRecord r;
  r.id = j.at("id").get<std::string>();
  r.ok = j.at("ok").get<bool>();
  r.error = j.value("error", std::string{});
  if (j.contains("model")) r.model = j.at("model").get<std::vector<double>>();
  r.pose_error_deg = get_optional<double>(j, "pose_error_deg");
  r.f1 = get_optional<double>(j, "f1");
  r.median_epi_err = get_optional<double>(j, "median_epi_err");
  r.inliers = j.at("inliers").get<std::size_t>();
  r.iterations = j.at("iterations").get<int>();
  r.quality = j.at("quality").get<double>();
  r.estimation_ms = get_optional<double>(j, "estimation_ms");
  r.total_ms = get_optional<double>(j, "total_ms");
  return r;
}

}  // namespace

std::string to_json(const PairRecord& record) { return pair_json(record).dump(2); }

std::string to_json(const BenchmarkReport& report) {
  json methods = json::array();
  for (const MethodReport& m : report.methods) {
    json j;
    j["sampler"] = m.sampler;
    j["problem"] = m.problem;
    j["metrics"] = metrics_json(m.metrics);
    j["evaluated"] = m.evaluated;
    j["failed"] = m.failed;
    j["mean_inliers"] = m.mean_inliers;
    put_optional(j, "median_pose_error_deg", m.median_pose_error_deg);
    json pairs = json::array();
    for (const PairRecord& r : m.pairs) pairs.push_back(pair_json(r));
    j["pairs"] = pairs;
    methods.push_back(j);
  }
  json dropped = json::array();
  for (const LoadFailure& f : report.dropped) {
    dropped.push_back({{"id", f.id}, {"error", f.message}});
  }
  json root;
  root["methods"] = methods;
  root["dropped"] = dropped;
  return root.dump(2) + "\n";
}

BenchmarkReport report_from_json(const std::string& text) {
  try {
    const json root = json::parse(text);
    BenchmarkReport report;
    for (const json& j : root.at("methods")) {
      MethodReport m;
      m.sampler = j.at("sampler").get<std::string>();
      m.problem = j.at("problem").get<std::string>();
      m.metrics = metrics_from(j.at("metrics"));
      m.evaluated = j.at("evaluated").get<std::size_t>();
      m.failed = j.at("failed").get<std::size_t>();
      m.mean_inliers = j.at("mean_inliers").get<double>();
      m.median_pose_error_deg = get_optional<double>(j, "median_pose_error_deg");
      for (const json& p : j.at("pairs")) m.pairs.push_back(pair_from(p));
      report.methods.push_back(std::move(m));
    }
    for (const json& f : root.at("dropped")) {
      report.dropped.push_back({f.at("id").get<std::string>(), f.at("error").get<std::string>()});
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataError, std::string("malformed report: ") + e.what());
  }
}

}  // namespace twoview::bench
