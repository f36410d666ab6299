#include "mvpt/evalkit/report.hpp"

#include <cstdio>

#include "../binary_io.hpp"

namespace mvpt::evalkit {

using nlohmann::json;

namespace {

json direction_json(const DirectionReport& d) {
  json recall = json::object();
  for (const auto& [k, v] : d.recall) recall["R@" + std::to_string(k)] = v;
  return {{"median_rank", d.median_rank}, {"recall", recall}, {"ranks", d.ranks}};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

json to_json(const RetrievalReport& r) {
  json doc = {{"config",
               {{"pool_size", r.config.pool_size},
                {"ks", r.config.ks},
                {"level", std::string(to_string(r.config.level))},
                {"direction", std::string(to_string(r.config.direction))},
                {"seed", r.config.seed},
                {"window", r.config.window}}},
              {"model_id", r.model_id}};
  if (r.v2m) doc["v2m"] = direction_json(*r.v2m);
  if (r.m2v) doc["m2v"] = direction_json(*r.m2v);
  if (!r.length_classes.empty()) {
    json classes = json::array();
    for (const auto& [len, cls] : r.length_classes) {
      classes.push_back({{"length", len}, {"queries", cls.queries}, {"mean_pool", cls.mean_pool}});
    }
    doc["length_classes"] = classes;
    doc["skipped_queries"] = r.skipped_queries;
  }
  if (!r.config.ks.empty()) doc["average_recall"] = r.average_recall(r.config.ks.back());
  return doc;
}

json to_json(const std::vector<SweepPoint>& sweep, std::string_view parameter_name) {
  json points = json::array();
  for (const auto& p : sweep) {
    json point = {{std::string(parameter_name), p.parameter}, {"R@10", p.recall10}};
    if (p.length > 0) point["segments"] = p.length;
    json summary = json::object();
    if (p.report.v2m) summary["v2m_median_rank"] = p.report.v2m->median_rank;
    if (p.report.m2v) summary["m2v_median_rank"] = p.report.m2v->median_rank;
    point["summary"] = summary;
    points.push_back(point);
  }
  return {{"points", points}};
}

json to_json(const AssociationMatrix& m) {
  json rows = json::array(), counts = json::array();
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    json row = json::array(), crow = json::array();
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
      row.push_back(m.percent(r, c));
      crow.push_back(m.counts(r, c));
    }
    rows.push_back(row);
    counts.push_back(crow);
  }
  return {{"rows", m.rows}, {"columns", m.columns}, {"percent", rows}, {"counts", counts}};
}

std::string report_csv(const std::vector<std::pair<std::string, RetrievalReport>>& rows) {
  if (rows.empty()) return "";
  const auto& ks = rows.front().second.config.ks;
  std::string out = "config";
  for (const char* dir : {"v2m", "m2v"}) {
    out += std::string(",") + dir + "_MedR";
    for (auto k : ks) out += std::string(",") + dir + "_R@" + std::to_string(k);
  }
  out += ",avg_R@" + std::to_string(ks.empty() ? 0 : ks.back()) + "\n";
  for (const auto& [name, r] : rows) {
    out += name;
    for (const auto* d : {&r.v2m, &r.m2v}) {
      if (d->has_value()) {
        out += "," + std::to_string((*d)->median_rank);
        for (auto k : ks) out += "," + fmt((*d)->recall.at(k));
      } else {
        out += ",";
        for (std::size_t i = 0; i < ks.size(); ++i) out += ",";
      }
    }
    out += "," + (ks.empty() ? std::string() : fmt(r.average_recall(ks.back()))) + "\n";
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& sweep, std::string_view parameter_name) {
  std::string out = std::string(parameter_name) + ",R@10\n";
  for (const auto& p : sweep) out += fmt(p.parameter) + "," + fmt(p.recall10) + "\n";
  return out;
}

std::string association_csv(const AssociationMatrix& m) {
  std::string out = "attribute";
  for (const auto& c : m.columns) out += "," + c;
  out += "\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    out += m.rows[r];
    for (std::size_t c = 0; c < m.columns.size(); ++c) out += "," + fmt(m.percent(r, c));
    out += "\n";
  }
  return out;
}

void write_json(const std::filesystem::path& path, const json& doc) { detail::write_text(path, doc.dump(2) + "\n"); }

void write_text_file(const std::filesystem::path& path, const std::string& text) { detail::write_text(path, text); }

}  // namespace mvpt::evalkit
