#include "mvpt/evalkit/association.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "mvpt/error.hpp"
#include "mvpt/objective/losses.hpp"

namespace mvpt::evalkit {

namespace {

std::vector<std::string> label_set(const std::vector<LabeledEmbedding>& items) {
  std::set<std::string> s;
  for (const auto& i : items) s.insert(i.label);
  return {s.begin(), s.end()};
}

std::map<std::string, std::size_t> index_of(const std::vector<std::string>& names) {
  std::map<std::string, std::size_t> m;
  for (std::size_t i = 0; i < names.size(); ++i) m[names[i]] = i;
  return m;
}

}  // namespace

AssociationMatrix association_matrix(const std::vector<LabeledEmbedding>& queries,
                                     const std::vector<LabeledEmbedding>& targets,
                                     std::vector<std::string> query_classes,
                                     std::vector<std::string> target_classes) {
  if (queries.empty() || targets.empty()) throw ValueError("association_matrix: no queries or targets");
  if (query_classes.empty()) query_classes = label_set(queries);
  if (target_classes.empty()) target_classes = label_set(targets);
  const auto qi = index_of(query_classes), ti = index_of(target_classes);

  std::vector<std::size_t> per_target(target_classes.size(), 0), per_query(query_classes.size(), 0);
  for (const auto& t : targets) {
    const auto it = ti.find(t.label);
    if (it == ti.end()) throw ValueError("association_matrix: unknown target class '" + t.label + "'");
    ++per_target[it->second];
  }
  for (const auto& q : queries) {
    const auto it = qi.find(q.label);
    if (it == qi.end()) throw ValueError("association_matrix: unknown query class '" + q.label + "'");
    ++per_query[it->second];
  }
  for (std::size_t i = 0; i < target_classes.size(); ++i) {
    if (per_target[i] == 0) throw ValueError("association_matrix: empty target class '" + target_classes[i] + "'");
    if (per_target[i] != per_target[0]) {
      throw ValueError("association_matrix: target classes are unbalanced ('" + target_classes[i] + "' has " +
                       std::to_string(per_target[i]) + ", '" + target_classes[0] + "' has " +
                       std::to_string(per_target[0]) + ")");
    }
  }
  for (std::size_t i = 0; i < query_classes.size(); ++i) {
    if (per_query[i] == 0) throw ValueError("association_matrix: empty query class '" + query_classes[i] + "'");
  }

  AssociationMatrix out;
  out.rows = target_classes;
  out.columns = query_classes;
  out.counts = Matrix(target_classes.size(), query_classes.size());
  for (const auto& q : queries) {
    std::size_t best = 0;
    double best_score = -2.0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      if (targets[j].vector.size() != q.vector.size()) throw ShapeError("association_matrix: dimension mismatch");
      const double s = objective::cosine_similarity(q.vector, targets[j].vector);
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    out.counts(ti.at(targets[best].label), qi.at(q.label)) += 1.0f;
  }
  out.percent = Matrix(out.counts.rows, out.counts.cols);
  for (std::size_t c = 0; c < out.counts.cols; ++c) {
    double total = 0.0;
    for (std::size_t r = 0; r < out.counts.rows; ++r) total += out.counts(r, c);
    for (std::size_t r = 0; r < out.counts.rows; ++r) {
      out.percent(r, c) = static_cast<float>(100.0 * out.counts(r, c) / total);
    }
  }
  return out;
}

}  // namespace mvpt::evalkit
