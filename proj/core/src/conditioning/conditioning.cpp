#include "mvpt/conditioning/conditioning.hpp"

#include <cmath>
#include <json.hpp>

#include "../binary_io.hpp"
#include "mvpt/error.hpp"

namespace mvpt::conditioning {

std::string_view to_string(Source s) { return s == Source::kRaw ? "raw" : "domain-centered"; }

Source parse_source(std::string_view text) {
  if (text == "raw") return Source::kRaw;
  if (text == "domain-centered") return Source::kDomainCentered;
  throw FormatError("unknown attribute source '" + std::string(text) + "'");
}

namespace {

std::vector<double> column_sum(const std::vector<std::vector<float>>& rows, std::size_t dim) {
  std::vector<double> sum(dim, 0.0);
  for (const auto& r : rows) {
    if (r.size() != dim) {
      throw ShapeError("attribute_vector: embedding of dim " + std::to_string(r.size()) + ", expected " +
                       std::to_string(dim));
    }
    for (std::size_t i = 0; i < dim; ++i) sum[i] += r[i];
  }
  return sum;
}

}  // namespace

AttributeVector attribute_vector(std::string name, const std::vector<std::vector<float>>& examples,
                                 const std::vector<std::vector<float>>& domain, Centering centering) {
  if (examples.empty()) throw ValueError("attribute_vector: no examples for '" + name + "'");
  const std::size_t dim = examples.front().size();
  auto mean = column_sum(examples, dim);
  for (auto& v : mean) v /= static_cast<double>(examples.size());
  AttributeVector out;
  out.name = std::move(name);
  out.n_examples = examples.size();
  if (!domain.empty()) {
    auto shift = column_sum(domain, dim);
    if (centering == Centering::kMean) {
      for (auto& v : shift) v /= static_cast<double>(domain.size());
    }
    for (std::size_t i = 0; i < dim; ++i) mean[i] -= shift[i];
    out.source = Source::kDomainCentered;
  }
  out.values.assign(mean.begin(), mean.end());
  for (float v : out.values) {
    if (!std::isfinite(v)) throw ValueError("attribute_vector: non-finite result for '" + out.name + "'");
  }
  return out;
}

std::vector<float> condition(std::span<const float> query, const std::vector<Operation>& ops) {
  std::vector<float> y(query.begin(), query.end());
  for (const auto& op : ops) {
    if (op.attribute.dim() != y.size()) {
      throw ShapeError("condition: attribute '" + op.attribute.name + "' has dim " +
                       std::to_string(op.attribute.dim()) + ", query has " + std::to_string(y.size()));
    }
    if (op.sign != 1 && op.sign != -1) throw ValueError("condition: sign must be +1 or -1");
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = op.sign > 0 ? y[i] + op.attribute.values[i] : y[i] - op.attribute.values[i];
    }
  }
  return y;
}

void save_attribute(const std::filesystem::path& path, const AttributeVector& attr) {
  nlohmann::json doc = {{"name", attr.name},
                        {"dim", attr.dim()},
                        {"values", attr.values},
                        {"source", std::string(to_string(attr.source))},
                        {"n_examples", attr.n_examples}};
  detail::write_text(path, doc.dump(2) + "\n");
}

AttributeVector load_attribute(const std::filesystem::path& path) {
  try {
    const auto doc = nlohmann::json::parse(detail::read_text(path));
    AttributeVector a;
    a.name = doc.at("name").get<std::string>();
    a.values = doc.at("values").get<std::vector<float>>();
    a.source = parse_source(doc.at("source").get<std::string>());
    a.n_examples = doc.at("n_examples").get<std::size_t>();
    if (doc.at("dim").get<std::size_t>() != a.values.size()) {
      throw FormatError("dim does not match the number of values");
    }
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("attribute file '" + path.string() + "': " + e.what());
  } catch (const FormatError& e) {
    throw FormatError("attribute file '" + path.string() + "': " + e.what());
  }
}

}  // namespace mvpt::conditioning
