#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mvpt::conditioning {

enum class Source : std::uint8_t { kRaw, kDomainCentered };
// How the domain set is subtracted: its mean (default) or its raw sum.
enum class Centering : std::uint8_t { kMean, kSum };

std::string_view to_string(Source s);
Source parse_source(std::string_view text);

struct AttributeVector {
  std::string name;
  std::vector<float> values;
  Source source = Source::kRaw;
  std::size_t n_examples = 0;

  std::size_t dim() const { return values.size(); }
};

// y_a = mean of the examples. With a non-empty domain set,
// y_a' = y_a - mean(domain) (or - sum(domain) with Centering::kSum).
// Throws ValueError for no examples and ShapeError for mixed dimensions.
AttributeVector attribute_vector(std::string name, const std::vector<std::vector<float>>& examples,
                                 const std::vector<std::vector<float>>& domain = {},
                                 Centering centering = Centering::kMean);

struct Operation {
  int sign = +1;  // +1 adds, -1 subtracts
  AttributeVector attribute;
};

// Applies the operations left to right: y += sign * attribute.
std::vector<float> condition(std::span<const float> query, const std::vector<Operation>& ops);

// {name, dim, values[], source, n_examples}
void save_attribute(const std::filesystem::path& path, const AttributeVector& attr);
AttributeVector load_attribute(const std::filesystem::path& path);

}  // namespace mvpt::conditioning
