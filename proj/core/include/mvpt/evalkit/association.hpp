#pragma once

#include <string>
#include <vector>

#include "mvpt/numcore/matrix.hpp"

namespace mvpt::evalkit {

struct LabeledEmbedding {
  std::vector<float> vector;
  std::string label;
};

struct AssociationMatrix {
  std::vector<std::string> rows;     // attribute classes
  std::vector<std::string> columns;  // query labels (genres)
  Matrix counts;                     // rows x columns, raw top-1 counts
  Matrix percent;                    // each column sums to 100
};

// For every query, the top-1 target by cosine similarity (first wins ties)
// adds one count at (target label, query label). Classes are the sorted label
// sets unless given explicitly; a class with no members is an error, as are
// unbalanced target classes.
AssociationMatrix association_matrix(const std::vector<LabeledEmbedding>& queries,
                                     const std::vector<LabeledEmbedding>& targets,
                                     std::vector<std::string> query_classes = {},
                                     std::vector<std::string> target_classes = {});

}  // namespace mvpt::evalkit
