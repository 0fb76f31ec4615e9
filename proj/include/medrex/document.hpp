#pragma once

#include <string>

namespace medrex {

enum class DatasetTag { n2c2, ade, other };

std::string_view dataset_tag_name(DatasetTag tag);
DatasetTag dataset_tag_from_name(std::string_view name);

struct Document {
  std::string doc_id;
  std::string text;
  DatasetTag dataset_tag = DatasetTag::other;

  bool operator==(const Document&) const = default;
};

}  // namespace medrex
