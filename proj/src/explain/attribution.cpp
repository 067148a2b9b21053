#include "civ/explain/attribution.hpp"

#include <algorithm>
#include <cmath>

#include "civ/error.hpp"

namespace civ {

namespace {

struct Folded {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;  // unnormalized, one per record
};

Folded fold(const MlpParams& model, const Matrix& records, const Encoding& encoding,
            const std::vector<std::size_t>& columns) {
  if (records.cols() != model.spec.input_dim) throw ShapeError("attribute: record width does not match the model");
  std::size_t width = 0;
  Folded out;
  for (std::size_t c : columns) {
    width += encoding.columns.at(c).width;
    out.names.push_back(encoding.columns[c].name);
  }
  if (width != records.cols()) throw ShapeError("attribute: columns do not cover the model input");
  if (records.rows() == 0) return out;

  const ForwardResult fwd = forward(model, records);
  Matrix d_pred(fwd.prediction.rows(), fwd.prediction.cols());
  for (std::size_t i = 0; i < d_pred.rows(); ++i) {
    const auto p = fwd.prediction.row(i);
    const auto target = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    d_pred(i, model.spec.head.kind == HeadKind::regression ? 0 : target) = 1.0;
  }
  const Matrix grad = input_gradient(model, fwd.cache, {Matrix{}, std::move(d_pred)});
  for (std::size_t i = 0; i < records.rows(); ++i) {
    std::vector<double> imp(columns.size(), 0.0);
    std::size_t d = 0;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      for (std::size_t k = 0; k < encoding.columns[columns[j]].width; ++k, ++d) {
        imp[j] += std::abs(grad(i, d) * records(i, d));
      }
    }
    out.rows.push_back(std::move(imp));
  }
  return out;
}

FeatureAttribution normalized(std::vector<std::string> names, std::vector<double> imp) {
  FeatureAttribution a;
  a.features = std::move(names);
  const double top = imp.empty() ? 0.0 : *std::max_element(imp.begin(), imp.end());
  if (top > 0.0) {
    for (double& v : imp) v /= top;
  } else {
    std::fill(imp.begin(), imp.end(), 0.0);
    a.zero_gradient = true;
  }
  a.importance = std::move(imp);
  return a;
}

}  // namespace

FeatureAttribution attribute(const MlpParams& model, std::span<const double> record, const Encoding& encoding,
                             const std::vector<std::size_t>& columns) {
  const Matrix one(1, record.size(), std::vector<double>(record.begin(), record.end()));
  return attribute_rows(model, one, encoding, columns).front();
}

std::vector<FeatureAttribution> attribute_rows(const MlpParams& model, const Matrix& records, const Encoding& encoding,
                                               const std::vector<std::size_t>& columns) {
  Folded f = fold(model, records, encoding, columns);
  std::vector<FeatureAttribution> out;
  out.reserve(f.rows.size());
  for (auto& imp : f.rows) out.push_back(normalized(f.names, std::move(imp)));
  return out;
}

FeatureAttribution attribute_mean(const MlpParams& model, const Matrix& records, const Encoding& encoding,
                                  const std::vector<std::size_t>& columns) {
  Folded f = fold(model, records, encoding, columns);
  std::vector<double> mean(f.names.size(), 0.0);
  for (const auto& imp : f.rows) {
    for (std::size_t j = 0; j < imp.size(); ++j) mean[j] += imp[j] / static_cast<double>(f.rows.size());
  }
  return normalized(std::move(f.names), std::move(mean));
}

}  // namespace civ
