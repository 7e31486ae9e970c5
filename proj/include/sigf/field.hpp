#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "sigf/lattice.hpp"

namespace sigf {

/// One realization of a centred field on V_N, row-major by GridSpec::index.
struct FieldSample {
  GridSpec spec{2};
  Eigen::VectorXd heights;
  std::optional<Eigen::VectorXd> underlying;  // DGFF draw phi when heights = L phi
  std::string sampler;

  double operator()(Vertex v) const { return heights(Eigen::Index(spec.index(v))); }
  double phi(Vertex v) const { return (*underlying)(Eigen::Index(spec.index(v))); }
  bool has_underlying() const { return underlying.has_value(); }

  double max() const { return heights.maxCoeff(); }
  Vertex argmax() const {
    Eigen::Index i;
    heights.maxCoeff(&i);
    return spec.vertex(std::size_t(i));
  }
};

}  // namespace sigf
