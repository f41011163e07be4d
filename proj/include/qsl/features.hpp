#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsl/binary_io.hpp"
#include "qsl/random.hpp"

namespace qsl {

enum class FeatureKind : std::uint8_t { Raw = 0, Rff = 1, RffConcat = 2, WithMeasurements = 3 };

/// Explicit feature map applied to (standardized) Hamiltonian parameters,
/// optionally followed by a flattened measurement block.
///
/// The random Fourier part is x -> sqrt(2/d) cos(W x + b) with W ~ N(0,1)
/// and b ~ U[0, 2pi), d = rff_dim. W and b are regenerated from `seed`, so a
/// spec serializes as its dimensions and seed.
struct FeatureSpec {
  FeatureKind kind = FeatureKind::Raw;
  int input_dim = 0;
  int rff_dim = 0;
  std::uint64_t seed = 0;
  /// Length of the appended measurement block (WithMeasurements only).
  int measurement_dim = 0;
  /// Multiplier applied to each measurement byte (1/5 for shadows, 1 for bits).
  double measurement_scale = 1.0;
  Eigen::MatrixXd frequencies;  // rff_dim x input_dim
  Eigen::VectorXd phases;       // rff_dim

  int output_dim() const noexcept;
  void write(ByteWriter& w) const;
  static FeatureSpec read(ByteReader& r);
};

FeatureSpec make_rff(int input_dim, int output_dim, Rng& rng);

/// Builds a spec of the given kind. For RffConcat the random block has the
/// same width as x, so the output is [x | rff(x)] with 2 * input_dim entries.
FeatureSpec make_feature_spec(FeatureKind kind, int input_dim, std::uint64_t seed,
                              int measurement_dim = 0, double measurement_scale = 1.0);

/// Errors on dimension mismatch, or when v is missing/present inconsistently
/// with the spec kind.
Eigen::VectorXd featurize(const FeatureSpec& spec, std::span<const double> x,
                          std::span<const std::uint8_t> v = {});

/// Integer vectors k over `dim` coordinates with ||k||_2 <= cutoff.
std::vector<std::vector<int>> dirichlet_frequencies(int dim, int cutoff);

/// [cos(pi k.x), sin(pi k.x)] over all enumerated k, using the leading
/// min(len(x), 4) coordinates; inner products reproduce
/// sum_k cos(pi k.(x - x')).
Eigen::VectorXd dirichlet_features(std::span<const double> x, int cutoff = 3);

/// Per-column z-scoring fitted on training inputs. Constant columns keep
/// scale 1.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& rows);
  static Standardizer identity(int dim);
  Eigen::VectorXd apply(std::span<const double> x) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
  void write(ByteWriter& w) const;
  static Standardizer read(ByteReader& r);
};

}  // namespace qsl
