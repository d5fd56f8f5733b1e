#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "rotsync/errors.hpp"

namespace rotsync {

using Matrix = Eigen::MatrixXd;

/// Which connected-component structure the blocks live on.
enum class Group { Orthogonal, SpecialOrthogonal };

std::string group_name(Group g);
Group parse_group(const std::string& token);

inline constexpr double kOrthTol = 1e-10;     // ||B^T B - I||_F per block
inline constexpr double kSkewTol = 1e-12;     // ||E + E^T||_F per block
inline constexpr double kHorizontalTol = 1e-10;  // ||sum_i E_i||_F <= tol * n

/// A point of O(d)^n or SO(d)^n stored as n stacked d x d blocks (nd x d).
struct RotationStack {
  Matrix blocks;  // nd x d
  int n = 0;
  int d = 0;
  Group group = Group::SpecialOrthogonal;

  RotationStack() = default;
  RotationStack(Matrix m, int n_, int d_, Group g);

  Eigen::Ref<const Matrix> block(int i) const {
    return blocks.middleRows(i * d, d);
  }
  Eigen::Ref<Matrix> block(int i) { return blocks.middleRows(i * d, d); }

  /// Largest blockwise orthogonality residual max_i ||B_i^T B_i - I||_F.
  double orthogonality_residual() const;

  /// Throws InvariantViolation if some block is off the group.
  void check_valid() const;
};

/// Stacked skew-symmetric blocks E = [E_1; ...; E_n], the intrinsic
/// representation of a tangent vector. Each block is re-skewed at
/// construction; inputs further than kSkewTol from skew are rejected.
struct SkewStack {
  Matrix blocks;  // nd x d, each block exactly skew
  int n = 0;
  int d = 0;
  bool horizontal = false;  // sum_i E_i = 0 claimed (and checked) when set

  SkewStack() = default;
  SkewStack(const Matrix& m, int n_, int d_, bool horizontal_ = false);

  Eigen::Ref<const Matrix> block(int i) const {
    return blocks.middleRows(i * d, d);
  }

  Matrix block_sum() const;
  double norm() const { return blocks.norm(); }
  /// max_i ||E_i||_F
  double norm_inf() const;
};

/// E_i <- G_i^T H_i for an embedded tangent H at G. Throws when some
/// G_i^T H_i is not skew (H was not tangent at G).
SkewStack skew_from_tangent(const RotationStack& g, const Matrix& h,
                            bool expect_horizontal = false);

/// H_i <- G_i E_i (embedded representation of the tangent).
Matrix embed_tangent(const RotationStack& g, const SkewStack& e);

/// max_i ||X_i||_F over the d x d blocks of an nd x d matrix.
double block_norm_inf(const Matrix& x, int n, int d);

// ---------------------------------------------------------------------------
// STACK v1 text format: header "n d group", then n*d rows of d floats.
// ---------------------------------------------------------------------------

void write_stack(std::ostream& os, const RotationStack& g);
void write_stack_file(const std::string& path, const RotationStack& g);
RotationStack read_stack(std::istream& is);
RotationStack read_stack_file(const std::string& path);

}  // namespace rotsync
