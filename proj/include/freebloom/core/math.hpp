#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace freebloom {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerically stable softmax (max-subtracted). Throws InvalidArgument on
/// empty or non-finite input.
std::vector<double> softmax(std::span<const double> logits);

/// Row-wise softmax in place, via the scalar softmax above.
void softmax_rows(Matrix& logits);

} // namespace freebloom
