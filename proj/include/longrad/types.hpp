#pragma once

#include <complex>
#include <cstdint>
#include <Eigen/Dense>

namespace longrad {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// In-plane rigid motion between imaging sessions. Translation is the
// displacement of image content in pixels (+dx right, +dy down in row-major
// image coordinates); dtheta rotates the sampling pattern. Applied to radial
// k-space as a per-sample phase ramp plus a spoke-angle offset, never by
// image interpolation.
struct RigidTransform {
    double dx = 0.0;
    double dy = 0.0;
    double dtheta = 0.0;
    // Normalized phase-correlation peak; below-threshold peaks fall back to
    // identity with low_confidence set.
    double peak_score = 0.0;
    bool low_confidence = false;

    RigidTransform inverse() const { return {-dx, -dy, -dtheta, peak_score, low_confidence}; }
};

} // namespace longrad
