#pragma once

// Two-subsystem small-gain certificate with the antidiagonal connection
// matrix Z = [[0, 1], [1, 0]].

#include "pscert/core.hpp"

namespace pscert {

struct SubsystemSummary {
    double beta = 0.0, gamma = 0.0, v = 0.0, w = 0.0;
};

struct SmallGainVerdict {
    enum class Outcome { stable, small_gain_failed, boundary_failed, out_of_region };

    Eigen::Matrix2d Z = (Eigen::Matrix2d() << 0, 1, 1, 0).finished();
    Eigen::Matrix2d G_L = Eigen::Matrix2d::Zero();
    double rho = 0.0;
    bool small_gain = false;
    std::optional<Eigen::Vector2d> boundary;  // Z (I - G_L)^{-1} diag(beta) xi
    bool boundary_ok = false;
    bool in_region = true;
    Outcome outcome = Outcome::small_gain_failed;

    bool certified() const { return outcome == Outcome::stable; }

    static const char* name(Outcome o) {
        switch (o) {
            case Outcome::stable: return "asymptotically-stable";
            case Outcome::small_gain_failed: return "small-gain-failed";
            case Outcome::boundary_failed: return "boundary-failed";
            default: return "out-of-region";
        }
    }
};

inline SmallGainVerdict small_gain_check(const SubsystemSummary& p1, const SubsystemSummary& p2, double xi1,
                                         double xi2) {
    SmallGainVerdict v;
    v.G_L = Eigen::Vector2d(p1.gamma, p2.gamma).asDiagonal() * v.Z;
    v.rho = std::sqrt(p1.gamma * p2.gamma);
    v.small_gain = v.rho < 1.0;
    v.in_region = xi1 <= p1.v && xi2 <= p2.v;
    if (!v.small_gain) {
        v.outcome = SmallGainVerdict::Outcome::small_gain_failed;
        return v;
    }
    const Eigen::Vector2d b(p1.beta * xi1, p2.beta * xi2);
    const Eigen::Vector2d r = (Eigen::Matrix2d::Identity() - v.G_L).inverse() * b;
    v.boundary = v.Z * r;
    v.boundary_ok = (*v.boundary)(0) <= p1.w && (*v.boundary)(1) <= p2.w;
    if (!v.in_region)
        v.outcome = SmallGainVerdict::Outcome::out_of_region;
    else
        v.outcome = v.boundary_ok ? SmallGainVerdict::Outcome::stable : SmallGainVerdict::Outcome::boundary_failed;
    return v;
}

}  // namespace pscert
