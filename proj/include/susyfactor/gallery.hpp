// Built-in example operators. Four are plain spec files (their TOML text is
// documented in the README); the two-wells example is built programmatically
// through the cutoff-perturbation constructor. The kfp theta is solved from a
// one-point linear system at build time so the gallery tracks the wedge
// normalization instead of hardcoding a sign.

#pragma once

#include <susyfactor/pipeline.hpp>

#include <string>
#include <vector>

namespace susyfactor {

std::vector<std::string> gallery_names();
bool is_gallery_name(const std::string& name);

/// Spec for "witten", "kfp", "r3-example", "alpha-linear".
SpecFile gallery_spec(const std::string& name);

/// Raw spec text for the TOML-backed galleries.
std::string gallery_toml(const std::string& name);

/// The double-well cutoff perturbation with fixed parameters
/// (phi = (x1^2-1)^2 + x2^2, sigma = 1, eps = 0.45, profile t*bump(t,0.3,0.5),
/// theta = wedge(e1,e2), seed in the right well).
PerturbationGallery build_two_wells_gallery();

/// Runs the appropriate pipeline for any gallery name.
RunResult run_gallery(const std::string& name);

/// Solves the constant-theta one-point matching for alpha(t) = t:
/// U + A d(phi-psi) = -2 theta dphihat at x0, least squares over the strict
/// upper entries of theta.
Bivector solve_constant_theta(const OperatorSpec& op, const Vec& x0, double h);

}  // namespace susyfactor
