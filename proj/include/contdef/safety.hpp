#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "contdef/errors.hpp"
#include "contdef/formation.hpp"
#include "contdef/geometry.hpp"

namespace contdef {

/// Margins entering the deformation safety bound. With D_s the minimum
/// initial inter-agent separation and D_b the minimum initial follower
/// clearance to the leading-triangle boundary,
///   delta_max = min{(D_s - 2 eps)/2, D_b - eps}
/// and the admissible contraction floor is
///   lambda_min = (delta + eps) / (delta_max + eps).
struct SafetyMargins {
  double d_s = 0.0;
  double d_b = 0.0;
  double d_l = 0.0;  // bounding-triangle side offset, delta + eps
  double delta_max = 0.0;
  double lambda_min = 0.0;
};

struct BoundingTriangle {
  Triangle vertices;
};

inline SafetyMargins compute_margins(const FormationSpec& spec) {
  auto agents = spec.agents();
  double d_s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      d_s = std::min(d_s, distance(spec.initial_positions.at(agents[i]),
                                   spec.initial_positions.at(agents[j])));
    }
  }
  Triangle lt = spec.leader_triangle();
  double d_b = std::numeric_limits<double>::infinity();
  for (int f : spec.followers) {
    double clearance = signed_boundary_distance(spec.initial_positions.at(f), lt);
    if (clearance <= 0.0) {
      throw FollowerOutsideTriangle("follower " + std::to_string(f) +
                                    " does not start strictly inside the leading triangle");
    }
    d_b = std::min(d_b, clearance);
  }
  SafetyMargins m;
  m.d_s = d_s;
  m.d_b = d_b;
  m.d_l = spec.delta_m + spec.epsilon_m;
  m.delta_max = std::min((d_s - 2.0 * spec.epsilon_m) / 2.0, d_b - spec.epsilon_m);
  if (m.delta_max <= 0.0) {
    throw InfeasibleMargins("delta_max <= 0: agents too close or followers too near the boundary");
  }
  m.lambda_min = (spec.delta_m + spec.epsilon_m) / (m.delta_max + spec.epsilon_m);
  return m;
}

/// Singular values of the deformation Jacobian Q, ascending. These are the
/// eigenvalues of (Q^T Q)^{1/2}, obtained from the closed-form 2x2
/// eigendecomposition of the symmetric matrix Q^T Q.
inline std::pair<double, double> deformation_eigenvalues(const HomogeneousTransform& t) {
  const Mat2& q = t.q;
  if (std::abs(q.det()) < 1e-12) {
    throw SingularTransform("deformation matrix is singular");
  }
  double a = q.m00 * q.m00 + q.m10 * q.m10;
  double b = q.m00 * q.m01 + q.m10 * q.m11;
  double c = q.m01 * q.m01 + q.m11 * q.m11;
  double half_tr = 0.5 * (a + c);
  double disc = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  double lo = half_tr - disc;
  double hi = half_tr + disc;
  if (lo < 0.0) lo = 0.0;  // guard rounding
  return {std::sqrt(lo), std::sqrt(hi)};
}

struct CertificateSample {
  double t = 0.0;
  double lambda1 = 0.0;  // smaller singular value
  double lambda2 = 0.0;
  bool ok = false;
};

struct CertificateReport {
  SafetyMargins margins;
  std::vector<CertificateSample> samples;
  double worst_lambda = 0.0;
  double worst_t = 0.0;
  double margin = 0.0;  // worst_lambda - lambda_min
  bool pass = false;
  std::vector<std::string> guarantees;
};

/// Checks the contraction floor at every sampled transform. Passes iff
/// min(lambda1, lambda2) >= lambda_min at every sample (to 1e-12); on pass
/// the report lists the guarantees that hold provided each vehicle stays
/// within delta of its global desired position.
inline CertificateReport certify_plan(const FormationSpec& spec,
                                      const std::vector<TimedTransform>& transforms) {
  CertificateReport report;
  report.margins = compute_margins(spec);
  report.worst_lambda = std::numeric_limits<double>::infinity();
  report.samples.reserve(transforms.size());
  bool pass = !transforms.empty();
  for (const auto& tt : transforms) {
    auto [l1, l2] = deformation_eigenvalues(tt.ht);
    bool ok = std::min(l1, l2) >= report.margins.lambda_min - 1e-12;
    report.samples.push_back({tt.t, l1, l2, ok});
    if (l1 < report.worst_lambda) {
      report.worst_lambda = l1;
      report.worst_t = tt.t;
    }
    pass = pass && ok;
  }
  report.margin = report.worst_lambda - report.margins.lambda_min;
  report.pass = pass;
  if (pass) {
    report.guarantees = {
        "no inter-agent collision (pairwise separation > 2*epsilon)",
        "followers remain inside the leading triangle",
        "all agents remain inside the bounding triangle",
        "valid while every vehicle tracks within delta of its desired position",
    };
  }
  return report;
}

/// Bounding triangle: dilation of the leading triangle about its centroid,
/// scaled so every side moves outward by at least D_l (exactly D_l for the
/// side nearest the centroid, hence exact for equilateral triangles).
inline BoundingTriangle bounding_triangle(const Triangle& leading, double d_l) {
  if (triangle_area(leading[0], leading[1], leading[2]) < kCollinearAreaTol) {
    throw CollinearLeaders("leading triangle is degenerate");
  }
  Vec2 c = triangle_centroid(leading);
  double g_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    g_min = std::min(g_min, point_segment_distance(c, leading[i], leading[(i + 1) % 3]));
  }
  double k = 1.0 + d_l / g_min;
  BoundingTriangle out;
  for (int i = 0; i < 3; ++i) out.vertices[i] = c + k * (leading[i] - c);
  return out;
}

inline std::string render_certificate(const CertificateReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "safety certificate: " << (r.pass ? "PASS" : "FAIL") << "\n"
     << "  D_s        = " << r.margins.d_s << " m\n"
     << "  D_b        = " << r.margins.d_b << " m\n"
     << "  D_l        = " << r.margins.d_l << " m\n"
     << "  delta_max  = " << r.margins.delta_max << " m\n"
     << "  lambda_min = " << r.margins.lambda_min << "\n"
     << "  samples    = " << r.samples.size() << "\n"
     << "  worst min singular value " << r.worst_lambda << " at t = " << r.worst_t
     << " s (margin " << r.margin << ")\n";
  if (r.pass) {
    os << "  guarantees:\n";
    for (const auto& g : r.guarantees) os << "    - " << g << "\n";
  } else {
    std::size_t bad = 0;
    for (const auto& s : r.samples) bad += s.ok ? 0 : 1;
    os << "  violated at " << bad << " of " << r.samples.size() << " samples\n";
  }
  return os.str();
}

}  // namespace contdef
