#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "lkl/grid.hpp"
#include "lkl/target_family.hpp"

namespace lkl {

// Terms of the relative-entropy dissipation identity along a flow q_t
// towards a moving target p_t:
//
//   d/dt KL(q_t | p_t) = - I(q_t | p_t) - E_{q_t}[ d/dt log p_t ]
//   I(q | p)          = integral of q |grad log(q / p)|^2
//
// All integrals are midpoint sums over grid cells (p evaluated at cell
// centres), reduced in index order.

// Cells with q below this contribute nothing to KL (0 log 0 = 0).
inline constexpr double kZeroDensityFloor = 1e-300;
// Cells with q below this are excluded from the Fisher integrand.
inline constexpr double kFisherFloor = 1e-12;
inline constexpr double kExcludedMassWarning = 1e-6;
inline constexpr double kExcludedMassError = 1e-3;
// Negative KL below this is clamped to zero and flagged.
inline constexpr double kNegativeKlTolerance = 1e-12;
inline constexpr double kResidualScaleFloor = 1e-8;

double kl_divergence(const GridDensity& q, const TargetFamily& family);

struct FisherInformation {
  double value = 0.0;
  double excluded_mass = 0.0;
  bool warning = false;  // excluded mass above kExcludedMassWarning
};

// grad log q from central differences of log q (one-sided at the boundary
// and next to empty cells). Throws NumericalError if the excluded mass
// exceeds kExcludedMassError.
FisherInformation relative_fisher_information(const GridDensity& q,
                                              const TargetFamily& family);

double expected_dt_log_p(const GridDensity& q, const TargetFamily& family);

struct DiagnosticsRecord {
  double t = 0.0;
  double kl = 0.0;
  double fisher = 0.0;
  double dt_term = 0.0;
  std::optional<double> kl_fd;
  std::optional<double> residual;
  std::optional<double> relative_residual;
  double excluded_mass = 0.0;
  bool kl_clamped = false;
};

DiagnosticsRecord compute_record(const GridDensity& q,
                                 const TargetFamily& family);

// Central differences (kl[i+1] - kl[i-1]) / (t[i+1] - t[i-1]) at interior
// records; endpoints stay empty. Needs >= 3 records with strictly
// increasing t.
void kl_time_derivative_fd(std::vector<DiagnosticsRecord>& records);

struct IdentitySummary {
  double max_abs_residual = 0.0;
  double max_relative_residual = 0.0;
  double t_at_max_relative = 0.0;
  std::size_t evaluated = 0;
};

// residual = kl_fd + fisher + dt_term, relative to
// max(fisher, |dt_term|, kResidualScaleFloor). Records without kl_fd are
// skipped.
IdentitySummary verify_identity(std::vector<DiagnosticsRecord>& records);

struct EnvelopeViolation {
  std::vector<double> x;
  double q = 0.0;
  double bound = 0.0;
  bool lower = false;  // which side of the sandwich failed
};

struct EnvelopeReport {
  double c1 = 0.0;
  double c2 = 0.0;
  bool satisfied = true;
  std::optional<EnvelopeViolation> worst_violation;
};

// Checks exp(-c1 (|x|^2 + 1)) <= q(x) <= exp(-c2 |x|^2) at every cell
// centre. The worst violation is the one with the largest log-ratio
// excess; a zero cell violates the lower bound by an infinite amount.
EnvelopeReport check_envelope(const GridDensity& q, double c1, double c2);

// Columns: t,kl,fisher,dt_term,kl_fd,residual,relative_residual,excluded_mass
// Absent values are empty fields.
void write_records_csv(std::ostream& os,
                       const std::vector<DiagnosticsRecord>& records);
std::vector<DiagnosticsRecord> read_records_csv(std::istream& is);

}  // namespace lkl
