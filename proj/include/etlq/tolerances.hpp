#pragma once

#include <cstdlib>
#include <string>

namespace etlq {

/// Numeric tolerance bundle shared by all solvers. Defaults are the documented
/// project-wide values; every field can be overridden through an ETLQ_TOL_*
/// environment variable (see from_env).
struct Tolerances {
  double psd = 1e-9;       ///< smallest eigenvalue bound for PSD checks
  double pd = 1e-12;       ///< smallest eigenvalue bound for PD checks
  double dyn = 1e-7;       ///< dynamics residual, infinity norm
  double mem = 1e-9;       ///< polyhedron membership slack
  double zero = 1e-9;      ///< "this input is zero" threshold
  double strict = 1e-9;    ///< strict-interior margin at the trigger boundary
  double cost_rel = 1e-6;  ///< relative cost comparisons / tie windows
  double feas = 1e-7;      ///< constraint feasibility (phase-1 certificate)
  double kkt = 1e-6;       ///< KKT residual bound for optimal QP results
  double lin = 1e-8;       ///< linear-solve relative residual

  /// Absolute tie window around a reference cost.
  double cost_window(double reference) const {
    double mag = reference < 0 ? -reference : reference;
    return cost_rel * (mag > 1.0 ? mag : 1.0);
  }

  static Tolerances from_env() {
    Tolerances t;
    auto load = [](const char* name, double& field) {
      if (const char* v = std::getenv(name)) field = std::strtod(v, nullptr);
    };
    load("ETLQ_TOL_PSD", t.psd);
    load("ETLQ_TOL_PD", t.pd);
    load("ETLQ_TOL_DYN", t.dyn);
    load("ETLQ_TOL_MEM", t.mem);
    load("ETLQ_TOL_ZERO", t.zero);
    load("ETLQ_TOL_STRICT", t.strict);
    load("ETLQ_TOL_COST_REL", t.cost_rel);
    load("ETLQ_TOL_FEAS", t.feas);
    load("ETLQ_TOL_KKT", t.kkt);
    load("ETLQ_TOL_LIN", t.lin);
    return t;
  }
};

}  // namespace etlq
