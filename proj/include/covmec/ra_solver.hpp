// SPDX-License-Identifier: Apache-2.0
//
// Per-slot joint beamforming / sensing covariance / CPU / time allocation by
// successive convex approximation with exponential substitutions.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "covmec/conic.hpp"
#include "covmec/metrics.hpp"

namespace covmec {

/// Tangent-line under-estimator of exp at xt: e^xt (1 + x - xt).
double kappa(double x, double xt);

/// Which degrees of freedom the allocation may use.
struct RaVariant {
    /// Beam directions fixed to `directions[k]` (unit norm); only powers vary.
    bool fixed_directions = false;
    std::vector<CVec> directions;
    /// Sensing covariances restricted to beta * I.
    bool isotropic_sensing = false;
    /// Pin t0 = time_ratio * t1.
    bool fixed_time_ratio = false;
    double time_ratio = 4.0;
    /// Local CPU frequencies pinned to zero.
    bool full_offload = false;
};

struct RaSettings {
    double tolerance = 1e-4;  // relative objective decrease that stops SCA
    int max_iterations = 30;
    double residual_tol = 1e-6;
    ConicSettings conic;
    RaVariant variant;
    /// Per-slot beam directions for fixed-direction variants ([slot][k]);
    /// when non-empty they replace variant.directions slot by slot.
    std::vector<std::vector<CVec>> slot_directions;
};

/// Linearisation point in log / auxiliary coordinates, plus the allocation
/// it was lifted from. Internal units: powers in W, channels divided by the
/// receiver noise standard deviation, CPU in GHz, cycles in Gcycles.
struct RaIterate {
    SlotAllocation alloc;
    double tau0 = 0.0, tau1 = 0.0;
    std::vector<double> z;       // [k] ln f_u (GHz)
    std::vector<double> a0, a1;  // [q]
    double b = 0.0;
    std::vector<std::vector<double>> r, gamma, zeta;  // [k][q]
    double p0 = 0.0, p1 = 0.0, p2 = 0.0;
    double energy = 0.0;  // exact slot energy of alloc (J)
};

struct RaTraceEntry {
    int iteration = 0;
    double energy = 0.0;       // exact slot energy after the step (J)
    double program_objective = 0.0;
    double gap_bound = 0.0;
    double max_residual = 0.0;  // original per-slot constraints
    int newton_steps = 0;
    std::string solver_status;
};

struct RaResult {
    SlotAllocation alloc;
    double energy = 0.0;
    std::vector<RaTraceEntry> trace;
    bool restored = false;  // initial point needed the restoration phase
    double max_residual = 0.0;
};

/// Normalised data of one slot shared by the program builders.
class SlotModel {
public:
    SlotModel(const SlotView& view, const RaVariant& variant);

    const SlotView& view() const { return view_; }
    const RaVariant& variant() const { return variant_; }
    int K() const { return K_; }
    int Q() const { return Q_; }
    int L() const { return L_; }

    /// Orthonormal basis of the directions that sensing covariances act on.
    const CMat& sensing_basis() const { return basis_; }

    RaIterate lift(const SlotAllocation& a) const;

    // Internal-unit data (public for the builders and tests).
    std::vector<CMat> Hn;               // [k]
    std::vector<CMat> An;               // [k] Hn^H Hn
    std::vector<CMat> Gb;               // [q] (G / sigma_R) B
    std::vector<std::vector<CVec>> hn;  // [l][k]
    std::vector<CVec> gb;               // [l] B^H g / sigma_l
    std::vector<double> g_norm2;        // [l] ||g||^2 / sigma_l^2
    std::vector<double> G_norm2;        // [q] ||G||_F^2 / sigma_R^2
    double noise = 0.0;                 // M N_R
    double dt = 0.0;
    std::vector<double> need;           // [k] I D (Gcycles)
    std::vector<double> bd;             // [k] B D (Gcycles / s)
    double fl_max = 0.0, fu_max = 0.0;  // GHz
    double vl = 0.0, vu = 0.0;          // capacitance * 1e27
    double mu_max = 0.0;

    double tau_min() const;
    double z_min() const;

private:
    SlotView view_;
    RaVariant variant_;
    int K_ = 0, Q_ = 0, L_ = 0;
    CMat basis_;
};

/// Program around `it` together with the handles needed to read it back.
struct P12 {
    ConicProgram program;
    Eigen::VectorXd start;  // it expressed in program variables
    std::optional<Var> slack;

    SlotAllocation extract(const Eigen::VectorXd& x) const;

    // Handles (internal).
    std::vector<ComplexVecExpr> w;
    HermitianExpr X0, X1;
    std::vector<LinExpr> f_local;
    LinExpr tau0, tau1;
    std::vector<Var> z;
    const SlotModel* model = nullptr;
};

/// Builds the convex restriction at `it`. With `restoration` set, the three
/// requirement families (sensing, offloaded bits, edge cycles) get a shared
/// relative slack variable that is minimised instead of the energy.
P12 build_p12(const SlotModel& model, const RaIterate& it, bool restoration = false);

/// Feasible starting point: direct construction, then a slack-minimising
/// restoration loop when needed. Throws InfeasibleError naming the family.
RaIterate initialize_feasible(const SlotModel& model, const RaSettings& settings, bool* restored = nullptr);

/// SCA loop for one slot. `warm`, when feasible, replaces the constructed start.
RaResult sca_solve(const SlotView& view, const RaSettings& settings, const SlotAllocation* warm = nullptr);

/// All slots, independently, on up to `jobs` threads.
std::vector<RaResult> solve_all_slots(const ScenarioConfig& s, const ChannelSet& ch, const RaSettings& settings,
                                      const ResourceAllocation* warm = nullptr, int jobs = 1);

/// Exact slot residuals of the per-slot constraint subset.
ResidualReport slot_residuals(const SlotAllocation& a, const SlotView& v);

}  // namespace covmec
