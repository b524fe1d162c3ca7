#pragma once

#include "ergoflow/noise.hpp"

namespace ergoflow {

/// Ornstein-Uhlenbeck parameters: dX = sigma0 db - beta X dt.
struct OuParams {
    double beta = 1.0;
    double sigma0 = 1.0;
};

/// Exact discrete OU flow on the path's grid:
/// x e^{-beta T} + sigma0 sum_i e^{beta(t_i - T)} db_i (left-point sum).
/// This is the strong-error reference: exact for the grid-restricted noise.
double ou_exact_flow(const OuParams& p, const NoisePath& path, double x0, double T);

struct OuXinf {
    double value = 0.0;
    double truncation_bound = 0.0; // 3 std devs of the discarded tail
};

/// Stagnation point xinf = -sigma0 int_0^inf e^{-beta tau} db, truncated at T_max.
OuXinf ou_exact_xinf(const OuParams& p, const NoisePath& path, double T_max);

/// Stationary sharp trajectory through xinf:
/// X_sharp_t(xinf) = -sigma0 e^{beta t} sum_{t_i >= t} e^{-beta t_i} db_i,
/// truncated at T_max.
double ou_stationary_sharp(const OuParams& p, const NoisePath& path, double t, double T_max);

} // namespace ergoflow
