#ifndef BADER_BADER_HPP
#define BADER_BADER_HPP

#include "adaptive_mh.hpp"
#include "counts.hpp"
#include "diagnostics.hpp"
#include "distributions.hpp"
#include "enrichment.hpp"
#include "lognormal_sampler.hpp"
#include "model.hpp"
#include "negbinom_sampler.hpp"
#include "parallel.hpp"
#include "posterior.hpp"
#include "rng.hpp"
#include "simulation.hpp"

namespace bader {

inline constexpr const char* version = "0.1.0";

}

#endif
