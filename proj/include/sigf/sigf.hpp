#pragma once

#include "sigf/cluster.hpp"
#include "sigf/config.hpp"
#include "sigf/coupling.hpp"
#include "sigf/decompose.hpp"
#include "sigf/dgff.hpp"
#include "sigf/error.hpp"
#include "sigf/experiment.hpp"
#include "sigf/extremal.hpp"
#include "sigf/field.hpp"
#include "sigf/field_io.hpp"
#include "sigf/gaussian.hpp"
#include "sigf/gausscmp.hpp"
#include "sigf/green.hpp"
#include "sigf/inhomogeneous.hpp"
#include "sigf/lattice.hpp"
#include "sigf/perturb.hpp"
#include "sigf/potential_kernel.hpp"
#include "sigf/profile.hpp"
#include "sigf/rng.hpp"
#include "sigf/stats.hpp"
#include "sigf/three_field.hpp"
