#pragma once

#include "pfvp/numeric.hpp"
#include "pfvp/modal_coef.hpp"
#include "pfvp/spectral_core.hpp"
#include "pfvp/semigroup.hpp"
#include "pfvp/etd.hpp"
#include "pfvp/duhamel.hpp"
#include "pfvp/fvp.hpp"
#include "pfvp/boundary_heat.hpp"
#include "pfvp/generator_lab.hpp"
#include "pfvp/fd_oracle.hpp"
#include "pfvp/config.hpp"
