#pragma once

#include "mcfusion/diffusion.hpp"
#include "mcfusion/evaluate.hpp"
#include "mcfusion/fusion.hpp"
#include "mcfusion/links.hpp"
#include "mcfusion/optimize.hpp"
#include "mcfusion/presets.hpp"
#include "mcfusion/random.hpp"
#include "mcfusion/simulate.hpp"
