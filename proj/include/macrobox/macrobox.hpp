#pragma once

#include "macrobox/boxes.hpp"
#include "macrobox/distribution.hpp"
#include "macrobox/ensemble.hpp"
#include "macrobox/error.hpp"
#include "macrobox/jacobi.hpp"
#include "macrobox/macro.hpp"
#include "macrobox/pr_closed_form.hpp"
#include "macrobox/rational.hpp"
#include "macrobox/symmetry.hpp"
