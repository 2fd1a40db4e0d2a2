#pragma once

#include "deonpol/errors.hpp"
#include "deonpol/format.hpp"
#include "deonpol/mdp.hpp"
#include "deonpol/model_io.hpp"
#include "deonpol/oracle.hpp"
#include "deonpol/pctl/checker.hpp"
#include "deonpol/pctl/formula.hpp"
#include "deonpol/pctl/parser.hpp"
#include "deonpol/rng.hpp"
#include "deonpol/stit.hpp"
#include "deonpol/synth.hpp"
#include "deonpol/workbench.hpp"
