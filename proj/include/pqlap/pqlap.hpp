#pragma once

#include "pqlap/core.hpp"
#include "pqlap/eigensolver.hpp"
#include "pqlap/fields.hpp"
#include "pqlap/functionals.hpp"
#include "pqlap/mesh.hpp"
#include "pqlap/nonlinearity.hpp"
#include "pqlap/picone.hpp"
#include "pqlap/resonance.hpp"
