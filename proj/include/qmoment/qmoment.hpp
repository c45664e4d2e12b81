#ifndef QMOMENT_QMOMENT_HPP
#define QMOMENT_QMOMENT_HPP

#include "qmoment/amplifier.hpp"
#include "qmoment/combinatorics.hpp"
#include "qmoment/error.hpp"
#include "qmoment/evolution.hpp"
#include "qmoment/fock_oracle.hpp"
#include "qmoment/hermite.hpp"
#include "qmoment/io.hpp"
#include "qmoment/moment_table.hpp"
#include "qmoment/moments.hpp"
#include "qmoment/rng.hpp"
#include "qmoment/simulate.hpp"
#include "qmoment/state_spec.hpp"
#include "qmoment/tomography.hpp"
#include "qmoment/uncertainty.hpp"

#endif  // QMOMENT_QMOMENT_HPP
