#pragma once

#include "nsfd/caputo_l1.hpp"
#include "nsfd/csv.hpp"
#include "nsfd/denominator.hpp"
#include "nsfd/errors.hpp"
#include "nsfd/fractional_order.hpp"
#include "nsfd/ivp.hpp"
#include "nsfd/locus.hpp"
#include "nsfd/mittag_leffler.hpp"
#include "nsfd/tfde.hpp"
#include "nsfd/weights.hpp"
