#pragma once

#include "cardinality.hpp"
#include "error.hpp"
#include "fingerprint.hpp"
#include "ncd.hpp"
#include "oracle.hpp"
#include "rlbwt.hpp"
#include "sketch.hpp"
#include "stream.hpp"
