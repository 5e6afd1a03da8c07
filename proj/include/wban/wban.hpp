#pragma once

#include "wban/channel.hpp"
#include "wban/config.hpp"
#include "wban/engine.hpp"
#include "wban/error.hpp"
#include "wban/harness.hpp"
#include "wban/metrics.hpp"
#include "wban/packet.hpp"
#include "wban/ppvg.hpp"
#include "wban/reliability.hpp"
#include "wban/rng.hpp"
#include "wban/strategies.hpp"
#include "wban/topology.hpp"
