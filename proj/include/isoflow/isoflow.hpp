#ifndef ISOFLOW_ISOFLOW_HPP
#define ISOFLOW_ISOFLOW_HPP

#include "isoflow/asymptotics.hpp"
#include "isoflow/catalog.hpp"
#include "isoflow/characteristics.hpp"
#include "isoflow/core.hpp"
#include "isoflow/fields.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/serialize.hpp"
#include "isoflow/torus.hpp"
#include "isoflow/transport.hpp"

#endif  // ISOFLOW_ISOFLOW_HPP
