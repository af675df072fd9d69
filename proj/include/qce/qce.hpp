#pragma once

#include "qce/cat_oracle.hpp"
#include "qce/chart.hpp"
#include "qce/estimator.hpp"
#include "qce/experiment.hpp"
#include "qce/floquet.hpp"
#include "qce/fourier.hpp"
#include "qce/grid.hpp"
#include "qce/heisenberg.hpp"
#include "qce/version.hpp"
