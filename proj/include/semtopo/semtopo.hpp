#pragma once

#include "semtopo/chunking.hpp"
#include "semtopo/corpus.hpp"
#include "semtopo/embedder.hpp"
#include "semtopo/error.hpp"
#include "semtopo/geometry.hpp"
#include "semtopo/index.hpp"
#include "semtopo/io.hpp"
#include "semtopo/neighborhood.hpp"
#include "semtopo/parallel.hpp"
#include "semtopo/persistence.hpp"
#include "semtopo/random.hpp"
#include "semtopo/simulation.hpp"
#include "semtopo/stats.hpp"
#include "semtopo/svg.hpp"
