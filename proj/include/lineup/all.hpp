#pragma once

// Everything except the HTTP layer (lineup/http.hpp), which pulls in httplib.

#include "lineup/dataset.hpp"
#include "lineup/diagnostics.hpp"
#include "lineup/error.hpp"
#include "lineup/io.hpp"
#include "lineup/lineup.hpp"
#include "lineup/models.hpp"
#include "lineup/normal.hpp"
#include "lineup/nulls.hpp"
#include "lineup/panel.hpp"
#include "lineup/random.hpp"
#include "lineup/service.hpp"
#include "lineup/sha256.hpp"
#include "lineup/svg.hpp"
