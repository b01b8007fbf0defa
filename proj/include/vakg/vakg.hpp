#pragma once

// Umbrella header: the full engine. Individual headers can be included
// separately; service.hpp is left out because it pulls in the HTTP
// stack.

#include <vakg/analytics.hpp>
#include <vakg/canonical.hpp>
#include <vakg/event.hpp>
#include <vakg/graph.hpp>
#include <vakg/ingest.hpp>
#include <vakg/sha256.hpp>
#include <vakg/simulator.hpp>
#include <vakg/storage.hpp>
#include <vakg/time.hpp>
#include <vakg/types.hpp>
