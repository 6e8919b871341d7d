// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vtedit/attributes.hpp"
#include "vtedit/banks.hpp"
#include "vtedit/catalog.hpp"
#include "vtedit/clients.hpp"
#include "vtedit/error.hpp"
#include "vtedit/evaluate.hpp"
#include "vtedit/http_clients.hpp"
#include "vtedit/image.hpp"
#include "vtedit/instructions.hpp"
#include "vtedit/jsonl.hpp"
#include "vtedit/manifest.hpp"
#include "vtedit/mask.hpp"
#include "vtedit/metrics.hpp"
#include "vtedit/mock_backends.hpp"
#include "vtedit/pipeline.hpp"
#include "vtedit/review_server.hpp"
#include "vtedit/rng.hpp"
#include "vtedit/verification.hpp"
