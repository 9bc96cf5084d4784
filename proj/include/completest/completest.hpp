#pragma once

#include "completest/backend/cache.hpp"
#include "completest/backend/dispatch.hpp"
#include "completest/backend/http.hpp"
#include "completest/backend/stub.hpp"
#include "completest/backend/types.hpp"
#include "completest/corpus.hpp"
#include "completest/harness/campaign.hpp"
#include "completest/harness/report.hpp"
#include "completest/metrics.hpp"
#include "completest/mutate.hpp"
#include "completest/oracle.hpp"
#include "completest/repair.hpp"
#include "completest/syntax/distance.hpp"
#include "completest/syntax/lexer.hpp"
#include "completest/syntax/parser.hpp"
#include "completest/syntax/scope.hpp"
#include "completest/syntax/tree.hpp"
